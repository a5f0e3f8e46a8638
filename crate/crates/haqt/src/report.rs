//! Benchmark report emission: CSV table, JSON with per-trial detail and an
//! SVG log-log plot. Every file is written to a temporary sibling first and
//! renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use haqt_core::bench::{BenchReport, PointSummary};
use haqt_core::protocols::Protocol;
use serde::Serialize;

use crate::error::{AppError, AppResult};
use crate::formats::{to_json_string, StateDoc};

pub const CSV_HEADER: &str = "protocol,dim,N,trials,mean_infidelity,std_error,gm_bound,alpha_bound";

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut tmp = tempfile::Builder::new().prefix(".haqt-").tempfile_in(dir).map_err(|e| AppError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| AppError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

pub fn report_csv(report: &BenchReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in &report.points {
        writeln!(
            s,
            "{},{},{},{},{:e},{:e},{:e},{:e}",
            p.protocol.as_str(),
            report.dim,
            p.shots,
            p.trials,
            p.mean_infidelity,
            p.std_error,
            p.gm_bound,
            p.alpha_bound
        )
        .expect("string write");
    }
    s
}

#[derive(Serialize)]
struct TrialDoc {
    trial: usize,
    seed: u64,
    infidelity: f64,
    exact_infidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage1_infidelity: Option<f64>,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct PointDoc {
    protocol: &'static str,
    #[serde(rename = "N")]
    shots: u64,
    trials: usize,
    mean_infidelity: f64,
    std_error: f64,
    gm_bound: f64,
    alpha_bound: f64,
    records: Vec<TrialDoc>,
}

#[derive(Serialize)]
struct ReportDoc {
    dim: usize,
    spec_fingerprint: String,
    master_seed: u64,
    version: &'static str,
    bounds_applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds_note: Option<&'static str>,
    truth: StateDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    proxy_truth: Option<StateDoc>,
    points: Vec<PointDoc>,
}

fn point_doc(p: &PointSummary) -> PointDoc {
    PointDoc {
        protocol: p.protocol.as_str(),
        shots: p.shots,
        trials: p.trials,
        mean_infidelity: p.mean_infidelity,
        std_error: p.std_error,
        gm_bound: p.gm_bound,
        alpha_bound: p.alpha_bound,
        records: p
            .records
            .iter()
            .map(|r| TrialDoc {
                trial: r.trial,
                seed: r.seed,
                infidelity: r.infidelity,
                exact_infidelity: r.exact_infidelity,
                stage1_infidelity: r.stage1_infidelity,
                iterations: r.iterations,
                converged: r.converged,
            })
            .collect(),
    }
}

pub fn report_json(report: &BenchReport) -> String {
    let doc = ReportDoc {
        dim: report.dim,
        spec_fingerprint: format!("{:016x}", report.spec_fingerprint),
        master_seed: report.master_seed,
        version: report.version,
        bounds_applicable: report.bounds_applicable,
        bounds_note: (!report.bounds_applicable).then_some("bounds not applicable: rank-deficient"),
        truth: StateDoc::from_state(&report.truth),
        proxy_truth: report.proxy_truth.as_ref().map(StateDoc::from_state),
        points: report.points.iter().map(point_doc).collect(),
    };
    to_json_string(&doc)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn x(&self, n: f64) -> f64 {
        LEFT + (n.log10() - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v.log10() - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn color(p: Protocol) -> &'static str {
    match p {
        Protocol::Sqt => "#c0392b",
        Protocol::Haqt => "#1f4e9c",
    }
}

/// Mean infidelity against `N` on log-log axes, with both bound lines.
pub fn report_svg(report: &BenchReport) -> String {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in &report.points {
        xs.push(p.shots as f64);
        ys.extend([p.gm_bound, p.alpha_bound, p.mean_infidelity + p.std_error]);
        let lo = p.mean_infidelity - p.std_error;
        ys.push(if lo > 0.0 { lo } else { p.mean_infidelity });
    }
    ys.retain(|&v| v > 0.0 && v.is_finite());
    let lmin = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min).log10();
    let lmax = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
    let (mut x0, mut x1) = (lmin(&xs).floor(), lmax(&xs).ceil());
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (y0, mut y1) = if ys.is_empty() { (-6.0, 0.0) } else { (lmin(&ys).floor(), lmax(&ys).ceil()) };
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    if x0 == x1 {
        x0 -= 1.0;
    }
    let ax = Axes { x0, x1, y0, y1 };

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (px0, px1, py0, py1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(w, r#"<rect x="{px0}" y="{py0}" width="{}" height="{}" fill="none" stroke="black"/>"#, px1 - px0, py1 - py0);
    for e in (x0 as i32)..=(x1 as i32) {
        let x = ax.x(10f64.powi(e));
        let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{py1}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, py1 + 5.0);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, py1 + 20.0);
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = ax.y(10f64.powi(e));
        let _ = writeln!(w, r#"<line x1="{:.2}" y1="{y:.2}" x2="{px0}" y2="{y:.2}" stroke="black"/>"#, px0 - 5.0);
        let _ = writeln!(w, r##"<line x1="{px0}" y1="{y:.2}" x2="{px1}" y2="{y:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, px0 - 8.0, y + 4.0);
    }
    let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">N</text>"#, (px0 + px1) / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">mean infidelity</text>"#,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0
    );

    // Bounds depend on N only, so one protocol's points describe them fully.
    let mut grid: Vec<(u64, f64, f64)> = report.points.iter().map(|p| (p.shots, p.gm_bound, p.alpha_bound)).collect();
    grid.sort_by_key(|g| g.0);
    grid.dedup_by_key(|g| g.0);
    let line = |pts: &[(f64, f64)]| pts.iter().map(|(x, y)| format!("{:.2},{:.2}", ax.x(*x), ax.y(*y))).collect::<Vec<_>>().join(" ");
    let gm: Vec<(f64, f64)> = grid.iter().map(|g| (g.0 as f64, g.1)).collect();
    let al: Vec<(f64, f64)> = grid.iter().map(|g| (g.0 as f64, g.2)).collect();
    let _ = writeln!(w, r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="2,3"/>"#, line(&gm));
    let _ = writeln!(w, r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="6,3"/>"#, line(&al));

    let mut protocols: Vec<Protocol> = report.points.iter().map(|p| p.protocol).collect();
    protocols.dedup();
    for proto in &protocols {
        let c = color(*proto);
        let pts: Vec<&PointSummary> = report.points.iter().filter(|p| p.protocol == *proto && p.mean_infidelity > 0.0).collect();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.shots as f64, p.mean_infidelity)).collect();
        let _ = writeln!(w, r#"<polyline points="{}" fill="none" stroke="{c}"/>"#, line(&xy));
        for p in pts {
            let x = ax.x(p.shots as f64);
            let y = ax.y(p.mean_infidelity);
            let lo = p.mean_infidelity - p.std_error;
            let ylo = if lo > 0.0 { ax.y(lo) } else { py1 };
            let yhi = ax.y(p.mean_infidelity + p.std_error);
            let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{ylo:.2}" x2="{x:.2}" y2="{yhi:.2}" stroke="{c}"/>"#);
            let _ = writeln!(w, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{c}"/>"#);
        }
    }

    let lx = px1 + 15.0;
    let mut ly = py0 + 10.0;
    for proto in &protocols {
        let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{ly:.2}" r="3.5" fill="{}"/>"#, lx + 10.0, color(*proto));
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 22.0, ly + 4.0, proto.as_str());
        ly += 20.0;
    }
    for (dash, label) in [("6,3", "alpha bound"), ("2,3", "Gill-Massar bound")] {
        let _ = writeln!(w, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="black" stroke-dasharray="{dash}"/>"#, lx + 18.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, lx + 22.0, ly + 4.0);
        ly += 20.0;
    }
    let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">d = {}</text>"#, lx, ly + 10.0, report.dim);
    s.push_str("</svg>\n");
    s
}

/// Writes `<stem>.csv`, `<stem>.json` and `<stem>.svg` into `dir`.
pub fn emit_report(report: &BenchReport, dir: &Path, stem: &str) -> AppResult<Vec<PathBuf>> {
    let files = [("csv", report_csv(report)), ("json", report_json(report)), ("svg", report_svg(report))];
    let mut written = Vec::new();
    for (ext, body) in files {
        let path = dir.join(format!("{stem}.{ext}"));
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use haqt_core::bench::{run_experiment, ExperimentSpec, StateSource};
    use haqt_core::DensityMatrix;

    fn report() -> BenchReport {
        let mut spec = ExperimentSpec::new(2, StateSource::Fixed(DensityMatrix::diagonal(&[0.8, 0.2]).unwrap()));
        spec.shot_grid = vec![300, 3000];
        spec.trials = 3;
        run_experiment(&spec).unwrap()
    }

    #[test]
    fn csv_has_one_row_per_point_and_exact_bounds() {
        let r = report();
        let csv = report_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 2 * 2);
        for line in &lines[1..] {
            let f: Vec<&str> = line.split(',').collect();
            let n: f64 = f[2].parse().unwrap();
            let gm: f64 = f[6].parse().unwrap();
            assert_eq!(gm, 3.0 * 3.0 / (4.0 * n));
        }
    }

    #[test]
    fn emission_is_deterministic_and_atomic() {
        let r = report();
        let dir = tempfile::tempdir().unwrap();
        let a = emit_report(&r, dir.path(), "x").unwrap();
        let first: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        emit_report(&r, dir.path(), "x").unwrap();
        let second: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        let leftovers = fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with(".haqt-")).count();
        assert_eq!(leftovers, 0);
    }

    #[test]
    fn json_carries_trial_detail() {
        let v: serde_json::Value = serde_json::from_str(&report_json(&report())).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 4);
        assert_eq!(v["points"][1]["records"].as_array().unwrap().len(), 3);
        assert_eq!(v["bounds_applicable"], true);
        assert_eq!(v["points"][3]["protocol"], "HAQT");
    }

    #[test]
    fn svg_draws_both_bound_lines() {
        let svg = report_svg(&report());
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("stroke-dasharray=\"2,3\"").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray=\"6,3\"").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4 + 2);
    }

    #[test]
    fn unwritable_destination_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        assert!(matches!(write_atomic(&blocker.join("out.csv"), b"y"), Err(AppError::Io { .. })));
    }
}
