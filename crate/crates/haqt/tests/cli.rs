use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn haqt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haqt")).current_dir(dir).env_remove("HAQT_OUT_DIR").args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn slit_spec() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/ten_slit.spec")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

#[test]
fn bases_writes_and_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let o = haqt(tmp.path(), &["bases", "--dim", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("bases = 19 (expected 19)"), "{out}");
    assert!(out.contains("rank = 100"), "{out}");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("haqt-out/bases-d10.json")).unwrap()).unwrap();
    assert_eq!(doc["bases"].as_array().unwrap().len(), 19);

    let o = haqt(tmp.path(), &["bases", "--dim", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_dir_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_haqt")).current_dir(tmp.path()).env("HAQT_OUT_DIR", "from-env").args(["bases", "--dim", "2"]).output().unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from-env/bases-d2.json").exists());
    let o = Command::new(env!("CARGO_BIN_EXE_haqt"))
        .current_dir(tmp.path())
        .env("HAQT_OUT_DIR", "from-env")
        .args(["--out-dir", "from-flag", "bases", "--dim", "3"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from-flag/bases-d3.json").exists());
    assert!(!tmp.path().join("from-env/bases-d3.json").exists());
}

#[test]
fn fisher_reports_bounds_and_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    let o = haqt(tmp.path(), &["fisher", "--dim", "10", "--shots", "398100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("gm_bound = 6.8387e-4"), "{out}");
    assert!(out.contains("alpha = 1.7273"), "{out}");
    let qfim = fs::read_to_string(tmp.path().join("haqt-out/fisher-qfim-d10.csv")).unwrap();
    assert_eq!(qfim.lines().count(), 99);
    assert!(qfim.lines().all(|l| l.split(',').count() == 99));
    assert!(tmp.path().join("haqt-out/fisher-cfim-d10.csv").exists());
}

#[test]
fn fisher_rejects_pure_states() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("pure.json"), r#"{"dim": 2, "amplitudes": [[1,0],[0,0]]}"#).unwrap();
    let o = haqt(tmp.path(), &["fisher", "--state", "pure.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("singular"), "{}", stderr(&o));

    let o = haqt(tmp.path(), &["fisher", "--state", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_reconstructs() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "simulate", "--generator", "random-full-rank", "--dim", "3", "--shots", "6000", "--trials", "2", "--save-counts"];
    let o = haqt(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json = tmp.path().join("haqt-out/simulate-haqt-d3-N6000.json");
    let first = fs::read(&json).unwrap();
    assert!(haqt(tmp.path(), &args).status.success());
    assert_eq!(fs::read(&json).unwrap(), first);

    let other = haqt(tmp.path(), &["--seed", "8", "simulate", "--generator", "random-full-rank", "--dim", "3", "--shots", "6000", "--output", "other.json"]);
    assert!(other.status.success());
    assert_ne!(fs::read(tmp.path().join("other.json")).unwrap(), first);

    let sim: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let o = haqt(
        tmp.path(),
        &[
            "reconstruct",
            "--counts",
            "haqt-out/simulate-haqt-d3-N6000-t1-stage1.csv",
            "haqt-out/simulate-haqt-d3-N6000-t1-stage2.csv",
            "--output",
            "rec.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("rec.json")).unwrap()).unwrap();
    assert_eq!(rec["estimate"], sim["results"][1]["estimate"]);
    assert_eq!(rec["shots"], 6000);
}

#[test]
fn malformed_counts_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = haqt(tmp.path(), &["simulate", "--generator", "maximally-mixed", "--dim", "2", "--protocol", "sqt", "--shots", "300", "--save-counts"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = tmp.path().join("haqt-out/simulate-sqt-d2-N300-t0.csv");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last = lines.len() - 1;
    let cut = lines[last].rfind(',').unwrap();
    lines[last] = format!("{},zz", &lines[last][..cut]);
    fs::write(&csv, lines.join("\n") + "\n").unwrap();
    let o = haqt(tmp.path(), &["reconstruct", "--counts", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("row {}", lines.len())), "{}", stderr(&o));
}

#[test]
fn simulate_without_a_state_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = haqt(tmp.path(), &["simulate", "--shots", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = haqt(tmp.path(), &["simulate", "--state", "nope.json", "--shots", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = haqt(tmp.path(), &["simulate", "--generator", "random-pure", "--dim", "4", "--shots", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_dry_run_accepts_the_shipped_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let o = haqt(tmp.path(), &["bench", slit_spec().to_str().unwrap(), "--dry-run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("dim = 10"), "{out}");
    assert!(out.contains("tasks = 400"), "{out}");
    assert!(!tmp.path().join("haqt-out").exists());
}

#[test]
fn bench_output_is_independent_of_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = "dim = 3\nprotocols = [\"sqt\", \"haqt\"]\nshot_grid = [600, 2400]\ntrials = 6\nmaster_seed = 5\n\n[state]\nkind = \"random_full_rank\"\nmin_eigenvalue = 0.05\n";
    fs::write(tmp.path().join("small.spec"), spec).unwrap();
    for (threads, dir) in [("1", "one"), ("4", "four")] {
        let o = haqt(tmp.path(), &["--out-dir", dir, "bench", "small.spec", "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for ext in ["csv", "json", "svg"] {
        let a = fs::read(tmp.path().join(format!("one/bench.{ext}"))).unwrap();
        let b = fs::read(tmp.path().join(format!("four/bench.{ext}"))).unwrap();
        assert_eq!(a, b, "bench.{ext}");
    }
    assert_eq!(listing(&tmp.path().join("one")), ["bench.csv", "bench.json", "bench.svg"]);

    let csv = fs::read_to_string(tmp.path().join("one/bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);

    // --seed overrides the spec's master seed.
    let o = haqt(tmp.path(), &["--seed", "6", "--out-dir", "reseeded", "bench", "small.spec"]);
    assert!(o.status.success());
    assert_ne!(fs::read(tmp.path().join("reseeded/bench.csv")).unwrap(), csv.as_bytes());
}

#[test]
fn bench_rejects_invalid_specs() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.spec"), "dim = 3\nprotocols = [\"haqt\"]\nshot_grid = [10]\ntrials = 1\n[state]\nkind = \"random_pure\"\n").unwrap();
    let o = haqt(tmp.path(), &["bench", "bad.spec"]);
    assert_eq!(o.status.code(), Some(2));
    let o = haqt(tmp.path(), &["bench", "absent.spec"]);
    assert_eq!(o.status.code(), Some(2));
}
