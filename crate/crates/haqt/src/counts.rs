//! Count records on disk: a CSV table `basis_label,outcome_index,count`
//! and a JSON sidecar `{dim, frame, N, seed}` next to it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use haqt_core::bases::{build_basis_set, BasisSet};
use haqt_core::measurement::CountData;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::formats::{matrix_from_json, matrix_to_json, to_json_string, Complex};
use crate::report::write_atomic;

pub const HEADER: [&str; 3] = ["basis_label", "outcome_index", "count"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub dim: usize,
    /// Unitary applied to the standard basis set before measuring.
    pub frame: Vec<Vec<Complex>>,
    #[serde(rename = "N")]
    pub shots: u64,
    pub seed: Option<u64>,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn counts_csv(data: &CountData, set: &BasisSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for (basis, row) in set.bases().iter().zip(data.counts()) {
        for (i, c) in row.iter().enumerate() {
            w.write_record([basis.label().to_string(), i.to_string(), c.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

/// Writes `path` and its sidecar.
pub fn write_counts(path: &Path, data: &CountData, set: &BasisSet, seed: Option<u64>) -> AppResult<()> {
    write_atomic(path, counts_csv(data, set).as_bytes())?;
    let sidecar = Sidecar { dim: set.dim(), frame: matrix_to_json(set.frame()), shots: data.total_shots(), seed };
    write_atomic(&sidecar_path(path), to_json_string(&sidecar).as_bytes())
}

/// Parses the CSV body against `set`. Row numbers in errors count the
/// header as row 1.
pub fn parse_counts_csv(text: &str, set: &BasisSet) -> Result<CountData, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| format!("row 1: {e}"))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(format!("row 1: expected header {}", HEADER.join(",")));
    }
    let d = set.dim();
    let position: BTreeMap<usize, usize> = set.bases().iter().enumerate().map(|(i, b)| (b.label(), i)).collect();
    let mut counts: Vec<Vec<Option<u64>>> = vec![vec![None; d]; set.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| format!("row {row}: {e}"))?;
        if record.len() != 3 {
            return Err(format!("row {row}: expected 3 fields, found {}", record.len()));
        }
        let field = |k: usize| -> Result<u64, String> {
            record[k].parse::<u64>().map_err(|_| format!("row {row}: {} is not a non-negative integer: {:?}", HEADER[k], &record[k]))
        };
        let (label, outcome, count) = (field(0)? as usize, field(1)? as usize, field(2)?);
        let &b = position.get(&label).ok_or_else(|| format!("row {row}: unknown basis label {label}"))?;
        if outcome >= d {
            return Err(format!("row {row}: outcome index {outcome} out of range for dimension {d}"));
        }
        let slot = &mut counts[b][outcome];
        if slot.is_some() {
            return Err(format!("row {row}: duplicate entry for basis {label}, outcome {outcome}"));
        }
        *slot = Some(count);
    }
    let mut full = Vec::with_capacity(set.len());
    for (b, row) in counts.into_iter().enumerate() {
        let label = set.bases()[b].label();
        full.push(
            row.into_iter()
                .enumerate()
                .map(|(o, c)| c.ok_or_else(|| format!("missing entry for basis {label}, outcome {o}")))
                .collect::<Result<Vec<u64>, String>>()?,
        );
    }
    CountData::new(d, set.frame_hash(), full).map_err(|e| e.to_string())
}

/// Reads a count record and rebuilds the basis set it was measured in.
pub fn read_counts(path: &Path) -> AppResult<(CountData, BasisSet, Sidecar)> {
    let side_path = sidecar_path(path);
    let side_text = fs::read_to_string(&side_path).map_err(|e| AppError::io(&side_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&side_text).map_err(|e| AppError::input(&side_path, e.to_string()))?;
    if sidecar.dim < 2 {
        return Err(AppError::input(&side_path, format!("dim must be at least 2, got {}", sidecar.dim)));
    }
    let frame = matrix_from_json(sidecar.dim, &sidecar.frame).map_err(|m| AppError::input(&side_path, m))?;
    let set = build_basis_set(sidecar.dim)?.rotated(&frame).map_err(|e| AppError::input(&side_path, format!("frame: {e}")))?;

    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let data = parse_counts_csv(&text, &set).map_err(|m| AppError::input(path, m))?;
    if data.total_shots() != sidecar.shots {
        return Err(AppError::input(path, format!("counts sum to {}, sidecar says N = {}", data.total_shots(), sidecar.shots)));
    }
    Ok((data, set, sidecar))
}
