//! TOML experiment specifications. The schema is documented in
//! `docs/experiment-spec.md`.

use std::fs;
use std::path::{Path, PathBuf};

use haqt_core::bench::{ExperimentSpec, StateSource};
use haqt_core::estimator::MleOptions;
use haqt_core::protocols::{FinalEstimate, Protocol};
use serde::Deserialize;

use crate::error::{AppError, AppResult};
use crate::formats::read_state;

pub const DEFAULT_STEM: &str = "bench";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    dim: usize,
    protocols: Vec<String>,
    shot_grid: Vec<u64>,
    trials: usize,
    master_seed: Option<u64>,
    #[serde(default = "default_split")]
    split_fraction: f64,
    #[serde(default)]
    final_estimate: Option<String>,
    #[serde(default)]
    proxy_truth: bool,
    #[serde(default)]
    resample_state: bool,
    state: StateSection,
    #[serde(default)]
    mle: MleSection,
    #[serde(default)]
    output: OutputSection,
}

fn default_split() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum StateSection {
    /// Path to a state JSON file, relative to the spec file.
    Fixed { path: PathBuf },
    RandomFullRank {
        #[serde(default)]
        min_eigenvalue: f64,
    },
    RandomPure,
    Slit { transmissivities: Vec<f64>, phases: Vec<f64> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MleSection {
    max_iters: Option<usize>,
    log_likelihood_tol: Option<f64>,
    step_tol: Option<f64>,
    dilution: Option<f64>,
    prob_floor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    stem: Option<String>,
}

/// A parsed and validated specification plus its output settings.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedSpec {
    pub spec: ExperimentSpec,
    pub output_dir: Option<PathBuf>,
    pub stem: String,
}

/// Parses `text`; `base` resolves relative state paths. `default_seed`
/// applies when the document has no `master_seed`.
pub fn parse_spec(text: &str, base: &Path, default_seed: u64) -> Result<LoadedSpec, String> {
    let file: SpecFile = toml::from_str(text).map_err(|e| e.to_string())?;
    let protocols = file
        .protocols
        .iter()
        .map(|p| Protocol::parse(p).ok_or_else(|| format!("unknown protocol {p:?} (expected \"sqt\" or \"haqt\")")))
        .collect::<Result<Vec<_>, _>>()?;
    let state_source = match file.state {
        StateSection::Fixed { path } => {
            let path = base.join(path);
            StateSource::Fixed(read_state(&path).map_err(|e| e.to_string())?)
        }
        StateSection::RandomFullRank { min_eigenvalue } => StateSource::RandomFullRank { min_eigenvalue },
        StateSection::RandomPure => StateSource::RandomPure,
        StateSection::Slit { transmissivities, phases } => StateSource::Slit { transmissivities, phases },
    };
    let final_estimate = match file.final_estimate.as_deref() {
        None => FinalEstimate::default(),
        Some(s) => FinalEstimate::parse(s).ok_or_else(|| format!("unknown final_estimate {s:?} (expected \"pooled\" or \"stage2\")"))?,
    };
    let d = MleOptions::default();
    let mle = MleOptions {
        max_iters: file.mle.max_iters.unwrap_or(d.max_iters),
        log_likelihood_tol: file.mle.log_likelihood_tol.unwrap_or(d.log_likelihood_tol),
        step_tol: file.mle.step_tol.unwrap_or(d.step_tol),
        dilution: file.mle.dilution.unwrap_or(d.dilution),
        prob_floor: file.mle.prob_floor.unwrap_or(d.prob_floor),
    };
    let spec = ExperimentSpec {
        dim: file.dim,
        protocols,
        shot_grid: file.shot_grid,
        trials: file.trials,
        state_source,
        resample_state: file.resample_state,
        master_seed: file.master_seed.unwrap_or(default_seed),
        split_fraction: file.split_fraction,
        final_estimate,
        mle,
        proxy_truth: file.proxy_truth,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(LoadedSpec { spec, output_dir: file.output.dir, stem: file.output.stem.unwrap_or_else(|| DEFAULT_STEM.into()) })
}

pub fn load_spec(path: &Path, default_seed: u64) -> AppResult<LoadedSpec> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_spec(&text, base, default_seed).map_err(|m| AppError::input(path, m))
}
