//! Monte Carlo benchmark: repeated protocol runs over a grid of ensemble
//! sizes, aggregated into mean infidelities with standard errors and the
//! Fisher-information bounds.
//!
//! Work is described as independent [`TrialTask`]s so callers may execute
//! them in any order or in parallel; [`aggregate`] sorts before reducing.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bases::BasisSet;
use crate::error::{Error, Result};
use crate::estimator::{mle_reconstruct_joint, MleOptions};
use crate::fisher::{alpha, gill_massar_bound, RANK_TOL};
use crate::linalg::C64;
use crate::measurement::CountData;
use crate::protocols::{run_haqt, run_sqt, FinalEstimate, Protocol, ProtocolConfig};
use crate::rng::{Fingerprint, SeedStream};
use crate::state::{infidelity, random_full_rank, random_pure, DensityMatrix, PureState};
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

const TRUTH_STREAM: u64 = 0x7275_7468;
const MAX_REJECTIONS: usize = 1_000_000;

/// Amplitudes `√t_l e^{iφ_l}` normalized: the state behind a multi-slit
/// aperture with transmissivities `t` and phases `φ`.
pub fn slit_state(transmissivities: &[f64], phases: &[f64]) -> Result<PureState> {
    if transmissivities.len() != phases.len() {
        return Err(Error::DimensionMismatch { expected: transmissivities.len(), found: phases.len() });
    }
    if transmissivities.iter().any(|&t| !(t >= 0.0 && t.is_finite())) || phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidSpec("transmissivities must be finite and non-negative".into()));
    }
    if transmissivities.iter().all(|&t| t == 0.0) {
        return Err(Error::InvalidSpec("all transmissivities are zero".into()));
    }
    let amps = transmissivities.iter().zip(phases).map(|(&t, &p)| C64::from_polar(t.sqrt(), p)).collect();
    PureState::normalized(amps)
}

/// Equal transmissivities, first phase 0 and the rest `−π/10`, for `d` slits.
pub fn tilted_slit_parameters(d: usize) -> (Vec<f64>, Vec<f64>) {
    let t = alloc::vec![1.0; d];
    let phi = (0..d).map(|l| if l == 0 { 0.0 } else { -PI / 10.0 }).collect();
    (t, phi)
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateSource {
    Fixed(DensityMatrix),
    /// Hilbert-Schmidt random state conditioned on its smallest eigenvalue.
    RandomFullRank { min_eigenvalue: f64 },
    RandomPure,
    Slit { transmissivities: Vec<f64>, phases: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub dim: usize,
    pub protocols: Vec<Protocol>,
    /// Strictly ascending ensemble sizes.
    pub shot_grid: Vec<u64>,
    pub trials: usize,
    pub state_source: StateSource,
    /// Draw a fresh true state per trial index instead of one per experiment.
    pub resample_state: bool,
    pub master_seed: u64,
    pub split_fraction: f64,
    pub final_estimate: FinalEstimate,
    pub mle: MleOptions,
    /// Score against the joint estimate from all pooled counts instead of the
    /// exact state.
    pub proxy_truth: bool,
}

impl ExperimentSpec {
    pub fn new(dim: usize, state_source: StateSource) -> Self {
        ExperimentSpec {
            dim,
            protocols: Protocol::ALL.to_vec(),
            shot_grid: Vec::new(),
            trials: 1,
            state_source,
            resample_state: false,
            master_seed: 0,
            split_fraction: 0.5,
            final_estimate: FinalEstimate::Pooled,
            mle: MleOptions::default(),
            proxy_truth: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidSpec(m));
        if self.dim < 2 {
            return bad(format!("dim must be at least 2, got {}", self.dim));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.protocols.is_empty() {
            return bad("no protocols selected".into());
        }
        for (i, p) in self.protocols.iter().enumerate() {
            if self.protocols[..i].contains(p) {
                return bad(format!("protocol {} listed twice", p.as_str()));
            }
        }
        if self.shot_grid.is_empty() {
            return bad("shot grid is empty".into());
        }
        if self.shot_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("shot grid must be strictly ascending".into());
        }
        match &self.state_source {
            StateSource::Fixed(rho) if rho.dim() != self.dim => {
                return bad(format!("fixed state has dimension {}, expected {}", rho.dim(), self.dim));
            }
            StateSource::RandomFullRank { min_eigenvalue } => {
                let cap = 1.0 / self.dim as f64;
                if !(*min_eigenvalue >= 0.0 && *min_eigenvalue < cap) {
                    return bad(format!("min_eigenvalue must lie in [0, {cap})"));
                }
            }
            StateSource::Slit { transmissivities, phases } => {
                if transmissivities.len() != self.dim || phases.len() != self.dim {
                    return bad(format!("slit parameters must have length {}", self.dim));
                }
                if transmissivities.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
                    return bad("transmissivities must lie in [0, 1]".into());
                }
                slit_state(transmissivities, phases)?;
            }
            _ => {}
        }
        for &p in &self.protocols {
            for &n in &self.shot_grid {
                self.protocol_config(n, 0).validate(p).map_err(|e| Error::InvalidSpec(format!("{} at N={n}: {e}", p.as_str())))?;
            }
        }
        Ok(())
    }

    pub fn protocol_config(&self, shots: u64, seed: u64) -> ProtocolConfig {
        ProtocolConfig {
            dim: self.dim,
            total_shots: shots,
            split_fraction: self.split_fraction,
            final_estimate: self.final_estimate,
            mle: self.mle,
            seed,
        }
    }

    /// Stable digest of every field that influences the report.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fingerprint::new();
        h.u64(self.dim as u64);
        for p in &self.protocols {
            h.u64(p.stream_tag());
        }
        h.u64(self.shot_grid.len() as u64);
        for &n in &self.shot_grid {
            h.u64(n);
        }
        h.u64(self.trials as u64).u64(self.master_seed).f64(self.split_fraction);
        h.u64(self.resample_state as u64).u64(self.proxy_truth as u64).u64(self.final_estimate as u64);
        h.u64(self.mle.max_iters as u64).f64(self.mle.log_likelihood_tol).f64(self.mle.step_tol);
        h.f64(self.mle.dilution).f64(self.mle.prob_floor);
        match &self.state_source {
            StateSource::Fixed(rho) => {
                h.u64(1);
                for z in rho.matrix().as_slice() {
                    h.f64(z.re).f64(z.im);
                }
            }
            StateSource::RandomFullRank { min_eigenvalue } => {
                h.u64(2).f64(*min_eigenvalue);
            }
            StateSource::RandomPure => {
                h.u64(3);
            }
            StateSource::Slit { transmissivities, phases } => {
                h.u64(4);
                for (&t, &p) in transmissivities.iter().zip(phases) {
                    h.f64(t).f64(p);
                }
            }
        }
        h.finish()
    }

    /// True state for `trial`; the same for every trial unless
    /// `resample_state` is set.
    pub fn true_state(&self, trial: usize) -> Result<DensityMatrix> {
        let mut stream = SeedStream::new(self.master_seed).derive(TRUTH_STREAM);
        if self.resample_state {
            stream = stream.derive(trial as u64);
        }
        let mut rng = stream.rng();
        match &self.state_source {
            StateSource::Fixed(rho) => Ok(rho.clone()),
            StateSource::RandomPure => Ok(random_pure(self.dim, &mut rng)?.to_density()),
            StateSource::Slit { transmissivities, phases } => Ok(slit_state(transmissivities, phases)?.to_density()),
            StateSource::RandomFullRank { min_eigenvalue } => {
                for _ in 0..MAX_REJECTIONS {
                    let rho = random_full_rank(self.dim, &mut rng)?;
                    if rho.min_eigenvalue() >= *min_eigenvalue {
                        return Ok(rho);
                    }
                }
                Err(Error::InvalidSpec(format!("no state with min eigenvalue {min_eigenvalue} found")))
            }
        }
    }
}

/// One unit of work.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrialTask {
    pub protocol: Protocol,
    pub shots: u64,
    pub trial: usize,
}

impl TrialTask {
    /// Seed of this trial: master → protocol → N → trial index.
    pub fn seed(&self, master_seed: u64) -> u64 {
        SeedStream::new(master_seed).derive(self.protocol.stream_tag()).derive(self.shots).derive(self.trial as u64).key()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Infidelity against the scoring reference (exact or proxy truth).
    pub infidelity: f64,
    pub exact_infidelity: f64,
    /// Preliminary-stage infidelity against the exact state, adaptive runs only.
    pub stage1_infidelity: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Everything a finished trial hands back to the aggregator.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub task: TrialTask,
    pub record: TrialRecord,
    pub estimate: DensityMatrix,
    /// Counts with their bases, kept only when the proxy truth needs them.
    pub data: Vec<(CountData, BasisSet)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub protocol: Protocol,
    pub shots: u64,
    pub trials: usize,
    pub mean_infidelity: f64,
    /// Sample standard deviation over `√T`; zero when `T = 1`.
    pub std_error: f64,
    pub gm_bound: f64,
    pub alpha_bound: f64,
    pub records: Vec<TrialRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub dim: usize,
    pub spec_fingerprint: u64,
    pub master_seed: u64,
    pub version: &'static str,
    /// False when some true state is rank-deficient, so the bound interval
    /// does not apply.
    pub bounds_applicable: bool,
    /// The exact state of trial 0.
    pub truth: DensityMatrix,
    pub proxy_truth: Option<DensityMatrix>,
    pub points: Vec<PointSummary>,
}

/// All tasks of `spec` in canonical order.
pub fn plan(spec: &ExperimentSpec) -> Vec<TrialTask> {
    let mut tasks = Vec::with_capacity(spec.protocols.len() * spec.shot_grid.len() * spec.trials);
    for &protocol in &spec.protocols {
        for &shots in &spec.shot_grid {
            for trial in 0..spec.trials {
                tasks.push(TrialTask { protocol, shots, trial });
            }
        }
    }
    tasks
}

/// Runs one task against `truth`.
pub fn run_trial(spec: &ExperimentSpec, truth: &DensityMatrix, task: TrialTask) -> Result<TrialOutcome> {
    let seed = task.seed(spec.master_seed);
    let wrap = |e: Error| Error::Trial { protocol: task.protocol.as_str(), shots: task.shots, trial: task.trial, seed, source: Box::new(e) };
    let cfg = spec.protocol_config(task.shots, seed);
    let keep = spec.proxy_truth;
    let (result, stage1, data) = match task.protocol {
        Protocol::Sqt => {
            let run = run_sqt(truth, &cfg).map_err(wrap)?;
            let data = if keep { alloc::vec![(run.counts, run.bases)] } else { Vec::new() };
            (run.result, None, data)
        }
        Protocol::Haqt => {
            let run = run_haqt(truth, &cfg).map_err(wrap)?;
            let s1 = infidelity(truth, &run.stage1.result.estimate).map_err(wrap)?;
            let data = if keep { alloc::vec![(run.stage1.counts, run.stage1.bases), (run.counts, run.bases)] } else { Vec::new() };
            (run.result, Some(s1), data)
        }
    };
    let exact = infidelity(truth, &result.estimate).map_err(wrap)?;
    let record = TrialRecord {
        trial: task.trial,
        seed,
        infidelity: exact,
        exact_infidelity: exact,
        stage1_infidelity: stage1,
        iterations: result.iterations,
        converged: result.converged,
    };
    Ok(TrialOutcome { task, record, estimate: result.estimate, data })
}

/// Joint maximum-likelihood estimate from every pooled count record; records
/// sharing a frame are summed first.
pub fn pooled_estimate(outcomes: &[TrialOutcome], mle: &MleOptions) -> Result<DensityMatrix> {
    let mut groups: BTreeMap<u64, (CountData, &BasisSet)> = BTreeMap::new();
    for o in outcomes {
        for (counts, set) in &o.data {
            let key = set.frame_hash();
            match groups.get_mut(&key) {
                Some((acc, _)) => *acc = acc.merged(counts)?,
                None => {
                    groups.insert(key, (counts.clone(), set));
                }
            }
        }
    }
    let records: Vec<(&CountData, &BasisSet)> = groups.values().map(|(c, s)| (c, *s)).collect();
    if records.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(mle_reconstruct_joint(&records, mle, |_, _| {})?.estimate)
}

fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let t = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / t;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

/// Builds the report from outcomes in any order.
pub fn aggregate(spec: &ExperimentSpec, mut outcomes: Vec<TrialOutcome>) -> Result<BenchReport> {
    outcomes.sort_by(|a, b| a.task.cmp(&b.task));
    let expected = plan(spec);
    if outcomes.len() != expected.len() || outcomes.iter().zip(&expected).any(|(o, t)| o.task != *t) {
        return Err(Error::InvalidSpec("outcomes do not match the experiment plan".into()));
    }

    let truth = spec.true_state(0)?;
    let mut bounds_applicable = truth.min_eigenvalue() > RANK_TOL;
    if spec.resample_state {
        for t in 1..spec.trials {
            bounds_applicable &= spec.true_state(t)?.min_eigenvalue() > RANK_TOL;
        }
    }

    let proxy = if spec.proxy_truth {
        let proxy = pooled_estimate(&outcomes, &spec.mle)?;
        for o in &mut outcomes {
            o.record.infidelity = infidelity(&proxy, &o.estimate)?;
        }
        Some(proxy)
    } else {
        None
    };

    let a = alpha(spec.dim);
    let mut points = Vec::new();
    // Canonical order follows the spec's protocol list, not the enum order.
    for &protocol in &spec.protocols {
        for &shots in &spec.shot_grid {
            let records: Vec<TrialRecord> =
                outcomes.iter().filter(|o| o.task.protocol == protocol && o.task.shots == shots).map(|o| o.record.clone()).collect();
            let values: Vec<f64> = records.iter().map(|r| r.infidelity).collect();
            let (mean, se) = mean_and_error(&values);
            let gm = gill_massar_bound(spec.dim, shots);
            points.push(PointSummary {
                protocol,
                shots,
                trials: records.len(),
                mean_infidelity: mean,
                std_error: se,
                gm_bound: gm,
                alpha_bound: a * gm,
                records,
            });
        }
    }
    Ok(BenchReport {
        dim: spec.dim,
        spec_fingerprint: spec.fingerprint(),
        master_seed: spec.master_seed,
        version: env!("CARGO_PKG_VERSION"),
        bounds_applicable,
        truth,
        proxy_truth: proxy,
        points,
    })
}

/// Sequential driver; `progress(done, total)` is called after each trial.
pub fn run_experiment_with(spec: &ExperimentSpec, mut progress: impl FnMut(usize, usize)) -> Result<BenchReport> {
    spec.validate()?;
    let tasks = plan(spec);
    let total = tasks.len();
    let mut truths: BTreeMap<usize, DensityMatrix> = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(total);
    for (i, task) in tasks.into_iter().enumerate() {
        let key = if spec.resample_state { task.trial } else { 0 };
        if !truths.contains_key(&key) {
            truths.insert(key, spec.true_state(key)?);
        }
        outcomes.push(run_trial(spec, &truths[&key], task)?);
        progress(i + 1, total);
    }
    aggregate(spec, outcomes)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<BenchReport> {
    run_experiment_with(spec, |_, _| {})
}
