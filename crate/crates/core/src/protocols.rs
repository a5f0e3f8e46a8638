//! End-to-end tomography runs: standard tomography in the computational
//! frame and the two-stage adaptive protocol.

use crate::bases::{basis_count, build_basis_set, rotate_basis_set, BasisSet};
use crate::error::{Error, Result};
use crate::estimator::{mle_reconstruct, mle_reconstruct_joint, MleOptions, ProtocolTag, TomographyResult};
use crate::measurement::{simulate_measurement, CountData};
use crate::rng::SeedStream;
use crate::state::{eigendecompose, DensityMatrix, EigenDecomposition};
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

const STAGE1_STREAM: u64 = 1;
const STAGE2_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Sqt,
    Haqt,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::Sqt, Protocol::Haqt];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Sqt => "SQT",
            Protocol::Haqt => "HAQT",
        }
    }

    /// Case-insensitive parse of `"sqt"` / `"haqt"`.
    pub fn parse(s: &str) -> Option<Protocol> {
        if s.eq_ignore_ascii_case("sqt") {
            Some(Protocol::Sqt)
        } else if s.eq_ignore_ascii_case("haqt") {
            Some(Protocol::Haqt)
        } else {
            None
        }
    }

    /// Stable numeric tag used when deriving seed streams.
    pub fn stream_tag(self) -> u64 {
        match self {
            Protocol::Sqt => 0x5154,
            Protocol::Haqt => 0x4841_5154,
        }
    }
}

/// Which counts feed the final adaptive estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FinalEstimate {
    /// Joint likelihood over both stages, each in its own frame.
    #[default]
    Pooled,
    /// Second-stage counts only.
    Stage2Only,
}

impl FinalEstimate {
    pub fn as_str(self) -> &'static str {
        match self {
            FinalEstimate::Pooled => "pooled",
            FinalEstimate::Stage2Only => "stage2",
        }
    }

    pub fn parse(s: &str) -> Option<FinalEstimate> {
        match s {
            "pooled" => Some(FinalEstimate::Pooled),
            "stage2" => Some(FinalEstimate::Stage2Only),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub dim: usize,
    pub total_shots: u64,
    /// Share of the ensemble spent on the preliminary estimate.
    pub split_fraction: f64,
    pub final_estimate: FinalEstimate,
    pub mle: MleOptions,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(dim: usize, total_shots: u64, seed: u64) -> Self {
        ProtocolConfig { dim, total_shots, split_fraction: 0.5, final_estimate: FinalEstimate::Pooled, mle: MleOptions::default(), seed }
    }

    pub fn validate(&self, protocol: Protocol) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidOptions("split_fraction must lie in (0, 1)".into()));
        }
        self.mle.validate()?;
        let m = basis_count(self.dim);
        let needed = match protocol {
            Protocol::Sqt => m as u64,
            Protocol::Haqt => 2 * m as u64,
        };
        if self.total_shots < needed {
            return Err(Error::EnsembleTooSmall { shots: self.total_shots, bases: m });
        }
        if protocol == Protocol::Haqt {
            let (n0, n1) = self.stage_shots();
            if n0 < m as u64 || n1 < m as u64 {
                return Err(Error::EnsembleTooSmall { shots: n0.min(n1), bases: m });
            }
        }
        Ok(())
    }

    /// `(N₀, N − N₀)` with `N₀ = round(split_fraction · N)`.
    pub fn stage_shots(&self) -> (u64, u64) {
        let n0 = (self.split_fraction * self.total_shots as f64).round() as u64;
        let n0 = n0.min(self.total_shots);
        (n0, self.total_shots - n0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SqtRun {
    pub result: TomographyResult,
    pub counts: CountData,
    pub bases: BasisSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaqtRun {
    pub stage1: SqtRun,
    /// Eigendecomposition of the preliminary estimate.
    pub frame: EigenDecomposition,
    /// Final estimate; see [`FinalEstimate`] for which counts it uses.
    pub result: TomographyResult,
    pub counts: CountData,
    pub bases: BasisSet,
}

fn sqt_on(rho: &DensityMatrix, dim: usize, shots: u64, mle: &MleOptions, stream: SeedStream) -> Result<SqtRun> {
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
    }
    let bases = build_basis_set(dim)?;
    let counts = simulate_measurement(rho, &bases, shots, stream)?;
    let mut result = mle_reconstruct(&counts, &bases, mle)?;
    result.protocol_tag = ProtocolTag::Sqt;
    Ok(SqtRun { result, counts, bases })
}

/// All `N` shots spread over the basis set in the computational frame.
pub fn run_sqt(rho: &DensityMatrix, cfg: &ProtocolConfig) -> Result<SqtRun> {
    cfg.validate(Protocol::Sqt)?;
    sqt_on(rho, cfg.dim, cfg.total_shots, &cfg.mle, SeedStream::new(cfg.seed).derive(STAGE1_STREAM))
}

/// Preliminary standard tomography on `N₀` shots, then the basis set rotated
/// into the eigenframe of that estimate on the remaining `N − N₀`.
///
/// With [`FinalEstimate::Pooled`] the final likelihood covers all `N` shots.
/// Using the second stage alone roughly doubles the mean infidelity at the
/// default even split.
pub fn run_haqt(rho: &DensityMatrix, cfg: &ProtocolConfig) -> Result<HaqtRun> {
    cfg.validate(Protocol::Haqt)?;
    let (n0, n1) = cfg.stage_shots();
    let root = SeedStream::new(cfg.seed);

    let mut stage1 = sqt_on(rho, cfg.dim, n0, &cfg.mle, root.derive(STAGE1_STREAM))?;
    stage1.result.protocol_tag = ProtocolTag::HaqtStage1;
    let frame = eigendecompose(&stage1.result.estimate);

    let bases = rotate_basis_set(&stage1.bases, &frame)?;
    let counts = simulate_measurement(rho, &bases, n1, root.derive(STAGE2_STREAM))?;
    let mut result = match cfg.final_estimate {
        FinalEstimate::Pooled => {
            mle_reconstruct_joint(&[(&stage1.counts, &stage1.bases), (&counts, &bases)], &cfg.mle, |_, _| {})?
        }
        FinalEstimate::Stage2Only => mle_reconstruct(&counts, &bases, &cfg.mle)?,
    };
    result.protocol_tag = ProtocolTag::HaqtFinal;
    Ok(HaqtRun { stage1, frame, result, counts, bases })
}

/// Runs `protocol` and returns only the final result.
pub fn run(protocol: Protocol, rho: &DensityMatrix, cfg: &ProtocolConfig) -> Result<TomographyResult> {
    match protocol {
        Protocol::Sqt => run_sqt(rho, cfg).map(|r| r.result),
        Protocol::Haqt => run_haqt(rho, cfg).map(|r| r.result),
    }
}
