//! Born-rule probabilities, multinomial sampling and shot allocation.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::bases::{BasisSet, MeasurementBasis};
use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::state::DensityMatrix;
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

const PROB_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    basis_label: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(basis_label: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(OutcomeDistribution { basis_label, probs })
    }

    pub fn basis_label(&self) -> usize {
        self.basis_label
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Click counts for every outcome of every basis in a [`BasisSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct CountData {
    dim: usize,
    frame_hash: u64,
    counts: Vec<Vec<u64>>,
    shots: Vec<u64>,
}

impl CountData {
    /// Per-basis shots are the row sums of `counts`.
    pub fn new(dim: usize, frame_hash: u64, counts: Vec<Vec<u64>>) -> Result<Self> {
        if let Some((b, row)) = counts.iter().enumerate().find(|(_, row)| row.len() != dim) {
            return Err(Error::InvalidCounts(format!("basis {b} has {} outcomes, expected {dim}", row.len())));
        }
        let shots = counts.iter().map(|row| row.iter().sum()).collect();
        Ok(CountData { dim, frame_hash, counts, shots })
    }

    /// Checks that the data was recorded against `set`.
    pub fn matches(&self, set: &BasisSet) -> Result<()> {
        if self.dim != set.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), found: self.dim });
        }
        if self.counts.len() != set.len() {
            return Err(Error::InvalidCounts(format!("{} bases of counts for {} bases", self.counts.len(), set.len())));
        }
        if self.frame_hash != set.frame_hash() {
            return Err(Error::InvalidCounts("counts were recorded in a different frame".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_hash(&self) -> u64 {
        self.frame_hash
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn shots(&self) -> &[u64] {
        &self.shots
    }

    pub fn total_shots(&self) -> u64 {
        self.shots.iter().sum()
    }

    /// Observed frequencies `n_{b,m} / shots_b` (zero rows for unmeasured bases).
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .zip(&self.shots)
            .map(|(row, &s)| row.iter().map(|&n| if s == 0 { 0.0 } else { n as f64 / s as f64 }).collect())
            .collect()
    }

    /// Adds another record taken in the same frame.
    pub fn merged(&self, other: &CountData) -> Result<CountData> {
        if self.dim != other.dim || self.frame_hash != other.frame_hash || self.counts.len() != other.counts.len() {
            return Err(Error::InvalidCounts("cannot merge counts from different frames".into()));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        CountData::new(self.dim, self.frame_hash, counts)
    }

    pub fn reordered(&self, order: &[usize]) -> CountData {
        let counts: Vec<Vec<u64>> = order.iter().map(|&i| self.counts[i].clone()).collect();
        let shots = order.iter().map(|&i| self.shots[i]).collect();
        CountData { dim: self.dim, frame_hash: self.frame_hash, counts, shots }
    }
}

/// `p_m = <b_m|ρ|b_m>`, with negative round-off clipped and the vector renormalized.
pub fn born_probabilities(rho: &DensityMatrix, basis: &MeasurementBasis) -> Result<OutcomeDistribution> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: basis.dim() });
    }
    let mut probs: Vec<f64> = basis.vectors().iter().map(|v| rho.matrix().expectation(v.amplitudes()).re.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    OutcomeDistribution::new(basis.label(), probs)
}

/// Multinomial draw of `shots` outcomes via sequential binomial conditionals.
pub fn sample_counts<R: Rng + ?Sized>(dist: &OutcomeDistribution, shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    let probs = dist.probs();
    let mut out = alloc::vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (m, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if m + 1 == probs.len() {
            out[m] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            Binomial::new(remaining, cond).map_err(|e| Error::InvalidDistribution(format!("{e}")))?.sample(rng)
        };
        out[m] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(out)
}

/// `⌊N/M⌋` shots per basis with the remainder going one each to the lowest labels.
pub fn allocate_shots(total: u64, set: &BasisSet) -> Result<Vec<u64>> {
    let m = set.len() as u64;
    if m == 0 || total < m {
        return Err(Error::EnsembleTooSmall { shots: total, bases: set.len() });
    }
    let base = total / m;
    let rem = total % m;
    Ok((0..m).map(|i| base + u64::from(i < rem)).collect())
}

/// Allocates `total` shots over `set` and samples every basis from its own
/// stream `stream.derive(basis_position)`.
pub fn simulate_measurement(rho: &DensityMatrix, set: &BasisSet, total: u64, stream: SeedStream) -> Result<CountData> {
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: rho.dim() });
    }
    let alloc_shots = allocate_shots(total, set)?;
    let counts = set
        .bases()
        .iter()
        .zip(&alloc_shots)
        .enumerate()
        .map(|(i, (basis, &shots))| {
            let dist = born_probabilities(rho, basis)?;
            sample_counts(&dist, shots, &mut stream.derive(i as u64).rng())
        })
        .collect::<Result<Vec<_>>>()?;
    CountData::new(set.dim(), set.frame_hash(), counts)
}

/// Noise-free record: each count is `p·shots` rounded to the nearest integer.
pub fn expected_counts(rho: &DensityMatrix, set: &BasisSet, shots_per_basis: u64) -> Result<CountData> {
    let counts = set
        .bases()
        .iter()
        .map(|b| {
            let dist = born_probabilities(rho, b)?;
            Ok(dist.probs().iter().map(|p| round_count(p * shots_per_basis as f64)).collect())
        })
        .collect::<Result<Vec<Vec<u64>>>>()?;
    CountData::new(set.dim(), set.frame_hash(), counts)
}

fn round_count(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::build_basis_set;
    use crate::state::{PureState, random_full_rank};
    use crate::linalg::C64;

    #[test]
    fn born_reference_cases() {
        for d in 2..=6 {
            let set = build_basis_set(d).unwrap();
            let mixed = DensityMatrix::maximally_mixed(d).unwrap();
            for b in set.bases() {
                let p = born_probabilities(&mixed, b).unwrap();
                assert!(p.probs().iter().all(|x| (x - 1.0 / d as f64).abs() < 1e-12));
            }
        }
        let set = build_basis_set(3).unwrap();
        let zero = PureState::basis(3, 0).unwrap().to_density();
        let p = born_probabilities(&zero, &set.bases()[0]).unwrap();
        assert_eq!(p.probs()[0], 1.0);
        assert!(p.probs()[1..].iter().all(|&x| x == 0.0));
        assert!(born_probabilities(&DensityMatrix::maximally_mixed(2).unwrap(), &set.bases()[0]).is_err());
    }

    #[test]
    fn target_state_is_uniform_in_computational_basis() {
        let phase = C64::from_polar(1.0, -core::f64::consts::PI / 10.0);
        let amps: Vec<C64> = (0..10).map(|l| if l == 0 { C64::new(1.0, 0.0) } else { phase }).collect();
        let psi = PureState::normalized(amps).unwrap().to_density();
        let set = build_basis_set(10).unwrap();
        let p = born_probabilities(&psi, &set.bases()[18]).unwrap();
        assert!(p.probs().iter().all(|x| (x - 0.1).abs() < 1e-12));
    }

    #[test]
    fn probabilities_resolve_identity() {
        let mut rng = SeedStream::new(6).rng();
        for d in 2..=7 {
            let rho = random_full_rank(d, &mut rng).unwrap();
            for b in build_basis_set(d).unwrap().bases() {
                let raw: f64 = b.vectors().iter().map(|v| rho.matrix().expectation(v.amplitudes()).re).sum();
                assert!((raw - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_edge_cases() {
        let mut rng = SeedStream::new(1).rng();
        let uniform = OutcomeDistribution::new(0, alloc::vec![0.25; 4]).unwrap();
        assert_eq!(sample_counts(&uniform, 0, &mut rng).unwrap(), alloc::vec![0; 4]);
        let certain = OutcomeDistribution::new(0, alloc::vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(sample_counts(&certain, 77, &mut rng).unwrap(), alloc::vec![77, 0, 0]);
        assert!(OutcomeDistribution::new(0, alloc::vec![0.5, 0.6]).is_err());
        assert!(OutcomeDistribution::new(0, alloc::vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn multinomial_moments() {
        let mut rng = SeedStream::new(2).rng();
        let uniform = OutcomeDistribution::new(0, alloc::vec![0.25; 4]).unwrap();
        let n = 1_000_000u64;
        let counts = sample_counts(&uniform, n, &mut rng).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), n);
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 250_000.0).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn allocation_rule() {
        let set10 = build_basis_set(10).unwrap();
        assert_eq!(allocate_shots(19_000, &set10).unwrap(), alloc::vec![1000; 19]);
        for d in 2..=6 {
            let set = build_basis_set(d).unwrap();
            assert_eq!(allocate_shots(set.len() as u64, &set).unwrap(), alloc::vec![1; set.len()]);
            assert!(matches!(allocate_shots(set.len() as u64 - 1, &set), Err(Error::EnsembleTooSmall { .. })));
        }
        let set3 = build_basis_set(3).unwrap();
        assert_eq!(allocate_shots(20, &set3).unwrap(), alloc::vec![4, 4, 3, 3, 3, 3]);
    }

    #[test]
    fn simulation_converges_and_is_deterministic() {
        let mut rng = SeedStream::new(3).rng();
        let rho = random_full_rank(3, &mut rng).unwrap();
        let set = build_basis_set(3).unwrap();
        let n = 10_000_000;
        let data = simulate_measurement(&rho, &set, n, SeedStream::new(44)).unwrap();
        assert_eq!(data.total_shots(), n);
        data.matches(&set).unwrap();
        for (b, freqs) in set.bases().iter().zip(data.frequencies()) {
            let p = born_probabilities(&rho, b).unwrap();
            for (f, q) in freqs.iter().zip(p.probs()) {
                assert!((f - q).abs() <= 5e-3);
            }
        }
        let again = simulate_measurement(&rho, &set, n, SeedStream::new(44)).unwrap();
        assert_eq!(data, again);
        let short = simulate_measurement(&rho, &set, 1001, SeedStream::new(1)).unwrap();
        assert_eq!(short.total_shots(), 1001);
    }
}
