//! State reconstruction from count data.
//!
//! The maximum-likelihood estimator is the diluted `RρR` fixed-point
//! iteration. With `R = Σ_i n_i/(N p_i) Π_i`, where `Π_i` runs over every
//! outcome of every measured basis, each step moves to
//! `(1 − ε)ρ + ε·RρR/Tr(RρR)`. The step is an ascent direction of the
//! multinomial log-likelihood, and `ε` is halved until the likelihood does
//! not decrease, so the accepted sequence is monotone.

use alloc::vec::Vec;

use crate::bases::BasisSet;
use crate::error::{Error, Result};
use crate::gellmann::{coord_count, matrix_from_coords, vector_expectations};
use crate::linalg::{symmetric_eigen, CMatrix, RMatrix, C64};
use crate::measurement::CountData;
use crate::state::{eigendecompose_matrix, DensityMatrix};
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

const MIN_DILUTION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    pub max_iters: usize,
    /// Relative log-likelihood change below which the iteration stops.
    pub log_likelihood_tol: f64,
    /// Frobenius step size below which the iteration stops.
    pub step_tol: f64,
    /// Initial and maximal dilution `ε` in `(0, 1]`.
    pub dilution: f64,
    /// Lower clamp on probabilities inside `n/p` and `log p`.
    pub prob_floor: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { max_iters: 5000, log_likelihood_tol: 1e-11, step_tol: 1e-10, dilution: 0.5, prob_floor: 1e-12 }
    }
}

impl MleOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.max_iters == 0 {
            return Err(Error::InvalidOptions("max_iters must be positive".into()));
        }
        if !positive(self.log_likelihood_tol) || !positive(self.step_tol) || !positive(self.prob_floor) {
            return Err(Error::InvalidOptions("tolerances and probability floor must be positive".into()));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(Error::InvalidOptions("dilution must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Which stage of which protocol produced an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolTag {
    Sqt,
    HaqtStage1,
    HaqtFinal,
    /// Reconstruction of externally supplied counts.
    External,
}

impl ProtocolTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolTag::Sqt => "SQT",
            ProtocolTag::HaqtStage1 => "HAQT-stage1",
            ProtocolTag::HaqtFinal => "HAQT-final",
            ProtocolTag::External => "external",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomographyResult {
    pub estimate: DensityMatrix,
    pub iterations: usize,
    pub final_log_likelihood: f64,
    pub converged: bool,
    pub protocol_tag: ProtocolTag,
}

struct Outcome {
    vector: Vec<C64>,
    count: f64,
}

struct Problem {
    dim: usize,
    outcomes: Vec<Outcome>,
    total: f64,
}

impl Problem {
    fn new(records: &[(&CountData, &BasisSet)]) -> Result<Problem> {
        let dim = records.first().map(|(_, s)| s.dim()).ok_or(Error::EmptyData)?;
        let mut outcomes = Vec::new();
        let mut total = 0.0;
        for (data, set) in records {
            if set.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: set.dim() });
            }
            data.matches(set)?;
            for (basis, row) in set.bases().iter().zip(data.counts()) {
                for (v, &n) in basis.vectors().iter().zip(row) {
                    total += n as f64;
                    outcomes.push(Outcome { vector: v.amplitudes().to_vec(), count: n as f64 });
                }
            }
        }
        if total <= 0.0 {
            return Err(Error::EmptyData);
        }
        Ok(Problem { dim, outcomes, total })
    }

    fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.outcomes.iter().map(|o| rho.expectation(&o.vector).re).collect()
    }

    fn log_likelihood(&self, probs: &[f64], floor: f64) -> f64 {
        self.outcomes
            .iter()
            .zip(probs)
            .filter(|(o, _)| o.count > 0.0)
            .map(|(o, &p)| o.count * p.max(floor).ln())
            .sum()
    }

    fn r_operator(&self, probs: &[f64], floor: f64) -> CMatrix {
        let d = self.dim;
        let mut r = CMatrix::zeros(d, d);
        for (o, &p) in self.outcomes.iter().zip(probs) {
            if o.count == 0.0 {
                continue;
            }
            let w = o.count / (self.total * p.max(floor));
            for a in 0..d {
                let va = o.vector[a] * w;
                if va == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..d {
                    r[(a, b)] += va * o.vector[b].conj();
                }
            }
        }
        r
    }
}

/// Maximum-likelihood estimate from one count record.
pub fn mle_reconstruct(data: &CountData, set: &BasisSet, opts: &MleOptions) -> Result<TomographyResult> {
    mle_reconstruct_joint(&[(data, set)], opts, |_, _| {})
}

/// Maximum-likelihood estimate over several records, possibly in different
/// frames. `observer(iteration, log_likelihood)` sees every accepted step.
pub fn mle_reconstruct_joint(
    records: &[(&CountData, &BasisSet)],
    opts: &MleOptions,
    mut observer: impl FnMut(usize, f64),
) -> Result<TomographyResult> {
    opts.validate()?;
    let problem = Problem::new(records)?;
    let d = problem.dim;
    let floor = opts.prob_floor;

    let mut rho = CMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0));
    let mut probs = problem.probabilities(&rho);
    let mut ll = problem.log_likelihood(&probs, floor);
    observer(0, ll);
    let mut eps = opts.dilution;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        let r = problem.r_operator(&probs, floor);
        let mut target = r.matmul(&rho).matmul(&r).hermitian_part();
        let tr = target.trace().re;
        if !(tr > 0.0) {
            break;
        }
        target = target.scale(C64::new(1.0 / tr, 0.0));
        let target_probs = problem.probabilities(&target);

        let mut accepted = None;
        while eps >= MIN_DILUTION {
            let cand: Vec<f64> = probs.iter().zip(&target_probs).map(|(p, t)| (1.0 - eps) * p + eps * t).collect();
            let cand_ll = problem.log_likelihood(&cand, floor);
            if cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            eps *= 0.5;
        }
        let Some((cand_probs, cand_ll)) = accepted else {
            // No dilution improves the likelihood: numerically stationary.
            converged = true;
            break;
        };
        iterations += 1;
        let delta = &target - &rho;
        let step = eps * delta.frobenius_norm();
        rho = &rho.scale(C64::new(1.0 - eps, 0.0)) + &target.scale(C64::new(eps, 0.0));
        let gain = cand_ll - ll;
        probs = cand_probs;
        ll = cand_ll;
        observer(iterations, ll);
        eps = (eps * 2.0).min(opts.dilution);
        if gain <= opts.log_likelihood_tol * ll.abs().max(1.0) || step <= opts.step_tol {
            converged = true;
            break;
        }
    }

    let estimate = finalize(rho)?;
    let final_ll = problem.log_likelihood(&problem.probabilities(estimate.matrix()), floor);
    Ok(TomographyResult { estimate, iterations, final_log_likelihood: final_ll, converged, protocol_tag: ProtocolTag::External })
}

/// Symmetrizes, renormalizes and clips round-off so the iterate passes validation.
fn finalize(rho: CMatrix) -> Result<DensityMatrix> {
    let h = rho.hermitian_part();
    let tr = h.trace().re;
    let h = h.scale(C64::new(1.0 / tr, 0.0));
    match DensityMatrix::new(h.clone()) {
        Ok(dm) => Ok(dm),
        Err(_) => {
            let eig = eigendecompose_matrix(&h)?;
            DensityMatrix::from_clipped_spectrum(eig.eigenvalues(), eig.eigenvectors())
        }
    }
}

/// Least-squares Bloch coordinates fitted to the observed frequencies.
///
/// The returned Hermitian matrix `I/d + ½ Σ S_a σ_a` has unit trace by
/// construction and may have negative eigenvalues.
pub fn linear_inversion(data: &CountData, set: &BasisSet) -> Result<CMatrix> {
    data.matches(set)?;
    if data.total_shots() == 0 {
        return Err(Error::EmptyData);
    }
    let d = set.dim();
    let n = coord_count(d);
    let inv_d = 1.0 / d as f64;
    let mut normal = RMatrix::zeros(n, n);
    let mut rhs = alloc::vec![0.0; n];
    // Rows of the design are ½<b|σ_a|b> in the frame the counts were taken in;
    // outcome probabilities are frame-independent so the fit is done in the
    // computational frame directly.
    for ((basis, freqs), &shots) in set.bases().iter().zip(data.frequencies()).zip(data.shots()) {
        if shots == 0 {
            continue;
        }
        for (v, f) in basis.vectors().iter().zip(freqs) {
            let row: Vec<f64> = vector_expectations(v.amplitudes()).into_iter().map(|x| 0.5 * x).collect();
            let y = f - inv_d;
            for a in 0..n {
                if row[a] == 0.0 {
                    continue;
                }
                rhs[a] += row[a] * y;
                for b in 0..n {
                    normal[(a, b)] += row[a] * row[b];
                }
            }
        }
    }
    let (vals, vecs) = symmetric_eigen(&normal);
    let max = vals.iter().copied().fold(0.0f64, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-10 * max.max(1e-300)) {
        return Err(Error::RankDeficientDesign { min_eigenvalue: min });
    }
    let mut coords = alloc::vec![0.0; n];
    for (k, &lam) in vals.iter().enumerate() {
        let proj: f64 = (0..n).map(|a| vecs[(a, k)] * rhs[a]).sum::<f64>() / lam;
        for a in 0..n {
            coords[a] += vecs[(a, k)] * proj;
        }
    }
    Ok(matrix_from_coords(d, &coords))
}

/// Nearest density matrix under eigenvalue truncation.
///
/// Negative eigenvalues are zeroed from the most negative upward while their
/// mass is spread evenly over the eigenvalues that remain. The input is
/// rescaled to unit trace first; a non-positive trace is rejected.
pub fn project_to_physical(h: &CMatrix) -> Result<DensityMatrix> {
    let h = h.hermitian_part();
    let tr = h.trace().re;
    if !(tr > 0.0) {
        return Err(Error::NotUnitTrace { trace: tr });
    }
    let eig = eigendecompose_matrix(&h.scale(C64::new(1.0 / tr, 0.0)))?;
    let mut lam = eig.eigenvalues().to_vec();
    let d = lam.len();
    let mut deficit = 0.0;
    let mut kept = d;
    while kept > 0 && lam[kept - 1] + deficit / (kept as f64) < 0.0 {
        deficit += lam[kept - 1];
        lam[kept - 1] = 0.0;
        kept -= 1;
    }
    for x in lam.iter_mut().take(kept) {
        *x += deficit / kept as f64;
    }
    let vecs = eig.eigenvectors();
    let mut out = CMatrix::zeros(d, d);
    for (k, &l) in lam.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        for r in 0..d {
            let vr = vecs[(r, k)] * l;
            for c in 0..d {
                out[(r, c)] += vr * vecs[(c, k)].conj();
            }
        }
    }
    Ok(DensityMatrix::from_trusted(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::build_basis_set;
    use crate::measurement::{expected_counts, simulate_measurement};
    use crate::rng::SeedStream;
    use crate::state::{infidelity, random_full_rank, PureState};

    #[test]
    fn exact_counts_are_reproduced() {
        let mut rng = SeedStream::new(12).rng();
        let rho = random_full_rank(3, &mut rng).unwrap();
        let set = build_basis_set(3).unwrap();
        let data = expected_counts(&rho, &set, 1_000_000).unwrap();
        let res = mle_reconstruct(&data, &set, &MleOptions::default()).unwrap();
        assert!(res.converged);
        assert!(infidelity(&res.estimate, &rho).unwrap() <= 1e-6);
    }

    #[test]
    fn pure_ground_state_from_exact_counts() {
        let set = build_basis_set(3).unwrap();
        let zero = PureState::basis(3, 0).unwrap().to_density();
        let data = expected_counts(&zero, &set, 100_000).unwrap();
        let res = mle_reconstruct(&data, &set, &MleOptions::default()).unwrap();
        assert!(infidelity(&res.estimate, &zero).unwrap() <= 1e-6);
    }

    #[test]
    fn likelihood_is_monotone() {
        let mut rng = SeedStream::new(13).rng();
        for trial in 0..50u64 {
            let d = 2 + (trial as usize % 4);
            let rho = random_full_rank(d, &mut rng).unwrap();
            let set = build_basis_set(d).unwrap();
            let data = simulate_measurement(&rho, &set, 2000, SeedStream::new(trial)).unwrap();
            let mut trace = Vec::new();
            mle_reconstruct_joint(&[(&data, &set)], &MleOptions::default(), |_, ll| trace.push(ll)).unwrap();
            assert!(trace.windows(2).all(|w| w[1] >= w[0]), "trial {trial}");
        }
    }

    #[test]
    fn basis_order_does_not_matter() {
        let mut rng = SeedStream::new(14).rng();
        let rho = random_full_rank(4, &mut rng).unwrap();
        let set = build_basis_set(4).unwrap();
        let data = simulate_measurement(&rho, &set, 50_000, SeedStream::new(5)).unwrap();
        let order: Vec<usize> = (0..set.len()).rev().collect();
        let a = mle_reconstruct(&data, &set, &MleOptions::default()).unwrap();
        let b = mle_reconstruct(&data.reordered(&order), &set.reordered(&order), &MleOptions::default()).unwrap();
        assert!(infidelity(&a.estimate, &b.estimate).unwrap() <= 1e-10);
    }

    #[test]
    fn empty_and_mismatched_data() {
        let set = build_basis_set(2).unwrap();
        let empty = CountData::new(2, set.frame_hash(), alloc::vec![alloc::vec![0, 0]; 3]).unwrap();
        assert_eq!(mle_reconstruct(&empty, &set, &MleOptions::default()), Err(Error::EmptyData));
        let short = CountData::new(2, set.frame_hash(), alloc::vec![alloc::vec![1, 0]; 2]).unwrap();
        assert!(mle_reconstruct(&short, &set, &MleOptions::default()).is_err());
        let bad = MleOptions { dilution: 0.0, ..MleOptions::default() };
        let one = CountData::new(2, set.frame_hash(), alloc::vec![alloc::vec![1, 0]; 3]).unwrap();
        assert!(matches!(mle_reconstruct(&one, &set, &bad), Err(Error::InvalidOptions(_))));
    }

    #[test]
    fn iteration_cap_is_not_an_error() {
        let mut rng = SeedStream::new(15).rng();
        let rho = random_full_rank(3, &mut rng).unwrap();
        let set = build_basis_set(3).unwrap();
        let data = simulate_measurement(&rho, &set, 10_000, SeedStream::new(2)).unwrap();
        let opts = MleOptions { max_iters: 1, ..MleOptions::default() };
        let res = mle_reconstruct(&data, &set, &opts).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(!res.converged);
    }

    #[test]
    fn linear_inversion_is_exact_on_exact_frequencies() {
        let mut rng = SeedStream::new(16).rng();
        for d in 2..=5 {
            let rho = random_full_rank(d, &mut rng).unwrap();
            let set = build_basis_set(d).unwrap();
            // Exact probabilities as "counts": scale large enough that rounding is below 1e-10.
            let data = expected_counts(&rho, &set, 1u64 << 50).unwrap();
            let h = linear_inversion(&data, &set).unwrap();
            assert!((&h - rho.matrix()).max_abs() < 1e-10, "d={d}");
            assert!((h.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_inversion_sampled_qubit() {
        let mut rng = SeedStream::new(18).rng();
        let rho = random_full_rank(2, &mut rng).unwrap();
        let set = build_basis_set(2).unwrap();
        let data = simulate_measurement(&rho, &set, 100_000, SeedStream::new(3)).unwrap();
        let h = linear_inversion(&data, &set).unwrap();
        assert!((&h - rho.matrix()).frobenius_norm() <= 0.05);
    }

    #[test]
    fn linear_inversion_needs_complete_data() {
        let set = build_basis_set(3).unwrap();
        let mut counts = alloc::vec![alloc::vec![10, 10, 10]; 6];
        counts[0] = alloc::vec![0, 0, 0];
        let data = CountData::new(3, set.frame_hash(), counts).unwrap();
        assert!(matches!(linear_inversion(&data, &set), Err(Error::RankDeficientDesign { .. })));
    }

    #[test]
    fn projection_reference_cases() {
        let p = project_to_physical(&CMatrix::from_real_diagonal(&[1.1, -0.1])).unwrap();
        assert!((p.matrix() - &CMatrix::from_real_diagonal(&[1.0, 0.0])).max_abs() < 1e-15);
        let mut rng = SeedStream::new(19).rng();
        let rho = random_full_rank(4, &mut rng).unwrap();
        let same = project_to_physical(rho.matrix()).unwrap();
        assert!((same.matrix() - rho.matrix()).max_abs() < 1e-12);
        // SGS by hand: (0.6, 0.5, -0.05, -0.05) -> (0.55, 0.45, 0, 0).
        let q = project_to_physical(&CMatrix::from_real_diagonal(&[0.6, 0.5, -0.05, -0.05])).unwrap();
        assert!((q.matrix() - &CMatrix::from_real_diagonal(&[0.55, 0.45, 0.0, 0.0])).max_abs() < 1e-14);
    }
}
