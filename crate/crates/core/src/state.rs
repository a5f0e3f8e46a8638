//! Quantum states, distance measures and random-state sampling.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_function, norm, CMatrix, C64};
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

/// Tolerance for the Hermitian, unit-trace and positivity checks on construction.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Entries below this modulus are ignored when fixing eigenvector phases.
pub const PHASE_FIX_TOL: f64 = 1e-8;

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

/// Spectral decomposition `ρ = Σ λ_k |k><k|` with eigenvalues sorted
/// descending and every eigenvector's first significant component real and
/// positive.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if amplitudes.is_empty() || n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(PureState { amplitudes: amplitudes.into_iter().map(|z| z / n).collect() })
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidIndex(alloc::format!("basis index {k} out of range for d = {dim}")));
        }
        let mut v = alloc::vec![C64::new(0.0, 0.0); dim];
        v[k] = C64::new(1.0, 0.0);
        Ok(PureState { amplitudes: v })
    }

    pub(crate) fn from_raw(amplitudes: Vec<C64>) -> Self {
        PureState { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { matrix: CMatrix::outer(&self.amplitudes).hermitian_part() }
    }
}

impl DensityMatrix {
    /// Validates `matrix` against the density-matrix invariants.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::InvalidDimension(matrix.rows()));
        }
        let defect = matrix.hermiticity_defect();
        if !(defect <= VALIDATION_TOL) {
            return Err(Error::NotHermitian { defect });
        }
        let matrix = matrix.hermitian_part();
        let trace = matrix.trace().re;
        if !((trace - 1.0).abs() <= VALIDATION_TOL) {
            return Err(Error::NotUnitTrace { trace });
        }
        let (vals, _) = hermitian_eigen(&matrix);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -VALIDATION_TOL {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(DensityMatrix { matrix })
    }

    /// Trusted constructor for matrices produced by this crate's own
    /// algorithms. Only the Hermitian part is kept.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        DensityMatrix { matrix: matrix.hermitian_part() }
    }

    /// Builds `Σ λ_k |k><k|` from a spectrum, clipping negatives to zero and
    /// renormalizing the trace.
    pub(crate) fn from_clipped_spectrum(vals: &[f64], vecs: &CMatrix) -> Result<Self> {
        let n = vals.len();
        let clipped: Vec<f64> = vals.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NotUnitTrace { trace: total });
        }
        let mut m = CMatrix::zeros(n, n);
        for (k, &lam) in clipped.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            let w = lam / total;
            for r in 0..n {
                let vr = vecs[(r, k)] * w;
                for c in 0..n {
                    m[(r, c)] += vr * vecs[(c, k)].conj();
                }
            }
        }
        Ok(DensityMatrix::from_trusted(m))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(DensityMatrix { matrix: CMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)) })
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        DensityMatrix::new(CMatrix::from_real_diagonal(probs))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, unitary: &CMatrix) -> Result<Self> {
        if unitary.rows() != self.dim() || unitary.cols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: unitary.rows() });
        }
        Ok(DensityMatrix::from_trusted(unitary.matmul(&self.matrix).matmul(&unitary.adjoint())))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = hermitian_eigen(&self.matrix);
        vals.into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary whose column `k` is the eigenvector for `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let lam = CMatrix::from_real_diagonal(&self.eigenvalues);
        self.eigenvectors.matmul(&lam).matmul(&self.eigenvectors.adjoint())
    }

    /// The state written in its own eigenbasis, `diag(λ)`.
    pub fn diagonal_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::diagonal(&self.eigenvalues)
    }
}

/// Deterministic spectral decomposition of a Hermitian matrix.
///
/// Ties are broken by a stable descending sort of the Jacobi output, then
/// each eigenvector is rotated so its first component above
/// [`PHASE_FIX_TOL`] is real and positive.
pub fn eigendecompose_matrix(a: &CMatrix) -> Result<EigenDecomposition> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::InvalidDimension(a.rows()));
    }
    let defect = a.hermiticity_defect();
    if !(defect <= VALIDATION_TOL) {
        return Err(Error::NotHermitian { defect });
    }
    let n = a.rows();
    let (vals, vecs) = hermitian_eigen(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(core::cmp::Ordering::Equal));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let pivot = (0..n).map(|r| vecs[(r, src)]).find(|z| z.norm() > PHASE_FIX_TOL);
        let phase = match pivot {
            Some(z) => z.conj() / z.norm(),
            None => C64::new(1.0, 0.0),
        };
        for r in 0..n {
            eigenvectors[(r, col)] = vecs[(r, src)] * phase;
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

pub fn eigendecompose(rho: &DensityMatrix) -> EigenDecomposition {
    eigendecompose_matrix(rho.matrix()).expect("density matrices are Hermitian")
}

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    Ok(())
}

/// `Tr √(√ρ σ √ρ)`, the root fidelity.
fn root_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let sqrt_rho = hermitian_function(rho.matrix(), |x| x.max(0.0).sqrt());
    let inner = sqrt_rho.matmul(sigma.matrix()).matmul(&sqrt_rho).hermitian_part();
    let (vals, _) = hermitian_eigen(&inner);
    let sum: f64 = vals.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok(sum.clamp(0.0, 1.0))
}

/// `Tr²(√(√ρ σ √ρ))`, in `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let f = root_fidelity(rho, sigma)?;
    Ok(f * f)
}

pub fn infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(1.0 - fidelity(rho, sigma)?)
}

/// Squared Bures distance `2(1 − Tr √(√ρ σ √ρ))`.
pub fn bures_distance_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(2.0 * (1.0 - root_fidelity(rho, sigma)?))
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    PureState::normalized(v)
}

/// Hilbert-Schmidt random mixed state `GG† / Tr(GG†)`.
pub fn random_full_rank<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let ggh = g.matmul(&g.adjoint());
    let tr = ggh.trace().re;
    Ok(DensityMatrix::from_trusted(ggh.scale(C64::new(1.0 / tr, 0.0))))
}

/// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMatrix> {
    if dim < 1 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let proj = crate::linalg::inner(u, &v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| cols[c][r]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn ket(d: usize, k: usize) -> DensityMatrix {
        PureState::basis(d, k).unwrap().to_density()
    }

    #[test]
    fn fidelity_reference_cases() {
        let rho = random_full_rank(4, &mut SeedStream::new(1).rng()).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        assert!(fidelity(&ket(2, 0), &ket(2, 1)).unwrap().abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((fidelity(&mixed, &ket(2, 0)).unwrap() - 0.5).abs() < 1e-14);
        assert!((infidelity(&mixed, &ket(2, 0)).unwrap() - 0.5).abs() < 1e-14);
        assert!((infidelity(&ket(2, 0), &ket(2, 1)).unwrap() - 1.0).abs() < 1e-14);
        assert!(bures_distance_sq(&rho, &rho).unwrap().abs() < 1e-9);
        assert!((bures_distance_sq(&ket(2, 0), &ket(2, 1)).unwrap() - 2.0).abs() < 1e-14);
        let expected = 2.0 * (1.0 - FRAC_1_SQRT_2);
        assert!((bures_distance_sq(&mixed, &ket(2, 0)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2).unwrap();
        let b = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(matches!(fidelity(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn construction_rejects_invalid_matrices() {
        let not_psd = CMatrix::from_real_diagonal(&[1.1, -0.1]);
        assert!(matches!(DensityMatrix::new(not_psd), Err(Error::NotPositive { .. })));
        let bad_trace = CMatrix::from_real_diagonal(&[0.6, 0.6]);
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::NotUnitTrace { .. })));
        let mut nh = CMatrix::from_real_diagonal(&[0.5, 0.5]);
        nh[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(nh), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigendecompose_diagonal_and_degenerate() {
        let e = eigendecompose(&DensityMatrix::diagonal(&[0.3, 0.7]).unwrap());
        assert_eq!(e.eigenvalues(), &[0.7, 0.3]);
        assert!((e.eigenvectors()[(1, 0)].re - 1.0).abs() < 1e-15);
        assert!((e.eigenvectors()[(0, 1)].re - 1.0).abs() < 1e-15);

        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let a = eigendecompose(&mixed);
        let b = eigendecompose(&mixed);
        assert_eq!(a, b);
        assert_eq!(a.eigenvalues(), &[0.5, 0.5]);
        assert_eq!(a.eigenvectors(), &CMatrix::identity(2));
    }

    #[test]
    fn eigendecompose_recovers_interference_frame() {
        // H = (1/√2)[[1,1],[1,-1]]; ρ = H diag(0.9, 0.1) H†.
        let s = FRAC_1_SQRT_2;
        let h = CMatrix::from_fn(2, 2, |r, c| C64::new(if r == 1 && c == 1 { -s } else { s }, 0.0));
        let rho = DensityMatrix::new(h.matmul(&CMatrix::from_real_diagonal(&[0.9, 0.1])).matmul(&h.adjoint())).unwrap();
        let e = eigendecompose(&rho);
        assert!((e.eigenvalues()[0] - 0.9).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - 0.1).abs() < 1e-14);
        // Phase-fixed columns: (1,1)/√2 and (1,-1)/√2.
        for r in 0..2 {
            for c in 0..2 {
                assert!((e.eigenvectors()[(r, c)] - h[(r, c)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigendecomposition_invariants_on_random_states() {
        let mut rng = SeedStream::new(11).rng();
        for d in 2..=8 {
            let rho = random_full_rank(d, &mut rng).unwrap();
            let e = eigendecompose(&rho);
            assert!(e.eigenvectors().unitarity_defect() < 1e-10);
            assert!((&e.reconstruct() - rho.matrix()).max_abs() < 1e-9);
            assert!(e.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
            for c in 0..d {
                let first = (0..d).map(|r| e.eigenvectors()[(r, c)]).find(|z| z.norm() > PHASE_FIX_TOL).unwrap();
                assert!(first.im.abs() < 1e-12 && first.re > 0.0);
            }
        }
    }

    #[test]
    fn random_generators_are_seed_pure() {
        let a = random_pure(4, &mut SeedStream::new(5).rng()).unwrap();
        let b = random_pure(4, &mut SeedStream::new(5).rng()).unwrap();
        assert_eq!(a, b);
        assert!(matches!(random_pure(1, &mut SeedStream::new(5).rng()), Err(Error::InvalidDimension(1))));
        assert!(matches!(random_full_rank(0, &mut SeedStream::new(5).rng()), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn hilbert_schmidt_mean_is_maximally_mixed() {
        let mut rng = SeedStream::new(99).rng();
        let mut acc = CMatrix::zeros(3, 3);
        let samples = 10_000;
        for _ in 0..samples {
            acc = &acc + random_full_rank(3, &mut rng).unwrap().matrix();
        }
        let mean = acc.scale(C64::new(1.0 / samples as f64, 0.0));
        let target = CMatrix::identity(3).scale(C64::new(1.0 / 3.0, 0.0));
        assert!((&mean - &target).max_abs() < 0.01);
    }

    #[test]
    fn qubit_hilbert_schmidt_draws_are_full_rank() {
        let mut rng = SeedStream::new(3).rng();
        for _ in 0..1000 {
            assert!(random_full_rank(2, &mut rng).unwrap().min_eigenvalue() > 0.0);
        }
    }

    #[test]
    fn fidelity_is_unitarily_invariant() {
        let mut rng = SeedStream::new(21).rng();
        for d in [2, 3, 5] {
            let rho = random_full_rank(d, &mut rng).unwrap();
            let sigma = random_full_rank(d, &mut rng).unwrap();
            let u = random_unitary(d, &mut rng).unwrap();
            let f0 = fidelity(&rho, &sigma).unwrap();
            let f1 = fidelity(&rho.conjugate_by(&u).unwrap(), &sigma.conjugate_by(&u).unwrap()).unwrap();
            assert!((f0 - f1).abs() < 1e-9);
            let sym = fidelity(&sigma, &rho).unwrap();
            assert!((f0 - sym).abs() < 1e-9);
        }
    }
}
