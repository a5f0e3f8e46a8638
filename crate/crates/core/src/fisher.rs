//! Fisher information and the accuracy bounds derived from it.
//!
//! Coordinates are Bloch coordinates with respect to the Gell-Mann family
//! expressed in a reference frame, normally the eigenbasis of the state, so
//! that `ρ = Σ λ_m |m><m|` is diagonal. In that frame the quantum Fisher
//! information has the closed block form
//!
//! * `J^{AD} = 0`,
//! * `J^D_{kl} = Σ_m c_{km} c_{lm} / (4 λ_m)` with `c_{km} = <m|σ^D_k|m>`,
//! * `J^A_{αjk,βlm} = δ_{αβ} δ_{jl} δ_{km} / (λ_j + λ_k)`,
//!
//! which [`qfim`] assembles directly and [`sld_qfim_oracle`] reproduces from
//! symmetric logarithmic derivatives.

use alloc::vec::Vec;

use crate::bases::{basis_count, BasisSet};
use crate::error::{Error, Result};
use crate::gellmann::{block_indices, coord_count, diagonal_entries, kinds, operator, pair_count, pair_index, vector_expectations};
use crate::linalg::{symmetric_eigen, symmetric_function, CMatrix, RMatrix};
use crate::state::{DensityMatrix, EigenDecomposition};
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

/// Eigenvalues at or below this make the state rank-deficient for Fisher purposes.
pub const RANK_TOL: f64 = 1e-10;
const ZERO_PROB: f64 = 1e-14;
const ZERO_DERIVATIVE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FisherKind {
    Classical,
    Quantum,
}

/// A `(d² − 1) × (d² − 1)` Fisher matrix in Bloch-coordinate order.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherMatrix {
    dim: usize,
    kind: FisherKind,
    matrix: RMatrix,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    /// Off-diagonal-operator block.
    pub fn a_block(&self) -> RMatrix {
        let (a, _) = block_indices(self.dim);
        self.matrix.submatrix(&a, &a)
    }

    /// Diagonal-operator block.
    pub fn d_block(&self) -> RMatrix {
        let (_, d) = block_indices(self.dim);
        self.matrix.submatrix(&d, &d)
    }

    /// Cross block, rows in A and columns in D.
    pub fn ad_block(&self) -> RMatrix {
        let (a, d) = block_indices(self.dim);
        self.matrix.submatrix(&a, &d)
    }
}

fn check_full_rank(eig: &EigenDecomposition) -> Result<()> {
    let min = eig.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min <= RANK_TOL {
        return Err(Error::SingularQfim { min_eigenvalue: min });
    }
    Ok(())
}

/// Quantum Fisher information from the closed block formulas, in the
/// eigenframe of `eig`.
pub fn qfim(eig: &EigenDecomposition) -> Result<FisherMatrix> {
    check_full_rank(eig)?;
    let d = eig.dim();
    let lam = eig.eigenvalues();
    let n = coord_count(d);
    let p = pair_count(d);
    let mut m = RMatrix::zeros(n, n);
    for alpha in 0..2 {
        for j in 0..d {
            for k in j + 1..d {
                let idx = alpha * p + pair_index(d, j, k);
                m[(idx, idx)] = 1.0 / (lam[j] + lam[k]);
            }
        }
    }
    let c: Vec<Vec<f64>> = (1..d).map(|k| diagonal_entries(d, k).expect("valid index")).collect();
    for k in 0..d - 1 {
        for l in 0..d - 1 {
            let v: f64 = (0..d).map(|mm| c[k][mm] * c[l][mm] / (4.0 * lam[mm])).sum();
            m[(2 * p + k, 2 * p + l)] = v;
        }
    }
    Ok(FisherMatrix { dim: d, kind: FisherKind::Quantum, matrix: m })
}

/// Quantum Fisher information from explicit symmetric logarithmic
/// derivatives: `L_a` solves `∂_a ρ = (ρ L_a + L_a ρ)/2` with
/// `∂_a ρ = σ_a / 2`, and `J_ab = ½ Tr[ρ (L_a L_b + L_b L_a)]`.
pub fn sld_qfim_oracle(eig: &EigenDecomposition) -> Result<FisherMatrix> {
    check_full_rank(eig)?;
    let d = eig.dim();
    let lam = eig.eigenvalues();
    let rho = CMatrix::from_real_diagonal(lam);
    let slds: Vec<CMatrix> = kinds(d)
        .into_iter()
        .map(|kind| {
            let sigma = operator(d, kind).expect("valid kind");
            CMatrix::from_fn(d, d, |m, n| sigma.matrix()[(m, n)] * (1.0 / (lam[m] + lam[n])))
        })
        .collect();
    let n = slds.len();
    let mut out = RMatrix::zeros(n, n);
    for a in 0..n {
        let rho_la = rho.matmul(&slds[a]);
        for b in a..n {
            let ab = rho_la.trace_product(&slds[b]);
            let ba = rho.matmul(&slds[b]).trace_product(&slds[a]);
            let v = 0.5 * (ab + ba).re;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(FisherMatrix { dim: d, kind: FisherKind::Quantum, matrix: out })
}

/// Quantum Fisher information of an arbitrary full-rank state in its own
/// eigenframe.
pub fn qfim_of_state(rho: &DensityMatrix) -> Result<FisherMatrix> {
    qfim(&crate::state::eigendecompose(rho))
}

/// Classical Fisher information `Σ (1/p) ∂p ∂p` of the whole basis set,
/// each basis carrying its share `1/M` of the ensemble.
///
/// Derivatives are taken with respect to Bloch coordinates of the Gell-Mann
/// family expressed in the set's frame, `∂p/∂S_a = <b|U σ_a U†|b>/2`.
pub fn cfim(rho: &DensityMatrix, set: &BasisSet) -> Result<FisherMatrix> {
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: rho.dim() });
    }
    let d = set.dim();
    let n = coord_count(d);
    let u_adj = set.frame().adjoint();
    let weight = 1.0 / set.len() as f64;
    let mut out = RMatrix::zeros(n, n);
    for basis in set.bases() {
        for v in basis.vectors() {
            let p = rho.matrix().expectation(v.amplitudes()).re;
            let in_frame = u_adj.mul_vec(v.amplitudes());
            let grad: Vec<f64> = vector_expectations(&in_frame).into_iter().map(|x| 0.5 * x).collect();
            if p <= ZERO_PROB {
                if grad.iter().any(|g| g.abs() > ZERO_DERIVATIVE) {
                    return Err(Error::SingularCfim);
                }
                continue;
            }
            let w = weight / p;
            for a in 0..n {
                if grad[a] == 0.0 {
                    continue;
                }
                let ga = w * grad[a];
                for b in 0..n {
                    out[(a, b)] += ga * grad[b];
                }
            }
        }
    }
    Ok(FisherMatrix { dim: d, kind: FisherKind::Classical, matrix: out })
}

/// [`cfim`] for the adaptive set: `set` must already be rotated into the
/// eigenframe of `rho`.
pub fn cfim_haqt(rho: &DensityMatrix, set: &BasisSet) -> Result<FisherMatrix> {
    cfim(rho, set)
}

/// Lowest achievable mean infidelity with separable measurements on `n`
/// copies: `(d² − 1)(d + 1) / (4N)`.
pub fn gill_massar_bound(d: usize, n: u64) -> f64 {
    let d = d as f64;
    (d * d - 1.0) * (d + 1.0) / (4.0 * n as f64)
}

/// Guarantee factor `(2d − 1 + (d mod 2)) / (d + 1)`.
pub fn alpha(d: usize) -> f64 {
    basis_count(d) as f64 / (d as f64 + 1.0)
}

/// Smallest eigenvalue of `M·J^{−½} I J^{−½}` minus one. Non-negative iff
/// `I ≥ J / M`.
pub fn block_optimality_gap(cfim: &RMatrix, qfim: &RMatrix, basis_count: usize) -> Result<f64> {
    if cfim.rows() != qfim.rows() || !cfim.is_square() || !qfim.is_square() {
        return Err(Error::DimensionMismatch { expected: qfim.rows(), found: cfim.rows() });
    }
    let (vals, _) = symmetric_eigen(qfim);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(0.0f64, f64::max);
    if !(min > RANK_TOL * max.max(1.0)) {
        return Err(Error::SingularQfim { min_eigenvalue: min });
    }
    let inv_sqrt = symmetric_function(qfim, |x| 1.0 / x.sqrt());
    let whitened = inv_sqrt.matmul(cfim).matmul(&inv_sqrt).scale(basis_count as f64);
    let (w, _) = symmetric_eigen(&whitened);
    Ok(w.into_iter().fold(f64::INFINITY, f64::min) - 1.0)
}

/// [`block_optimality_gap`] on full Fisher matrices with `M = M_d`.
pub fn optimality_gap(cfim: &FisherMatrix, qfim: &FisherMatrix) -> Result<f64> {
    if cfim.dim != qfim.dim {
        return Err(Error::DimensionMismatch { expected: qfim.dim, found: cfim.dim });
    }
    block_optimality_gap(&cfim.matrix, &qfim.matrix, basis_count(cfim.dim))
}

/// Asymptotic mean infidelity `Tr(J I⁻¹) / (4N)` of an efficient estimator
/// with Fisher information `cfim` per copy.
pub fn predicted_mean_infidelity(cfim: &FisherMatrix, qfim: &FisherMatrix, n: u64) -> Result<f64> {
    let (vals, _) = symmetric_eigen(cfim.matrix());
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::SingularCfim);
    }
    let inv = symmetric_function(cfim.matrix(), |x| 1.0 / x);
    Ok(qfim.matrix().matmul(&inv).trace() / (4.0 * n as f64))
}
