//! Generalized Gell-Mann operators and Bloch coordinates.
//!
//! Coordinates are laid out as all real off-diagonal pairs `(j, k)` in
//! lexicographic order, then all imaginary off-diagonal pairs, then the
//! diagonal operators `k = 1..d-1`. The first two groups form the "A" block
//! of Fisher matrices and the last group the "D" block.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::state::{DensityMatrix, PureState};
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

/// Which of the two off-diagonal operators on a pair: `i^α(|j><k| + (−1)^α |k><j|)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quadrature {
    /// α = 0, the X-like operator.
    Re,
    /// α = 1, the Y-like operator `i(|j><k| − |k><j|)`.
    Im,
}

impl Quadrature {
    pub const BOTH: [Quadrature; 2] = [Quadrature::Re, Quadrature::Im];

    pub fn alpha(self) -> usize {
        match self {
            Quadrature::Re => 0,
            Quadrature::Im => 1,
        }
    }

    pub fn from_alpha(alpha: usize) -> Result<Self> {
        match alpha {
            0 => Ok(Quadrature::Re),
            1 => Ok(Quadrature::Im),
            _ => Err(Error::InvalidIndex(format!("alpha must be 0 or 1, got {alpha}"))),
        }
    }

    /// `i^α`.
    pub fn phase(self) -> C64 {
        match self {
            Quadrature::Re => C64::new(1.0, 0.0),
            Quadrature::Im => C64::new(0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GellMannKind {
    Diagonal { k: usize },
    OffDiagonal { quadrature: Quadrature, j: usize, k: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GellMannOperator {
    dim: usize,
    kind: GellMannKind,
    matrix: CMatrix,
}

impl GellMannOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> GellMannKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Number of unordered pairs `j < k`.
pub fn pair_count(d: usize) -> usize {
    d * (d - 1) / 2
}

/// `d² − 1`.
pub fn coord_count(d: usize) -> usize {
    d * d - 1
}

/// Lexicographic position of the pair `(j, k)`, `j < k < d`.
pub fn pair_index(d: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < d);
    j * d - j * (j + 1) / 2 + (k - j - 1)
}

/// Bloch-vector slot for an operator.
pub fn coord_index(d: usize, kind: GellMannKind) -> usize {
    match kind {
        GellMannKind::OffDiagonal { quadrature, j, k } => quadrature.alpha() * pair_count(d) + pair_index(d, j, k),
        GellMannKind::Diagonal { k } => 2 * pair_count(d) + k - 1,
    }
}

/// Operator kinds in Bloch-vector order.
pub fn kinds(d: usize) -> Vec<GellMannKind> {
    let mut out = Vec::with_capacity(coord_count(d));
    for quadrature in Quadrature::BOTH {
        for j in 0..d {
            for k in j + 1..d {
                out.push(GellMannKind::OffDiagonal { quadrature, j, k });
            }
        }
    }
    out.extend((1..d).map(|k| GellMannKind::Diagonal { k }));
    out
}

/// Coordinate indices of the off-diagonal ("A") and diagonal ("D") blocks.
pub fn block_indices(d: usize) -> (Vec<usize>, Vec<usize>) {
    let split = 2 * pair_count(d);
    ((0..split).collect(), (split..coord_count(d)).collect())
}

/// Diagonal entries of `σ^D_k`: `√(2/(k(k+1)))·(1,…,1, −k, 0,…,0)`.
pub fn diagonal_entries(d: usize, k: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if k == 0 || k >= d {
        return Err(Error::InvalidIndex(format!("diagonal index k = {k} outside 1..{d}")));
    }
    let pref = (2.0 / (k * (k + 1)) as f64).sqrt();
    Ok((0..d)
        .map(|m| match m.cmp(&k) {
            core::cmp::Ordering::Less => pref,
            core::cmp::Ordering::Equal => -(k as f64) * pref,
            core::cmp::Ordering::Greater => 0.0,
        })
        .collect())
}

pub fn diagonal_op(d: usize, k: usize) -> Result<GellMannOperator> {
    let diag = diagonal_entries(d, k)?;
    Ok(GellMannOperator { dim: d, kind: GellMannKind::Diagonal { k }, matrix: CMatrix::from_real_diagonal(&diag) })
}

fn check_pair(d: usize, j: usize, k: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if j >= k || k >= d {
        return Err(Error::InvalidIndex(format!("pair ({j}, {k}) needs 0 <= j < k < {d}")));
    }
    Ok(())
}

pub fn offdiag_op(d: usize, quadrature: Quadrature, j: usize, k: usize) -> Result<GellMannOperator> {
    check_pair(d, j, k)?;
    let phase = quadrature.phase();
    let sign = if quadrature == Quadrature::Re { 1.0 } else { -1.0 };
    let mut m = CMatrix::zeros(d, d);
    m[(j, k)] = phase;
    m[(k, j)] = phase * sign;
    Ok(GellMannOperator { dim: d, kind: GellMannKind::OffDiagonal { quadrature, j, k }, matrix: m })
}

pub fn operator(d: usize, kind: GellMannKind) -> Result<GellMannOperator> {
    match kind {
        GellMannKind::Diagonal { k } => diagonal_op(d, k),
        GellMannKind::OffDiagonal { quadrature, j, k } => offdiag_op(d, quadrature, j, k),
    }
}

/// The full family in Bloch-vector order.
pub fn operators(d: usize) -> Result<Vec<GellMannOperator>> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    kinds(d).into_iter().map(|kind| operator(d, kind)).collect()
}

/// `|±^α_{j,k}> = (|j> ± i^α |k>)/√2`. The pair may be given in either order.
///
/// These are the non-null eigenvectors of `σ^A_{α,j,k}` with eigenvalue
/// `±(−1)^α`: under the `i(|j><k| − |k><j|)` convention the `+` state of the
/// imaginary quadrature is the −1 eigenvector.
pub fn pair_state(d: usize, quadrature: Quadrature, j: usize, k: usize, sign: Sign) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if j == k || j >= d || k >= d {
        return Err(Error::InvalidIndex(format!("pair state needs distinct j, k < {d}, got ({j}, {k})")));
    }
    let mut v = alloc::vec![C64::new(0.0, 0.0); d];
    v[j] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[k] = quadrature.phase() * (sign.value() * FRAC_1_SQRT_2);
    Ok(PureState::from_raw(v))
}

/// `<v|σ_a|v>` for every operator, in Bloch order, without building matrices.
pub fn vector_expectations(v: &[C64]) -> Vec<f64> {
    let d = v.len();
    let mut out = alloc::vec![0.0; coord_count(d)];
    let p = pair_count(d);
    let mut idx = 0;
    for j in 0..d {
        for k in j + 1..d {
            let z = v[j].conj() * v[k];
            out[idx] = 2.0 * z.re;
            out[p + idx] = -2.0 * z.im;
            idx += 1;
        }
    }
    let mut prefix = 0.0;
    for k in 1..d {
        prefix += v[k - 1].norm_sqr();
        let pref = (2.0 / (k * (k + 1)) as f64).sqrt();
        out[2 * p + k - 1] = pref * (prefix - k as f64 * v[k].norm_sqr());
    }
    out
}

/// Real Bloch coordinates `S_a = Tr(ρ σ_a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochVector {
    dim: usize,
    coords: Vec<f64>,
}

impl BlochVector {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if coords.len() != coord_count(dim) {
            return Err(Error::DimensionMismatch { expected: coord_count(dim), found: coords.len() });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidIndex("non-finite Bloch coordinate".into()));
        }
        Ok(BlochVector { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Coordinates of a Hermitian matrix, `Tr(A σ_a)`.
pub fn matrix_coords(a: &CMatrix) -> Vec<f64> {
    let d = a.rows();
    let p = pair_count(d);
    let mut out = alloc::vec![0.0; coord_count(d)];
    let mut idx = 0;
    for j in 0..d {
        for k in j + 1..d {
            let z = a[(j, k)];
            let w = a[(k, j)];
            out[idx] = z.re + w.re;
            out[p + idx] = z.im - w.im;
            idx += 1;
        }
    }
    let mut prefix = 0.0;
    for k in 1..d {
        prefix += a[(k - 1, k - 1)].re;
        let pref = (2.0 / (k * (k + 1)) as f64).sqrt();
        out[2 * p + k - 1] = pref * (prefix - k as f64 * a[(k, k)].re);
    }
    out
}

/// `I/d + ½ Σ S_a σ_a` as a raw Hermitian matrix (not checked for positivity).
pub fn matrix_from_coords(d: usize, coords: &[f64]) -> CMatrix {
    let p = pair_count(d);
    let mut m = CMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0));
    let mut idx = 0;
    for j in 0..d {
        for k in j + 1..d {
            let re = coords[idx];
            let im = coords[p + idx];
            // ½(re·(|j><k| + |k><j|) + im·i(|j><k| − |k><j|))
            m[(j, k)] += C64::new(0.5 * re, 0.5 * im);
            m[(k, j)] += C64::new(0.5 * re, -0.5 * im);
            idx += 1;
        }
    }
    for k in 1..d {
        let diag = diagonal_entries(d, k).expect("valid diagonal index");
        let s = 0.5 * coords[2 * p + k - 1];
        for (m_idx, x) in diag.iter().enumerate() {
            m[(m_idx, m_idx)] += C64::new(s * x, 0.0);
        }
    }
    m
}

pub fn bloch_from_state(rho: &DensityMatrix) -> BlochVector {
    BlochVector { dim: rho.dim(), coords: matrix_coords(rho.matrix()) }
}

/// Inverse of [`bloch_from_state`]; rejects vectors whose matrix has an
/// eigenvalue below −1e−8 and clips smaller negative round-off.
pub fn state_from_bloch(v: &BlochVector) -> Result<DensityMatrix> {
    let m = matrix_from_coords(v.dim, &v.coords);
    let eig = crate::state::eigendecompose_matrix(&m)?;
    let min = eig.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        return Err(Error::UnphysicalBlochVector { min_eigenvalue: min });
    }
    if min >= 0.0 {
        return DensityMatrix::new(m);
    }
    DensityMatrix::from_clipped_spectrum(eig.eigenvalues(), eig.eigenvectors())
}
