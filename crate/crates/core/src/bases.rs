//! The minimal family of measurement bases.
//!
//! Every basis groups commuting Gell-Mann eigenstates: a handful of
//! disjoint index pairs `(j, k)`, each contributing `|±^α_{j,k}>`, plus the
//! computational states not covered by a pair. For odd `d` there are `2d`
//! bases, each holding one computational state. For even `d` there are
//! `2d − 1`: index `d − 1` is paired with `k` in basis `k`, and the last basis
//! is the computational one. Arithmetic on pair indices is modulo `d` (odd)
//! or modulo `d − 1` over `{0, …, d − 2}` (even).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gellmann::{pair_state, Quadrature, Sign};
use crate::linalg::{inner, symmetric_eigen, CMatrix, RMatrix, C64};
use crate::rng::Fingerprint;
use crate::state::{EigenDecomposition, PureState};
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

/// Orthonormality tolerance for basis vectors.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Singular values above this count toward the operator-space rank.
pub const RANK_TOL: f64 = 1e-8;

/// Where a basis vector comes from, in the computational frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Computational(usize),
    Pair { quadrature: Quadrature, j: usize, k: usize, sign: Sign },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    label: usize,
    vectors: Vec<PureState>,
    provenance: Vec<Element>,
}

impl MeasurementBasis {
    /// Checks that `vectors` form an orthonormal basis of `C^n` with one
    /// provenance entry each.
    pub fn new(label: usize, vectors: Vec<PureState>, provenance: Vec<Element>) -> Result<Self> {
        let n = vectors.len();
        if provenance.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: provenance.len() });
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.dim() });
            }
            for w in &vectors[..i] {
                let overlap = inner(w.amplitudes(), v.amplitudes()).norm();
                if overlap > ORTHONORMAL_TOL {
                    return Err(Error::NotUnitary { defect: overlap });
                }
            }
        }
        Ok(MeasurementBasis { label, vectors, provenance })
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn provenance(&self) -> &[Element] {
        &self.provenance
    }

    fn from_elements(dim: usize, label: usize, elements: Vec<Element>) -> Self {
        let vectors = elements
            .iter()
            .map(|el| match *el {
                Element::Computational(k) => PureState::basis(dim, k).expect("index in range"),
                Element::Pair { quadrature, j, k, sign } => pair_state(dim, quadrature, j, k, sign).expect("valid pair"),
            })
            .collect();
        MeasurementBasis { label, vectors, provenance: elements }
    }
}

/// An ordered set of bases with the frame they are expressed in.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    dim: usize,
    bases: Vec<MeasurementBasis>,
    frame: CMatrix,
}

impl BasisSet {
    /// Assembles a set from validated bases; `frame` must be unitary.
    pub fn new(dim: usize, frame: CMatrix, bases: Vec<MeasurementBasis>) -> Result<Self> {
        if frame.rows() != dim || frame.cols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: frame.rows() });
        }
        let defect = frame.unitarity_defect();
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotUnitary { defect });
        }
        if let Some(b) = bases.iter().find(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
        }
        Ok(BasisSet { dim, bases, frame })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bases(&self) -> &[MeasurementBasis] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Unitary taking computational-frame vectors to this set's vectors.
    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    /// Replaces every vector `v` by `U v` and composes `U` into the frame.
    pub fn rotated(&self, unitary: &CMatrix) -> Result<BasisSet> {
        if unitary.rows() != self.dim || unitary.cols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: unitary.rows() });
        }
        let defect = unitary.unitarity_defect();
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotUnitary { defect });
        }
        let bases = self
            .bases
            .iter()
            .map(|b| MeasurementBasis {
                label: b.label,
                vectors: b.vectors.iter().map(|v| PureState::from_raw(unitary.mul_vec(v.amplitudes()))).collect(),
                provenance: b.provenance.clone(),
            })
            .collect();
        Ok(BasisSet { dim: self.dim, bases, frame: unitary.matmul(&self.frame) })
    }

    /// Drops the basis at position `index`; used for ablation checks.
    pub fn without_basis(&self, index: usize) -> BasisSet {
        let mut bases = self.bases.clone();
        bases.remove(index);
        BasisSet { dim: self.dim, bases, frame: self.frame.clone() }
    }

    /// Keeps only the listed bases, in the given order.
    pub fn reordered(&self, order: &[usize]) -> BasisSet {
        BasisSet { dim: self.dim, bases: order.iter().map(|&i| self.bases[i].clone()).collect(), frame: self.frame.clone() }
    }

    /// FNV-1a hash of the dimension and frame bits; identifies count data.
    pub fn frame_hash(&self) -> u64 {
        frame_hash(self.dim, &self.frame)
    }
}

pub fn frame_hash(dim: usize, frame: &CMatrix) -> u64 {
    let mut h = Fingerprint::new();
    h.u64(dim as u64);
    for z in frame.as_slice() {
        h.f64(z.re).f64(z.im);
    }
    h.finish()
}

/// `M_d = 2d − 1 + (d mod 2)`.
pub fn basis_count(d: usize) -> usize {
    2 * d - 1 + d % 2
}

fn push_pair(out: &mut Vec<Element>, quadrature: Quadrature, a: usize, b: usize) {
    let (j, k) = if a < b { (a, b) } else { (b, a) };
    for sign in [Sign::Plus, Sign::Minus] {
        out.push(Element::Pair { quadrature, j, k, sign });
    }
}

fn odd_elements(d: usize, quadrature: Quadrature, k: usize) -> Vec<Element> {
    let m = d as isize;
    let half = (d as isize - 1) / 2;
    let k = k as isize;
    let off = (k - half).abs();
    let wrap = |x: isize| x.rem_euclid(m) as usize;
    let mut out = Vec::with_capacity(d);
    out.push(Element::Computational(k as usize));
    for nu in 1..=half - off {
        push_pair(&mut out, quadrature, wrap(k - nu), wrap(k + nu));
    }
    for mu in 0..off {
        push_pair(&mut out, quadrature, wrap(half + k - mu), wrap(half + k + 1 + mu));
    }
    out
}

fn even_elements(d: usize, quadrature: Quadrature, k: usize) -> Vec<Element> {
    let m = d as isize - 1;
    let half = (d as isize - 2) / 2;
    let k = k as isize;
    let off = (k - half).abs();
    let wrap = |x: isize| x.rem_euclid(m) as usize;
    let mut out = Vec::with_capacity(d);
    push_pair(&mut out, quadrature, k as usize, d - 1);
    for nu in 1..=half - off {
        push_pair(&mut out, quadrature, wrap(k - nu), wrap(k + nu));
    }
    // Strict upper limit: the inclusive range over-fills the basis.
    for mu in 0..off {
        push_pair(&mut out, quadrature, wrap(half + k - mu), wrap(half + k + 1 + mu));
    }
    out
}

/// Builds the `M_d` bases in the computational frame.
///
/// Labels follow `k + dα` (odd) or `k + (d − 1)α` (even, with the
/// computational basis last). Panics if the construction ever fails its own
/// pair-coverage check, which would be a bug in the index arithmetic.
pub fn build_basis_set(d: usize) -> Result<BasisSet> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut bases = Vec::with_capacity(basis_count(d));
    if d % 2 == 1 {
        for quadrature in Quadrature::BOTH {
            for k in 0..d {
                let label = k + d * quadrature.alpha();
                bases.push(MeasurementBasis::from_elements(d, label, odd_elements(d, quadrature, k)));
            }
        }
    } else {
        for quadrature in Quadrature::BOTH {
            for k in 0..d - 1 {
                let label = k + (d - 1) * quadrature.alpha();
                bases.push(MeasurementBasis::from_elements(d, label, even_elements(d, quadrature, k)));
            }
        }
        bases.push(MeasurementBasis::from_elements(d, 2 * d - 2, (0..d).map(Element::Computational).collect()));
    }
    let set = BasisSet { dim: d, bases, frame: CMatrix::identity(d) };
    let coverage = pair_coverage(&set);
    assert!(
        coverage.values().all(|&c| c == 1) && coverage.len() == d * (d - 1),
        "basis construction for d = {d} does not cover every pair exactly once"
    );
    Ok(set)
}

/// Rotates a basis set into the eigenframe of a state.
pub fn rotate_basis_set(set: &BasisSet, frame: &EigenDecomposition) -> Result<BasisSet> {
    set.rotated(frame.eigenvectors())
}

/// Outcome of [`verify_basis_set`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub dim: usize,
    pub basis_count: usize,
    pub expected_basis_count: usize,
    /// Bases with a vector count different from `d`.
    pub malformed_bases: Vec<usize>,
    /// Largest `|<u|v> − δ_uv|` within any basis.
    pub max_orthonormality_defect: f64,
    /// Occurrences of every pair `(α, j, k)`; missing pairs are listed with 0.
    pub pair_coverage: BTreeMap<(Quadrature, usize, usize), usize>,
    /// Occurrences of each computational index.
    pub computational_coverage: Vec<usize>,
    /// Numerical rank of the projector family in operator space.
    pub rank: usize,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> Vec<alloc::string::String> {
        let mut out = Vec::new();
        if self.basis_count != self.expected_basis_count {
            out.push(format!("{} bases, expected {}", self.basis_count, self.expected_basis_count));
        }
        if !self.malformed_bases.is_empty() {
            out.push(format!("bases without exactly d vectors: {:?}", self.malformed_bases));
        }
        if !(self.max_orthonormality_defect <= ORTHONORMAL_TOL) {
            out.push(format!("orthonormality defect {:e}", self.max_orthonormality_defect));
        }
        for (&(q, j, k), &n) in &self.pair_coverage {
            if n != 1 {
                out.push(format!("pair (alpha={}, {j}, {k}) covered {n} times", q.alpha()));
            }
        }
        if self.rank != self.dim * self.dim {
            out.push(format!("operator-space rank {} < {}", self.rank, self.dim * self.dim));
        }
        out
    }
}

fn pair_coverage(set: &BasisSet) -> BTreeMap<(Quadrature, usize, usize), usize> {
    let d = set.dim;
    let mut cov = BTreeMap::new();
    for q in Quadrature::BOTH {
        for j in 0..d {
            for k in j + 1..d {
                cov.insert((q, j, k), 0);
            }
        }
    }
    for b in &set.bases {
        for el in &b.provenance {
            if let Element::Pair { quadrature, j, k, sign: Sign::Plus } = *el {
                *cov.entry((quadrature, j, k)).or_insert(0) += 1;
            }
        }
    }
    cov
}

/// Real coordinates of a rank-one projector in the `d²`-dimensional space of
/// Hermitian operators, isometric for the Hilbert-Schmidt inner product.
fn projector_coords(v: &[C64]) -> Vec<f64> {
    let d = v.len();
    let mut out = Vec::with_capacity(d * d);
    out.extend(v.iter().map(|z| z.norm_sqr()));
    let s2 = core::f64::consts::SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let z = v[j] * v[k].conj();
            out.push(s2 * z.re);
            out.push(s2 * z.im);
        }
    }
    out
}

/// Numerical rank of the span of all projectors in the set.
pub fn operator_space_rank(set: &BasisSet) -> usize {
    let n = set.dim * set.dim;
    let mut frame_op = RMatrix::zeros(n, n);
    for b in &set.bases {
        for v in &b.vectors {
            let x = projector_coords(v.amplitudes());
            for r in 0..n {
                if x[r] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    frame_op[(r, c)] += x[r] * x[c];
                }
            }
        }
    }
    let (vals, _) = symmetric_eigen(&frame_op);
    vals.iter().filter(|&&x| x > 0.0 && x.sqrt() > RANK_TOL).count()
}

/// Checks orthonormality, pair coverage and informational completeness.
pub fn verify_basis_set(set: &BasisSet) -> VerificationReport {
    let d = set.dim;
    let mut defect = 0.0f64;
    let mut malformed = Vec::new();
    let mut comp = alloc::vec![0usize; d];
    for (i, b) in set.bases.iter().enumerate() {
        if b.vectors.len() != d || b.vectors.iter().any(|v| v.dim() != d) {
            malformed.push(i);
            continue;
        }
        for (a, u) in b.vectors.iter().enumerate() {
            for (c, v) in b.vectors.iter().enumerate().skip(a) {
                let want = if a == c { 1.0 } else { 0.0 };
                defect = defect.max((inner(u.amplitudes(), v.amplitudes()) - C64::new(want, 0.0)).norm());
            }
        }
        for el in &b.provenance {
            if let Element::Computational(k) = *el {
                if k < d {
                    comp[k] += 1;
                }
            }
        }
    }
    let coverage = pair_coverage(set);
    let rank = operator_space_rank(set);
    let mut report = VerificationReport {
        dim: d,
        basis_count: set.bases.len(),
        expected_basis_count: basis_count(d),
        malformed_bases: malformed,
        max_orthonormality_defect: defect,
        pair_coverage: coverage,
        computational_coverage: comp,
        rank,
        passed: false,
    };
    report.passed = report.failures().is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use crate::state::{eigendecompose, random_full_rank, random_unitary};

    fn pairs_of(b: &MeasurementBasis) -> Vec<(usize, usize)> {
        b.provenance()
            .iter()
            .filter_map(|e| match *e {
                Element::Pair { j, k, sign: Sign::Plus, .. } => Some((j, k)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn qutrit_bases_by_hand() {
        let set = build_basis_set(3).unwrap();
        assert_eq!(set.len(), 6);
        let expect = [(0usize, (1usize, 2usize)), (1, (0, 2)), (2, (0, 1))];
        for q in Quadrature::BOTH {
            for &(k, pair) in &expect {
                let b = &set.bases()[k + 3 * q.alpha()];
                assert_eq!(b.provenance()[0], Element::Computational(k));
                assert_eq!(pairs_of(b), alloc::vec![pair]);
                assert!(b.provenance().iter().all(|e| match e {
                    Element::Pair { quadrature, .. } => *quadrature == q,
                    _ => true,
                }));
            }
        }
    }

    #[test]
    fn ququart_partitions() {
        let set = build_basis_set(4).unwrap();
        assert_eq!(set.len(), 7);
        let expect = [alloc::vec![(0, 3), (1, 2)], alloc::vec![(1, 3), (0, 2)], alloc::vec![(2, 3), (0, 1)]];
        for q in Quadrature::BOTH {
            for (k, pairs) in expect.iter().enumerate() {
                assert_eq!(&pairs_of(&set.bases()[k + 3 * q.alpha()]), pairs);
            }
        }
        let comp = &set.bases()[6];
        assert_eq!(comp.provenance(), &(0..4).map(Element::Computational).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn qubit_set_is_the_pauli_eigenbases() {
        let set = build_basis_set(2).unwrap();
        assert_eq!(set.len(), 3);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let x = set.bases()[0].vectors();
        assert!((x[0].amplitudes()[1] - C64::new(s, 0.0)).norm() < 1e-15);
        let y = set.bases()[1].vectors();
        assert!((y[0].amplitudes()[1] - C64::new(0.0, s)).norm() < 1e-15);
        assert_eq!(set.bases()[2].provenance(), &[Element::Computational(0), Element::Computational(1)]);
    }

    #[test]
    fn every_dimension_verifies() {
        for d in 2..=12 {
            let set = build_basis_set(d).unwrap();
            assert_eq!(set.len(), basis_count(d));
            let r = verify_basis_set(&set);
            assert!(r.passed, "d={d}: {:?}", r.failures());
            assert_eq!(r.rank, d * d);
            if d % 2 == 1 {
                assert!(r.computational_coverage.iter().all(|&c| c == 2));
            } else {
                assert!(r.computational_coverage.iter().all(|&c| c == 1));
                assert_eq!(set.bases()[2 * d - 2].provenance().len(), d);
            }
            for b in set.bases() {
                let mut acc = CMatrix::zeros(d, d);
                for v in b.vectors() {
                    acc = &acc + &CMatrix::outer(v.amplitudes());
                }
                assert!((&acc - &CMatrix::identity(d)).max_abs() < 1e-10);
            }
        }
        assert_eq!(build_basis_set(10).unwrap().len(), 19);
    }

    #[test]
    fn removing_a_basis_breaks_completeness() {
        for d in [2, 3, 4, 5] {
            let full = build_basis_set(d).unwrap();
            for i in 0..full.len() {
                let r = verify_basis_set(&full.without_basis(i));
                assert!(!r.passed);
                let has_pair = full.bases()[i].provenance().iter().any(|e| matches!(e, Element::Pair { .. }));
                if has_pair || d == 2 {
                    assert!(r.rank < d * d, "d={d} without {i}: rank {}", r.rank);
                } else {
                    // For even d ≥ 4 the pair bases already span the diagonal.
                    assert_eq!(r.rank, d * d);
                }
            }
        }
    }

    #[test]
    fn reassembly_from_parts() {
        let set = build_basis_set(4).unwrap().rotated(&crate::state::random_unitary(4, &mut crate::rng::SeedStream::new(2).rng()).unwrap()).unwrap();
        let bases: Vec<MeasurementBasis> = set
            .bases()
            .iter()
            .map(|b| MeasurementBasis::new(b.label(), b.vectors().to_vec(), b.provenance().to_vec()).unwrap())
            .collect();
        assert_eq!(BasisSet::new(4, set.frame().clone(), bases).unwrap(), set);

        let b = &set.bases()[0];
        let mut vs = b.vectors().to_vec();
        vs[1] = vs[0].clone();
        assert!(MeasurementBasis::new(0, vs, b.provenance().to_vec()).is_err());
        assert!(MeasurementBasis::new(0, b.vectors().to_vec(), Vec::new()).is_err());
        assert!(BasisSet::new(4, CMatrix::identity(4).scale(C64::new(2.0, 0.0)), Vec::new()).is_err());
        assert!(BasisSet::new(3, CMatrix::identity(4), Vec::new()).is_err());
    }

    #[test]
    fn small_dimensions_are_rejected() {
        assert!(matches!(build_basis_set(1), Err(Error::InvalidDimension(1))));
        assert!(matches!(build_basis_set(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn rotation_round_trip_and_covariance() {
        let mut rng = SeedStream::new(17).rng();
        let set = build_basis_set(4).unwrap();
        assert_eq!(set.rotated(&CMatrix::identity(4)).unwrap(), set);
        let u = random_unitary(4, &mut rng).unwrap();
        let back = set.rotated(&u).unwrap().rotated(&u.adjoint()).unwrap();
        for (a, b) in set.bases().iter().zip(back.bases()) {
            for (x, y) in a.vectors().iter().zip(b.vectors()) {
                let diff: f64 = x.amplitudes().iter().zip(y.amplitudes()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
                assert!(diff < 1e-12);
            }
        }
        assert!((&back.frame().clone() - &CMatrix::identity(4)).max_abs() < 1e-12);

        let rho = random_full_rank(4, &mut rng).unwrap();
        let frame = eigendecompose(&random_full_rank(4, &mut rng).unwrap());
        let rotated = rotate_basis_set(&set, &frame).unwrap();
        let rho_rot = rho.conjugate_by(frame.eigenvectors()).unwrap();
        for (b0, b1) in set.bases().iter().zip(rotated.bases()) {
            for (v0, v1) in b0.vectors().iter().zip(b1.vectors()) {
                let p0 = rho.matrix().expectation(v0.amplitudes()).re;
                let p1 = rho_rot.matrix().expectation(v1.amplitudes()).re;
                assert!((p0 - p1).abs() < 1e-12);
            }
        }
        assert!(verify_basis_set(&rotated).passed);
    }

    #[test]
    fn rotation_rejects_bad_frames() {
        let set = build_basis_set(3).unwrap();
        assert!(matches!(set.rotated(&CMatrix::identity(2)), Err(Error::DimensionMismatch { .. })));
        let not_unitary = CMatrix::identity(3).scale(C64::new(2.0, 0.0));
        assert!(matches!(set.rotated(&not_unitary), Err(Error::NotUnitary { .. })));
    }
}
