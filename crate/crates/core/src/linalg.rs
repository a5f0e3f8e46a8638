//! Small dense matrices and Jacobi eigensolvers.
//!
//! Every matrix in this crate is at most a few hundred rows, so storage is a
//! flat row-major `Vec` and the eigensolvers are cyclic Jacobi sweeps. Jacobi
//! is slower than tridiagonal QR but is accurate to working precision on
//! tiny eigenvalues and its output depends only on the input bits.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
// Float methods come from std when something else links it, otherwise from this trait.
#[allow(unused_imports)]
use num_traits::Float;

pub type C64 = Complex64;

const MAX_SWEEPS: usize = 100;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

macro_rules! dense_common {
    ($name:ident, $elem:ty, $zero:expr, $one:expr) => {
        impl $name {
            pub fn zeros(rows: usize, cols: usize) -> Self {
                Self { rows, cols, data: vec![$zero; rows * cols] }
            }

            pub fn identity(n: usize) -> Self {
                let mut m = Self::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = $one;
                }
                m
            }

            /// Builds a matrix from row-major data. Panics when the length is wrong.
            pub fn from_row_major(rows: usize, cols: usize, data: Vec<$elem>) -> Self {
                assert_eq!(data.len(), rows * cols, "row-major data has the wrong length");
                Self { rows, cols, data }
            }

            pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> $elem) -> Self {
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        data.push(f(r, c));
                    }
                }
                Self { rows, cols, data }
            }

            pub fn rows(&self) -> usize {
                self.rows
            }

            pub fn cols(&self) -> usize {
                self.cols
            }

            pub fn is_square(&self) -> bool {
                self.rows == self.cols
            }

            pub fn as_slice(&self) -> &[$elem] {
                &self.data
            }

            pub fn row(&self, r: usize) -> &[$elem] {
                &self.data[r * self.cols..(r + 1) * self.cols]
            }

            pub fn column(&self, c: usize) -> Vec<$elem> {
                (0..self.rows).map(|r| self[(r, c)]).collect()
            }

            pub fn scale(&self, s: $elem) -> Self {
                Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
            }

            pub fn matmul(&self, other: &Self) -> Self {
                assert_eq!(self.cols, other.rows, "matmul shape mismatch");
                let mut out = Self::zeros(self.rows, other.cols);
                for i in 0..self.rows {
                    for k in 0..self.cols {
                        let a = self.data[i * self.cols + k];
                        if a == $zero {
                            continue;
                        }
                        let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                        let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                        for (d, &b) in dst.iter_mut().zip(orow) {
                            *d += a * b;
                        }
                    }
                }
                out
            }

            pub fn mul_vec(&self, v: &[$elem]) -> Vec<$elem> {
                assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
                (0..self.rows)
                    .map(|r| self.row(r).iter().zip(v).fold($zero, |acc, (&a, &b)| acc + a * b))
                    .collect()
            }

            /// Restricts to the square sub-block `idx × idx`.
            pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
                Self::from_fn(row_idx.len(), col_idx.len(), |r, c| self[(row_idx[r], col_idx[c])])
            }
        }

        impl Index<(usize, usize)> for $name {
            type Output = $elem;
            fn index(&self, (r, c): (usize, usize)) -> &$elem {
                &self.data[r * self.cols + c]
            }
        }

        impl IndexMut<(usize, usize)> for $name {
            fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut $elem {
                &mut self.data[r * self.cols + c]
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
                $name {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
                }
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
                $name {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
                }
            }
        }

        impl Mul for &$name {
            type Output = $name;
            fn mul(self, rhs: &$name) -> $name {
                self.matmul(rhs)
            }
        }
    };
}

dense_common!(CMatrix, C64, C64::new(0.0, 0.0), C64::new(1.0, 0.0));
dense_common!(RMatrix, f64, 0.0, 1.0);

impl CMatrix {
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    /// Largest entry of `|A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `<v|A|v>` for a square matrix.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let n = self.rows;
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..n {
            let row = self.row(r);
            let mut s = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v) {
                s += a * b;
            }
            acc += v[r].conj() * s;
        }
        acc
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        (&g - &Self::identity(self.rows)).max_abs()
    }
}

impl RMatrix {
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Largest entry of `|A − Aᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }

    pub fn symmetric_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| 0.5 * (self[(r, c)] + self[(c, r)]))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

/// Eigenpairs of a Hermitian matrix in the order Jacobi leaves them on the
/// diagonal (not sorted). Column `k` of the returned matrix pairs with
/// value `k`.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(a.is_square(), "eigendecomposition of a non-square matrix");
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    if n < 2 || scale == 0.0 {
        return ((0..n).map(|i| m[(i, i)].re).collect(), v);
    }
    let threshold = f64::EPSILON * scale * 1e-2;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= threshold * 1e-3 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Phase that makes the pivot real: e^{-iφ} with apq = |apq| e^{iφ}.
                let phase = apq.conj() / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // V = [[c, s], [-s·ph, c·ph]] acting on columns p, q.
                let vqp = -phase * s;
                let vqq = phase * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c + akq * vqp;
                    m[(k, q)] = akp * s + akq * vqq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c + aqk * vqp.conj();
                    m[(q, k)] = apk * s + aqk * vqq.conj();
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * vqp;
                    v[(k, q)] = vkp * s + vkq * vqq;
                }
            }
        }
    }
    ((0..n).map(|i| m[(i, i)].re).collect(), v)
}

/// Eigenpairs of a real symmetric matrix, unsorted, columns paired with values.
pub fn symmetric_eigen(a: &RMatrix) -> (Vec<f64>, RMatrix) {
    assert!(a.is_square(), "eigendecomposition of a non-square matrix");
    let n = a.rows();
    let mut m = a.symmetric_part();
    let mut v = RMatrix::identity(n);
    let scale = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 2 || scale == 0.0 {
        return ((0..n).map(|i| m[(i, i)]).collect(), v);
    }
    let threshold = f64::EPSILON * scale * 1e-2;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= threshold * 1e-3 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[(i, i)]).collect(), v)
}

/// Applies `f` to the spectrum of a real symmetric matrix.
pub fn symmetric_function(a: &RMatrix, f: impl Fn(f64) -> f64) -> RMatrix {
    let (vals, vecs) = symmetric_eigen(a);
    let n = a.rows();
    let mut out = RMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let fl = f(lam);
        for r in 0..n {
            let vr = vecs[(r, k)] * fl;
            for c in 0..n {
                out[(r, c)] += vr * vecs[(c, k)];
            }
        }
    }
    out
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let n = a.rows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let fl = f(lam);
        for r in 0..n {
            let vr = vecs[(r, k)] * fl;
            for c in 0..n {
                out[(r, c)] += vr * vecs[(c, k)].conj();
            }
        }
    }
    out
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(vals: &[f64], vecs: &CMatrix) -> CMatrix {
        let lam = CMatrix::from_real_diagonal(vals);
        vecs.matmul(&lam).matmul(&vecs.adjoint())
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let a = CMatrix::from_row_major(
            3,
            3,
            vec![
                C64::new(2.0, 0.0),
                C64::new(0.5, -0.3),
                C64::new(0.1, 0.7),
                C64::new(0.5, 0.3),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 0.2),
                C64::new(0.1, -0.7),
                C64::new(0.0, -0.2),
                C64::new(0.3, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&a);
        assert!(vecs.unitarity_defect() < 1e-13);
        assert!((&reconstruct(&vals, &vecs) - &a).max_abs() < 1e-13);
        let tr: f64 = vals.iter().sum();
        assert!((tr - 1.3).abs() < 1e-13);
    }

    #[test]
    fn symmetric_eigen_of_known_matrix() {
        // [[2,1],[1,2]] has spectrum {1,3}.
        let a = RMatrix::from_row_major(2, 2, vec![2.0, 1.0, 1.0, 2.0]);
        let (mut vals, _) = symmetric_eigen(&a);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let inv_sqrt = symmetric_function(&a, |x| 1.0 / x.sqrt());
        let back = inv_sqrt.matmul(&a).matmul(&inv_sqrt);
        assert!((&back - &RMatrix::identity(2)).max_abs() < 1e-13);
    }

    #[test]
    fn diagonal_input_is_left_alone() {
        let a = CMatrix::from_real_diagonal(&[0.5, 0.5]);
        let (vals, vecs) = hermitian_eigen(&a);
        assert_eq!(vals, vec![0.5, 0.5]);
        assert_eq!(vecs, CMatrix::identity(2));
    }
}
