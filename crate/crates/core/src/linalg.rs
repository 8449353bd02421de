//! Small dense linear algebra: the projection matrices here are a handful of
//! stages wide, so a flat row-major buffer is all that is needed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut out);
        out
    }

    #[inline]
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `xᵀ A`.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += xi * self.get(i, j);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        let m = self.to_nalgebra();
        let sym = (&m + m.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// A factor `L` with `L Lᵀ = self` for a symmetric positive semidefinite
    /// matrix. Eigenvalues below zero (rounding) are clipped.
    pub fn psd_root(&self) -> Self {
        let n = self.dim;
        if n == 0 {
            return Self::zeros(0);
        }
        let m = self.to_nalgebra();
        let eig = ((&m + m.transpose()) * 0.5).symmetric_eigen();
        let mut out = Self::zeros(n);
        for k in 0..n {
            let s = eig.eigenvalues[k].max(0.0).sqrt();
            for i in 0..n {
                out.data[i * n + k] = eig.eigenvectors[(i, k)] * s;
            }
        }
        out
    }

    /// Whether the zero pattern of a non-negative matrix is primitive, i.e.
    /// some power is strictly positive (Wielandt bound `(n-1)^2 + 1`).
    pub fn is_primitive(&self) -> bool {
        let n = self.dim;
        if n == 0 {
            return false;
        }
        let pattern: Vec<bool> = self.data.iter().map(|&v| v > 0.0).collect();
        let mut power = pattern.clone();
        let bound = (n - 1) * (n - 1) + 1;
        for _ in 0..bound {
            if power.iter().all(|&b| b) {
                return true;
            }
            let mut next = vec![false; n * n];
            for i in 0..n {
                for k in 0..n {
                    if power[i * n + k] {
                        for j in 0..n {
                            next[i * n + j] |= pattern[k * n + j];
                        }
                    }
                }
            }
            power = next;
        }
        power.iter().all(|&b| b)
    }
}

/// Dominant eigenvalue with right (`A w = λ w`) and left (`vᵀ A = λ vᵀ`)
/// eigenvectors, both normalised to unit L1 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantEigen {
    pub value: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub iterations: usize,
}

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 200_000;

/// Power iteration for a non-negative matrix. A periodic (irreducible but
/// imprimitive) matrix is handled by iterating on `A + sI`, which has the same
/// eigenvectors and a strictly dominant Perron root.
pub fn dominant_eigen(a: &SquareMatrix) -> Result<DominantEigen> {
    if a.as_slice().iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::NonPrimitiveMeanMatrix);
    }
    let n = a.dim();
    let scale = a.as_slice().iter().fold(0.0_f64, |m, v| m.max(*v));
    if scale == 0.0 {
        return Err(Error::NonPrimitiveMeanMatrix);
    }
    for shift in [0.0, 0.5 * scale] {
        let shifted = shifted(a, shift);
        let right = power_vector(n, |x| shifted.mul_vec(x));
        let left = power_vector(n, |x| shifted.vec_mul(x));
        if let (Some((r, ri)), Some((l, li))) = (right, left) {
            let aw = a.mul_vec(&r);
            let value = aw.iter().sum::<f64>() / r.iter().sum::<f64>();
            if value > 0.0 {
                return Ok(DominantEigen { value, right: r, left: l, iterations: ri.max(li) });
            }
        }
    }
    Err(Error::NonPrimitiveMeanMatrix)
}

fn shifted(a: &SquareMatrix, s: f64) -> SquareMatrix {
    let mut m = a.clone();
    for i in 0..a.dim() {
        m.set(i, i, m.get(i, i) + s);
    }
    m
}

fn power_vector(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> Option<(Vec<f64>, usize)> {
    let mut x = vec![1.0 / n as f64; n];
    for it in 1..=POWER_MAX_ITER {
        let mut y = apply(&x);
        let norm: f64 = y.iter().sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let change: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if change <= POWER_TOL {
            return Some((x, it));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat_vec_products() {
        let a = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![2.0, 0.5]);
        assert_eq!(a.vec_mul(&[1.0, 1.0]), vec![0.5, 2.0]);
        assert_eq!(a.mul(&a).rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn min_eigenvalue_of_indefinite_difference() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let b = SquareMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((b.sub(&a).min_symmetric_eigenvalue() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn psd_root_reconstructs() {
        let c = SquareMatrix::from_rows(&[vec![2.0, 0.6], vec![0.6, 1.0]]).unwrap();
        let l = c.psd_root();
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| l.get(i, k) * l.get(j, k)).sum();
                assert!((v - c.get(i, j)).abs() < 1e-12);
            }
        }
        let singular = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(singular.psd_root().as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn power_iteration_on_leslie_matrix() {
        let a = SquareMatrix::from_rows(&[vec![0.5, 1.5], vec![0.6, 0.0]]).unwrap();
        let e = dominant_eigen(&a).unwrap();
        // λ² - 0.5λ - 0.9 = 0
        let expected = (0.5 + (0.25_f64 + 3.6).sqrt()) / 2.0;
        assert!((e.value - expected).abs() < 1e-11);
        let aw = a.mul_vec(&e.right);
        for (x, w) in aw.iter().zip(&e.right) {
            assert!((x - e.value * w).abs() < 1e-11);
        }
        let va = a.vec_mul(&e.left);
        for (x, v) in va.iter().zip(&e.left) {
            assert!((x - e.value * v).abs() < 1e-11);
        }
    }

    #[test]
    fn periodic_matrix_uses_shift() {
        let a = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]).unwrap();
        assert!(!a.is_primitive());
        let e = dominant_eigen(&a).unwrap();
        assert!((e.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reducible_zero_matrix_fails() {
        assert_eq!(dominant_eigen(&SquareMatrix::zeros(2)), Err(Error::NonPrimitiveMeanMatrix));
    }

    #[test]
    fn primitivity() {
        let a = SquareMatrix::from_rows(&[vec![0.5, 1.5], vec![0.6, 0.0]]).unwrap();
        assert!(a.is_primitive());
        assert!(SquareMatrix::identity(1).is_primitive());
        assert!(!SquareMatrix::identity(2).is_primitive());
    }
}
