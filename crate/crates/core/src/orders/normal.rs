//! Closed-form order conditions for Normal laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::compare::{Obstruction, OrderVerdict};
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSpec {
    pub mean: f64,
    pub variance: f64,
}

impl NormalSpec {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Normal({mean}, {variance}) needs finite mean and variance >= 0"
            )));
        }
        Ok(Self { mean, variance })
    }
}

/// `N(μ, σ²) ≤icx N(ν, τ²)` iff `μ ≤ ν` and `σ² ≤ τ²`. A zero variance is a
/// point mass and the same condition applies.
pub fn normal_icx_compare(x: &NormalSpec, y: &NormalSpec) -> OrderVerdict {
    let one_side = |a: &NormalSpec, b: &NormalSpec| {
        if a.mean > b.mean {
            Some(Obstruction::Mean { gap: a.mean - b.mean })
        } else if a.variance > b.variance {
            Some(Obstruction::Variance { gap: a.variance - b.variance })
        } else {
            None
        }
    };
    OrderVerdict::from_directions(one_side(x, y), one_side(y, x))
}

/// `N(μ, σ²) ≤cx N(ν, τ²)` iff `μ = ν` and `σ² ≤ τ²`.
pub fn normal_cx_compare(x: &NormalSpec, y: &NormalSpec) -> OrderVerdict {
    let one_side = |a: &NormalSpec, b: &NormalSpec| {
        if a.mean != b.mean {
            Some(Obstruction::Mean { gap: a.mean - b.mean })
        } else if a.variance > b.variance {
            Some(Obstruction::Variance { gap: a.variance - b.variance })
        } else {
            None
        }
    };
    OrderVerdict::from_directions(one_side(x, y), one_side(y, x))
}

const SYMMETRY_EPS: f64 = 1e-10;
const PSD_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvNormalSpec {
    mean: Vec<f64>,
    covariance: SquareMatrix,
}

impl MvNormalSpec {
    pub fn new(mean: Vec<f64>, covariance: SquareMatrix) -> Result<Self> {
        if covariance.dim() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), actual: covariance.dim() });
        }
        if mean.iter().chain(covariance.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mean or covariance".into()));
        }
        let asym = covariance.max_abs_asymmetry();
        if asym > SYMMETRY_EPS {
            return Err(Error::InvalidArgument(format!("covariance asymmetric by {asym}")));
        }
        let min_eig = covariance.min_symmetric_eigenvalue();
        if min_eig < -PSD_EPS {
            return Err(Error::InvalidArgument(format!(
                "covariance not positive semidefinite (min eigenvalue {min_eig})"
            )));
        }
        Ok(Self { mean, covariance })
    }

    /// `N(mean, scale · I)`.
    pub fn isotropic(mean: Vec<f64>, scale: f64) -> Result<Self> {
        let mut cov = SquareMatrix::zeros(mean.len());
        for i in 0..mean.len() {
            cov.set(i, i, scale);
        }
        Self::new(mean, cov)
    }

    pub fn diagonal(mean: Vec<f64>, variances: &[f64]) -> Result<Self> {
        let mut cov = SquareMatrix::zeros(mean.len());
        for (i, v) in variances.iter().enumerate() {
            cov.set(i, i, *v);
        }
        Self::new(mean, cov)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SquareMatrix {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn same_dim(x: &MvNormalSpec, y: &MvNormalSpec) -> Result<()> {
    if x.dim() == y.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: x.dim(), actual: y.dim() })
    }
}

/// `N(μ, Σ) ≤cx N(μ', Σ')` iff `μ = μ'` and `Σ' - Σ` is positive semidefinite.
pub fn mvnormal_cx_compare(x: &MvNormalSpec, y: &MvNormalSpec, tol: f64) -> Result<OrderVerdict> {
    same_dim(x, y)?;
    let mean_gap =
        x.mean.iter().zip(&y.mean).map(|(a, b)| a - b).fold(0.0_f64, |m, g| if g.abs() > m.abs() { g } else { m });
    let one_side = |a: &MvNormalSpec, b: &MvNormalSpec, sign: f64| {
        if mean_gap.abs() > tol {
            return Some(Obstruction::Mean { gap: sign * mean_gap });
        }
        let min_eigenvalue = b.covariance.sub(&a.covariance).min_symmetric_eigenvalue();
        (min_eigenvalue < -tol).then_some(Obstruction::Covariance { min_eigenvalue })
    };
    Ok(OrderVerdict::from_directions(one_side(x, y, 1.0), one_side(y, x, -1.0)))
}

/// Evidence about `X ≥icx Y` for multivariate Normals, where no exact
/// characterisation is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum IcxEvidence {
    /// `μ_X ≥ μ_Y` componentwise and `Σ_X - Σ_Y` positive definite.
    GreaterSufficient,
    /// No violation of the necessary conditions found. `near_singular` marks a
    /// positive semidefinite but (numerically) singular covariance difference
    /// together with dominating means, which the sufficient condition does not
    /// cover.
    NecessaryHolds {
        near_singular: bool,
    },
    NecessaryFails(NecessaryFailure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NecessaryFailure {
    /// `μ_X[component] < μ_Y[component]`.
    Mean { component: usize, gap: f64 },
    /// `aᵀ (Σ_X - Σ_Y) a < 0` for this non-negative `a`.
    QuadraticForm { direction: Vec<f64>, value: f64 },
}

/// Grid resolution of the simplex search.
pub const SIMPLEX_GRID_STEPS: usize = 16;
/// Number of seeded random directions added to the grid.
pub const RANDOM_DIRECTIONS: usize = 1_000;
/// Seed of the random directions.
pub const DIRECTION_SEED: u64 = 0x05EE_D1C5;
/// Grids larger than this fall back to vertices and edge midpoints.
const MAX_GRID_POINTS: usize = 1_000_000;

/// Non-negative directions on the unit simplex: the grid with step `1/steps`
/// (or vertices plus pairwise midpoints when the grid is too large).
pub fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    if dim == 0 {
        return Vec::new();
    }
    if binomial(steps + dim - 1, dim - 1) > MAX_GRID_POINTS as f64 {
        let mut out = Vec::new();
        for i in 0..dim {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            out.push(v);
            for j in (i + 1)..dim {
                let mut v = vec![0.0; dim];
                v[i] = 0.5;
                v[j] = 0.5;
                out.push(v);
            }
        }
        return out;
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; dim];
    compositions(steps, 0, &mut counts, &mut |c| {
        out.push(c.iter().map(|&k| k as f64 / steps as f64).collect());
    });
    out
}

fn compositions(remaining: usize, idx: usize, counts: &mut [usize], emit: &mut impl FnMut(&[usize])) {
    if idx + 1 == counts.len() {
        counts[idx] = remaining;
        emit(counts);
        return;
    }
    for k in 0..=remaining {
        counts[idx] = k;
        compositions(remaining - k, idx + 1, counts, emit);
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn quadratic_form(m: &SquareMatrix, a: &[f64]) -> f64 {
    let ma = m.mul_vec(a);
    ma.iter().zip(a).map(|(x, y)| x * y).sum()
}

/// Sufficient-condition check plus a search for violations of the necessary
/// conditions `μ_X ≥ μ_Y` and `aᵀ(Σ_X - Σ_Y)a ≥ 0` for all `a ≥ 0`.
pub fn mvnormal_icx_evidence(x: &MvNormalSpec, y: &MvNormalSpec, tol: f64) -> Result<IcxEvidence> {
    same_dim(x, y)?;
    if let Some((component, gap)) = x
        .mean
        .iter()
        .zip(&y.mean)
        .map(|(a, b)| a - b)
        .enumerate()
        .filter(|(_, g)| *g < -tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
    {
        return Ok(IcxEvidence::NecessaryFails(NecessaryFailure::Mean { component, gap }));
    }
    let diff = x.covariance.sub(&y.covariance);
    let min_eig = diff.min_symmetric_eigenvalue();
    if min_eig > tol {
        return Ok(IcxEvidence::GreaterSufficient);
    }
    if min_eig >= -tol {
        return Ok(IcxEvidence::NecessaryHolds { near_singular: true });
    }

    let n = x.dim();
    let mut worst: Option<(Vec<f64>, f64)> = None;
    let mut consider = |a: Vec<f64>| {
        let q = quadratic_form(&diff, &a);
        if q < -tol && worst.as_ref().is_none_or(|(_, w)| q < *w) {
            worst = Some((a, q));
        }
    };
    for a in simplex_grid(n, SIMPLEX_GRID_STEPS) {
        consider(a);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
    for _ in 0..RANDOM_DIRECTIONS {
        // normalised exponentials are uniform on the simplex
        let mut a: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = a.iter().sum();
        a.iter_mut().for_each(|v| *v /= s);
        consider(a);
    }
    Ok(match worst {
        Some((direction, value)) => IcxEvidence::NecessaryFails(NecessaryFailure::QuadraticForm { direction, value }),
        None => IcxEvidence::NecessaryHolds { near_singular: false },
    })
}
