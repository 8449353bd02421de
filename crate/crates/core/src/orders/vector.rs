//! Sample-based falsifier for the increasing convex order between random
//! vectors.
//!
//! `E φ(X) ≤ E φ(Y)` is tested over a finite family of increasing convex
//! functions `φ_{a,c}(z) = max(a·z - c, 0)` with `a ≥ 0`. A gap larger than the
//! sampling margin falsifies `X ≤icx Y`; the absence of one is only evidence.

use serde::{Deserialize, Serialize};

use super::discrete::compensated_sum;
use super::normal::simplex_grid;
use crate::error::{Error, Result};

/// Finite family of test functions `z ↦ max(a·z - c, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFamily {
    /// Directions on the simplex grid with step `1/grid_steps`; for each,
    /// `thresholds` equally spaced values of `c` spanning the pooled range of
    /// the projected samples.
    Default { grid_steps: usize, thresholds: usize },
    /// Explicit `(a, c)` pairs. Every `a` must be non-negative.
    Explicit(Vec<(Vec<f64>, f64)>),
}

impl Default for TestFamily {
    fn default() -> Self {
        TestFamily::Default { grid_steps: 4, thresholds: 20 }
    }
}

/// Standard-error multiplier for the falsification margin. Generous because
/// the family is tested simultaneously.
pub const DEFAULT_Z: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyingWitness {
    pub direction: Vec<f64>,
    pub threshold: f64,
    /// `mean φ(xs) - mean φ(ys)`.
    pub gap: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum VectorEvidence {
    /// No test function separated the samples. `largest_standardized_gap` is
    /// the worst `gap / standard error` seen, against the margin multiplier `z`.
    ConsistentWithLess {
        largest_standardized_gap: f64,
        z: f64,
        tested: usize,
    },
    Falsified(FalsifyingWitness),
}

fn family_members(xs: &[Vec<f64>], ys: &[Vec<f64>], family: &TestFamily, dim: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let members = match family {
        TestFamily::Explicit(pairs) => {
            for (a, _) in pairs {
                if a.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, actual: a.len() });
                }
                if a.iter().any(|v| *v < 0.0) {
                    return Err(Error::InvalidArgument("test direction must be non-negative".into()));
                }
            }
            pairs.clone()
        }
        TestFamily::Default { grid_steps, thresholds } => {
            let mut out = Vec::new();
            for a in simplex_grid(dim, (*grid_steps).max(1)) {
                let (lo, hi) = xs
                    .iter()
                    .chain(ys)
                    .map(|z| dot(&a, z))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
                let k = *thresholds;
                for i in 0..k {
                    let c = if k == 1 { lo } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 };
                    out.push((a.clone(), c));
                }
            }
            out
        }
    };
    if members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(members)
}

fn dot(a: &[f64], z: &[f64]) -> f64 {
    a.iter().zip(z).map(|(x, y)| x * y).sum()
}

fn mean_and_var(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = compensated_sum(values.clone()) / n as f64;
    let var = if n > 1 { compensated_sum(values.map(|v| (v - mean) * (v - mean))) / (n - 1) as f64 } else { 0.0 };
    (mean, var)
}

/// Tests `xs ≤icx ys` on two samples of equal-dimension vectors.
pub fn empirical_icx_evidence_vec(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    family: &TestFamily,
    z: f64,
) -> Result<VectorEvidence> {
    let dim = xs.first().or(ys.first()).map_or(0, Vec::len);
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    for v in xs.iter().chain(ys) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
        }
    }
    let members = family_members(xs, ys, family, dim)?;

    let mut worst_std_gap = f64::NEG_INFINITY;
    let mut worst_falsifier: Option<FalsifyingWitness> = None;
    for (a, c) in &members {
        let phi = |s: &Vec<f64>| (dot(a, s) - c).max(0.0);
        let (mx, vx) = mean_and_var(xs.iter().map(phi), xs.len());
        let (my, vy) = mean_and_var(ys.iter().map(phi), ys.len());
        let se = (vx / xs.len() as f64 + vy / ys.len() as f64).sqrt();
        let gap = mx - my;
        let margin = z * se;
        // exact ties (e.g. identical samples) never falsify
        if gap > margin && gap > 0.0 {
            let better = worst_falsifier.as_ref().is_none_or(|w| gap - margin > w.gap - w.margin);
            if better {
                worst_falsifier = Some(FalsifyingWitness { direction: a.clone(), threshold: *c, gap, margin });
            }
        }
        let std_gap = if se > 0.0 {
            gap / se
        } else if gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst_std_gap = worst_std_gap.max(std_gap);
    }
    Ok(match worst_falsifier {
        Some(w) => VectorEvidence::Falsified(w),
        None => {
            VectorEvidence::ConsistentWithLess { largest_standardized_gap: worst_std_gap, z, tested: members.len() }
        }
    })
}
