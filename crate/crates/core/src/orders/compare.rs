//! Exact icx / cx comparison of finite-support laws through their stop-loss
//! transforms.
//!
//! Both stop-loss curves are piecewise linear with knots at the atoms, equal
//! to `mean - c` left of every atom and to zero right of every atom. Checking
//! the inequality at the union of the atoms therefore decides it for every
//! real threshold.

use serde::{Deserialize, Serialize};

use super::discrete::DiscreteDistribution;
use crate::error::{Error, Result};

/// Default absolute tolerance on stop-loss and mean comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Why one direction of an order fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstruction {
    /// The stop-loss transform of the would-be smaller law exceeds the other
    /// one by `gap` at `threshold`.
    StopLoss { threshold: f64, gap: f64 },
    /// The means differ by `gap` (would-be smaller minus would-be larger).
    Mean { gap: f64 },
    /// The variance of the would-be smaller law exceeds the other by `gap`.
    Variance { gap: f64 },
    /// The covariance difference has this (negative) minimum eigenvalue.
    Covariance { min_eigenvalue: f64 },
}

/// Failure evidence for both directions of a non-comparable pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Why `x ≤ y` fails.
    pub against_less: Obstruction,
    /// Why `y ≤ x` fails.
    pub against_greater: Obstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Less,
    Greater,
    Equal,
    NotComparable,
}

/// Outcome of comparing `x` against `y`. The witness exists exactly when the
/// pair is not comparable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", content = "witness", rename_all = "snake_case")]
pub enum OrderVerdict {
    Less,
    Greater,
    Equal,
    NotComparable(Witness),
}

impl OrderVerdict {
    pub fn relation(&self) -> Relation {
        match self {
            OrderVerdict::Less => Relation::Less,
            OrderVerdict::Greater => Relation::Greater,
            OrderVerdict::Equal => Relation::Equal,
            OrderVerdict::NotComparable(_) => Relation::NotComparable,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            OrderVerdict::NotComparable(w) => Some(w),
            _ => None,
        }
    }

    /// `x ≤ y` holds (Less or Equal).
    pub fn is_le(&self) -> bool {
        matches!(self, OrderVerdict::Less | OrderVerdict::Equal)
    }

    /// `x ≥ y` holds (Greater or Equal).
    pub fn is_ge(&self) -> bool {
        matches!(self, OrderVerdict::Greater | OrderVerdict::Equal)
    }

    /// Combines the two one-sided checks.
    pub(crate) fn from_directions(against_less: Option<Obstruction>, against_greater: Option<Obstruction>) -> Self {
        match (against_less, against_greater) {
            (None, None) => OrderVerdict::Equal,
            (None, Some(_)) => OrderVerdict::Less,
            (Some(_), None) => OrderVerdict::Greater,
            (Some(a), Some(b)) => OrderVerdict::NotComparable(Witness { against_less: a, against_greater: b }),
        }
    }
}

/// Sorted, de-duplicated union of both supports.
pub(crate) fn merged_knots(x: &DiscreteDistribution, y: &DiscreteDistribution) -> Vec<f64> {
    let (a, b) = (x.values(), y.values());
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) if u <= v => {
                i += 1;
                u
            }
            (Some(_), Some(&v)) => {
                j += 1;
                v
            }
            (Some(&u), None) => {
                i += 1;
                u
            }
            (None, Some(&v)) => {
                j += 1;
                v
            }
            (None, None) => unreachable!(),
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// Stop-loss transform of `d` at every knot, for ascending knots whose last
/// element is at or above `d.max()`. Evaluated top-down so every update adds
/// non-negative terms.
pub(crate) fn stop_loss_at_knots(d: &DiscreteDistribution, knots: &[f64]) -> Vec<f64> {
    let m = knots.len();
    let mut out = vec![0.0; m];
    debug_assert!(m > 0 && knots[m - 1] >= d.max());
    let (values, probs) = (d.values(), d.probs());
    let mut j = values.len();
    let mut tail = 0.0;
    for k in (0..m - 1).rev() {
        while j > 0 && values[j - 1] > knots[k] {
            j -= 1;
            tail += probs[j];
        }
        out[k] = out[k + 1] + (knots[k + 1] - knots[k]) * tail;
    }
    out
}

/// Largest violation of `πx(c) ≤ πy(c) + tol` over the knots, if any.
fn stop_loss_violation(knots: &[f64], px: &[f64], py: &[f64], tol: f64) -> Option<Obstruction> {
    let mut worst: Option<(f64, f64)> = None;
    for ((&c, &a), &b) in knots.iter().zip(px).zip(py) {
        let gap = a - b;
        if gap > tol && worst.is_none_or(|(_, g)| gap > g) {
            worst = Some((c, gap));
        }
    }
    worst.map(|(threshold, gap)| Obstruction::StopLoss { threshold, gap })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol >= 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance {tol} must be >= 0")))
    }
}

/// Increasing convex order: `x ≤icx y` iff `E(x - c)+ ≤ E(y - c)+` for all c.
pub fn icx_compare(x: &DiscreteDistribution, y: &DiscreteDistribution, tol: f64) -> Result<OrderVerdict> {
    check_tol(tol)?;
    let knots = merged_knots(x, y);
    let px = stop_loss_at_knots(x, &knots);
    let py = stop_loss_at_knots(y, &knots);
    Ok(OrderVerdict::from_directions(
        stop_loss_violation(&knots, &px, &py, tol),
        stop_loss_violation(&knots, &py, &px, tol),
    ))
}

/// Convex order: equal means and `x ≤icx y`.
pub fn cx_compare(x: &DiscreteDistribution, y: &DiscreteDistribution, tol: f64) -> Result<OrderVerdict> {
    check_tol(tol)?;
    let knots = merged_knots(x, y);
    let px = stop_loss_at_knots(x, &knots);
    let py = stop_loss_at_knots(y, &knots);
    let mean_gap = x.mean() - y.mean();
    let mean_obstruction = (mean_gap.abs() > tol).then_some(());
    let against_less =
        stop_loss_violation(&knots, &px, &py, tol).or(mean_obstruction.map(|_| Obstruction::Mean { gap: mean_gap }));
    let against_greater =
        stop_loss_violation(&knots, &py, &px, tol).or(mean_obstruction.map(|_| Obstruction::Mean { gap: -mean_gap }));
    Ok(OrderVerdict::from_directions(against_less, against_greater))
}

/// `CV_p(X) = E(X^p)^{1/p} / E(X)` for a law on the positive half-line.
pub fn cv_p(d: &DiscreteDistribution, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("cv_p needs p >= 1, got {p}")));
    }
    if d.min() <= 0.0 {
        return Err(Error::NonPositiveSupport { value: d.min() });
    }
    let moment = super::discrete::compensated_sum(d.atoms().map(|(v, q)| q * v.powf(p)));
    Ok(moment.powf(1.0 / p) / d.mean())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(v: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::uniform(v).unwrap()
    }

    /// Direct summation at every knot; shares nothing with the sweep.
    fn brute_force_curve(d: &DiscreteDistribution, knots: &[f64]) -> Vec<f64> {
        knots.iter().map(|&c| d.atoms().map(|(v, p)| p * (v - c).max(0.0)).sum()).collect()
    }

    #[test]
    fn sweep_matches_direct_summation() {
        let x = uniform(&[1.0, 3.0]);
        let y = uniform(&[0.0, 4.0]);
        let knots = merged_knots(&x, &y);
        assert_eq!(knots, vec![0.0, 1.0, 3.0, 4.0]);
        assert_eq!(stop_loss_at_knots(&x, &knots), vec![2.0, 1.0, 0.0, 0.0]);
        assert_eq!(stop_loss_at_knots(&y, &knots), brute_force_curve(&y, &knots));
        assert_eq!(brute_force_curve(&y, &knots), vec![2.0, 1.5, 0.5, 0.0]);
    }

    #[test]
    fn icx_examples() {
        let d1 = DiscreteDistribution::point(1.0).unwrap();
        let d2 = DiscreteDistribution::point(2.0).unwrap();
        assert_eq!(icx_compare(&d1, &d2, DEFAULT_TOL).unwrap(), OrderVerdict::Less);
        let x = uniform(&[1.0, 3.0]);
        let y = uniform(&[0.0, 4.0]);
        assert_eq!(icx_compare(&x, &y, DEFAULT_TOL).unwrap(), OrderVerdict::Less);
        assert_eq!(icx_compare(&y, &x, DEFAULT_TOL).unwrap(), OrderVerdict::Greater);
        assert_eq!(icx_compare(&x, &x, DEFAULT_TOL).unwrap(), OrderVerdict::Equal);
    }

    #[test]
    fn cx_examples() {
        let x = uniform(&[1.0, 3.0]);
        assert_eq!(cx_compare(&x, &uniform(&[0.0, 4.0]), DEFAULT_TOL).unwrap(), OrderVerdict::Less);
        let point = DiscreteDistribution::point(2.0).unwrap();
        assert_eq!(cx_compare(&point, &x, DEFAULT_TOL).unwrap(), OrderVerdict::Less);

        let v = cx_compare(&x, &uniform(&[0.0, 2.0]), DEFAULT_TOL).unwrap();
        let w = v.witness().expect("not comparable");
        // x is icx-greater, so only the mean blocks `x ≥cx y`
        assert_eq!(w.against_greater, Obstruction::Mean { gap: -1.0 });
        assert!(matches!(w.against_less, Obstruction::StopLoss { .. }));
    }

    #[test]
    fn crossing_curves_give_thresholds() {
        // same mean, x has the heavier right tail, y the heavier left tail
        let x = DiscreteDistribution::new([(0.0, 0.75), (4.0, 0.25)]).unwrap();
        let y = DiscreteDistribution::new([(-2.0, 0.25), (2.0, 0.75)]).unwrap();
        let v = icx_compare(&x, &y, DEFAULT_TOL).unwrap();
        let w = v.witness().unwrap();
        let Obstruction::StopLoss { threshold, gap } = w.against_less else { panic!() };
        assert_eq!(threshold, 2.0);
        assert!((gap - 0.5).abs() < 1e-15);
        let Obstruction::StopLoss { threshold, .. } = w.against_greater else { panic!() };
        assert_eq!(threshold, 0.0);
    }

    #[test]
    fn tolerance_is_validated() {
        let x = uniform(&[1.0]);
        assert!(icx_compare(&x, &x, -1.0).is_err());
        assert!(cx_compare(&x, &x, f64::NAN).is_err());
    }

    #[test]
    fn cv_p_examples() {
        let c = DiscreteDistribution::point(7.0).unwrap();
        assert!((cv_p(&c, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let x = uniform(&[1.0, 3.0]);
        assert!((cv_p(&x, 2.0).unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(cv_p(&x, 1.0).unwrap(), 1.0);
        assert!(matches!(cv_p(&uniform(&[0.0, 1.0]), 2.0), Err(Error::NonPositiveSupport { .. })));
        assert!(cv_p(&x, 0.5).is_err());
    }
}
