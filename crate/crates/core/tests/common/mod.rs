#![allow(dead_code)]

use proptest::prelude::*;
use varorder_core::orders::{DiscreteDistribution, Relation};

/// Direct sum `Σ p max(v - c, 0)`.
pub fn brute_stop_loss(values: &[f64], probs: &[f64], c: f64) -> f64 {
    values.iter().zip(probs).map(|(v, p)| p * (v - c).max(0.0)).sum()
}

/// icx relation from stop-loss values at every atom of either law.
pub fn brute_icx_relation(x: &DiscreteDistribution, y: &DiscreteDistribution, tol: f64) -> Relation {
    let knots: Vec<f64> = x.values().iter().chain(y.values()).copied().collect();
    let (mut le, mut ge) = (true, true);
    for &c in &knots {
        let px = brute_stop_loss(x.values(), x.probs(), c);
        let py = brute_stop_loss(y.values(), y.probs(), c);
        le &= px <= py + tol;
        ge &= py <= px + tol;
    }
    relation(le, ge)
}

pub fn brute_cx_relation(x: &DiscreteDistribution, y: &DiscreteDistribution, tol: f64) -> Relation {
    let mx: f64 = x.values().iter().zip(x.probs()).map(|(v, p)| v * p).sum();
    let my: f64 = y.values().iter().zip(y.probs()).map(|(v, p)| v * p).sum();
    if (mx - my).abs() > tol {
        return Relation::NotComparable;
    }
    brute_icx_relation(x, y, tol)
}

fn relation(le: bool, ge: bool) -> Relation {
    match (le, ge) {
        (true, true) => Relation::Equal,
        (true, false) => Relation::Less,
        (false, true) => Relation::Greater,
        (false, false) => Relation::NotComparable,
    }
}

/// Builds a law from raw values and positive weights.
pub fn law(values: &[f64], weights: &[f64]) -> DiscreteDistribution {
    let total: f64 = weights.iter().sum();
    DiscreteDistribution::new(values.iter().copied().zip(weights.iter().map(|w| w / total))).unwrap()
}

/// Random law with up to `max_atoms` atoms, values in `[lo, hi]`.
pub fn arb_law(max_atoms: usize, lo: f64, hi: f64) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((lo..hi, 1u32..20), 1..=max_atoms).prop_map(|atoms| {
        let (v, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().map(|(v, w)| (v, w as f64)).unzip();
        law(&v, &w)
    })
}

/// Random zero-mean law (centred by its own mean, so the mean is zero up to
/// rounding).
pub fn arb_zero_mean(max_atoms: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((-2.0..2.0f64, 1u32..10), 1..=max_atoms).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1 as f64).sum();
        let mean: f64 = atoms.iter().map(|a| a.0 * a.1 as f64).sum::<f64>() / total;
        let (v, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().map(|(v, w)| (v - mean, w as f64)).unzip();
        law(&v, &w)
    })
}
