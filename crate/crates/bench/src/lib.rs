//! Fixed inputs shared by the criterion benchmarks in `benches/`.

use varorder_core::model::{EntryFunction, MatrixSpec, PopulationVector, SizeFunctional};
use varorder_core::orders::DiscreteDistribution;
use varorder_core::scenarios::NoiseSpec;

/// `n` atoms spread over `[-5, 5]` by a low-discrepancy sequence, with
/// uneven weights.
pub fn spread_law(n: usize, offset: f64) -> DiscreteDistribution {
    let golden = 0.618_033_988_749_895;
    let atoms = (0..n).map(|i| {
        let u = (offset + i as f64 * golden).fract();
        (10.0 * u - 5.0, 1.0 + (i % 7) as f64)
    });
    let total: f64 = (0..n).map(|i| 1.0 + (i % 7) as f64).sum();
    DiscreteDistribution::new(atoms.map(|(v, w)| (v, w / total))).expect("valid law")
}

/// `dim × dim` model whose entries all depend log-linearly on `dim` factors.
pub fn expaffine_model(dim: usize) -> (MatrixSpec, PopulationVector, SizeFunctional, NoiseSpec) {
    let entries = (0..dim * dim)
        .map(|k| {
            let (i, j) = (k / dim, k % dim);
            let base = if i == 0 {
                0.2
            } else if i == j + 1 {
                -0.3
            } else {
                -2.0
            };
            format!("expaffine:{base},{}:1", (i + j) % dim).parse::<EntryFunction>().expect("valid entry")
        })
        .collect();
    let spec = MatrixSpec::new(dim, dim, entries).expect("valid spec");
    let n0 = PopulationVector::new(vec![1.0; dim]).expect("valid n0");
    let noise = NoiseSpec::iid_isotropic(dim, 0.0, 0.04).expect("valid noise");
    (spec, n0, SizeFunctional::total(dim), noise)
}
