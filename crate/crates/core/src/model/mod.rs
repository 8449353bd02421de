//! Matrix population models `n(t+1) = A(ε(t)) n(t)` whose entries depend on
//! environmental factors through a closed grammar of functional forms.

mod entry;
mod probe;
mod spec;

pub use entry::{AffineForm, EntryFunction};
pub use probe::{
    logconvexity_probe, probe_entry, scenario_convexity_probe, BoxDomain, ProbeConfig, ProbeOutcome, ProbeWitness,
    ProbedFunctional, CONVEXITY_SLACK, DEFAULT_TRIALS,
};
pub(crate) use spec::Propagator;
pub use spec::{
    evaluate_matrix, propagate, propagate_normalized, size, MatrixSpec, NormalizedState, PopulationVector,
    SizeFunctional,
};
