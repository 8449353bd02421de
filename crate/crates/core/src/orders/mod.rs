//! Increasing convex (icx) and convex (cx) stochastic orders.
//!
//! Scalar laws with finite support are compared exactly through their
//! stop-loss transforms `c ↦ E(X - c)+`. Normal laws use their closed-form
//! conditions, and random vectors known only through samples get a
//! falsification test.

mod compare;
mod discrete;
mod normal;
mod vector;

pub use compare::{cv_p, cx_compare, icx_compare, Obstruction, OrderVerdict, Relation, Witness, DEFAULT_TOL};
pub use discrete::{stop_loss, DiscreteDistribution, EmpiricalSample, MASS_EPS, MERGE_EPS};
pub use normal::{
    mvnormal_cx_compare, mvnormal_icx_evidence, normal_cx_compare, normal_icx_compare, simplex_grid, IcxEvidence,
    MvNormalSpec, NecessaryFailure, NormalSpec, DIRECTION_SEED, RANDOM_DIRECTIONS, SIMPLEX_GRID_STEPS,
};
pub use vector::{empirical_icx_evidence_vec, FalsifyingWitness, TestFamily, VectorEvidence, DEFAULT_Z};
