//! Stochastic orders and matrix population models under environmental noise.
//!
//! More variable environmental scenarios, in the increasing convex order,
//! produce more variable population sizes when every vital rate is a
//! log-convex function of the environment. This crate provides the pieces to
//! state and test that claim numerically:
//!
//! - [`orders`]: exact icx/cx comparison of finite laws, Normal closed forms,
//!   and a sample-based falsifier for random vectors;
//! - [`model`]: projection matrices with entries from a closed grammar,
//!   trajectory propagation and log-convexity probes;
//! - [`scenarios`]: noise generators and coupled pairs ordered by construction;
//! - [`analysis`]: Monte Carlo ensembles, the ordered-pair experiment and
//!   growth-rate estimates.

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod model;
pub mod orders;
pub mod scenarios;
pub mod seeding;

pub use analysis::{
    estimate_stochastic_growth_rate, lande_arithmetic_mean, lande_log_scale_mean, run_ensemble, tuljapurkar_approx,
    verify_proposition, GrowthRateEstimate, LandeParams, MonteCarlo, PropositionReport, TrajectoryStats,
    TuljapurkarApprox,
};
pub use error::{Error, Result};
pub use linalg::SquareMatrix;
pub use model::{EntryFunction, MatrixSpec, PopulationVector, SizeFunctional};
pub use orders::{cx_compare, icx_compare, DiscreteDistribution, OrderVerdict};
pub use scenarios::{CouplingSpec, NoiseSpec, Scenario, ScenarioPair};
