//! Monte Carlo statistics of population trajectories, the ordered-pair
//! experiment, and growth-rate estimates and approximations.

mod ensemble;
mod growth;
mod lande;
mod stats;

pub use ensemble::{
    run_ensemble, run_ensemble_range, verify_proposition, MonteCarlo, PropositionReport, StopLossCheck, TimeComparison,
    BLOCK, STOPLOSS_POINTS, STOPLOSS_QUANTILES,
};
pub use growth::{
    estimate_stochastic_growth_rate, tuljapurkar_approx, GrowthRateEstimate, TuljapurkarApprox, GROWTH_BATCHES,
};
pub use lande::{lande_arithmetic_mean, lande_log_scale_mean, log_growth_quadrature, LandeParams};
pub use stats::{EnsembleAccumulator, Moments, TimeStats, TrajectoryStats, Z_95};
