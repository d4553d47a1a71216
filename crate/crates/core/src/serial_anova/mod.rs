//! Nested Monte Carlo ANOVA for the interaction variances that drive
//! worst-case bounds under serial dependence, and an exact enumeration oracle
//! for finite-state inputs.

mod algorithm;
mod band;
mod baseline;
mod cost;
mod oracle;

pub use algorithm::{algorithm1_sample, algorithm2_sample, replicate, AnovaConfig, AnovaEstimate, Lag};
pub use band::{
    coefficient_ci, coefficient_ci_from_values, first_order_band, two_lag_band, BandRow, CoefficientEstimate,
    TwoLagBandRow, WorstCaseBand,
};
pub use baseline::{estimate_baseline, monte_carlo_mean};
pub use cost::{pinned_sum_sample, pinned_triple_sum_sample, FnCost, PinnedEvaluation, TrajectoryCost};
pub use oracle::{enumeration_oracle, OracleResult, ORACLE_STATE_LIMIT};
