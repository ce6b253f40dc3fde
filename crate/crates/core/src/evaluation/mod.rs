//! Regret measurement, theoretical bounds, divergence utilities, lower-bound
//! checks and the replicated experiment runner.

mod bounds;
mod divergence;
mod experiment;
mod lower_bound;
mod regret;

pub use bounds::{corollary_bound, hypercube_floor, theorem1_bound, CorollaryBound};
pub use divergence::{bretagnolle_huber_rhs, chi2_bernoulli, kl_bernoulli};
pub use experiment::{
    format_decimal, run_experiment, write_aggregate_csv, write_regret_csv, AggregateRow, ExperimentConfig,
    InstanceGenerator, RegretReport, ReplicaRow, CSV_HEADER,
};
pub use lower_bound::{
    verify_hypercube_lower_bound, verify_online_lower_bound, CoordinateErrorRate, HypercubeReport,
    LowerBoundAlgorithm, OnlineReport,
};
pub use regret::{mistakes, simple_regret};
