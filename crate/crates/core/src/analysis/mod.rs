//! Statistics for comparing controllers and the reward-landscape probe.

mod probe;
mod stats;

pub use probe::{run_probe, ProbeConfig, ProbeRow, ProbeTrace, RewardKind};
pub use stats::{
    bootstrap_ci, bootstrap_ci_with, ewma, max_pool_1d, mean, quantile, regularized_incomplete_beta,
    student_t_sf, two_proportion_z_test, welch_t_test, StatReport, WelchTest, ZTest,
};
