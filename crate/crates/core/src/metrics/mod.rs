//! Forecast scores and comparison tests.

mod dm;
mod mcs;
mod scores;

pub use dm::{dm_test, dm_test_with, long_run_variance, qs_bandwidth, qs_kernel, DmResult, HacConfig, DM_MIN_T};
pub use mcs::{mcs, McsConfig, McsResult, MCS_MIN_T};
pub use scores::{
    crps_gaussian, crps_sample, crps_student_t, rmse_aggregates, rmse_hourly, significance_stars, ScoreTable,
    PEAK_HOURS,
};
