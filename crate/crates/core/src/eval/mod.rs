//! Experiment harness: database surveys, simulated test routes driven
//! through the protocol, error reports and comparison tables.

mod calibrate;
mod harness;
mod manifest;
mod report;
mod scenario;

pub use calibrate::{frames_per_minute, gap_calibration, GapCalibration};
pub use harness::{
    collect_training, localize_run, read_fixes_report, replay_windows, run_test, run_test_per_seed, train_lstm,
    window_series, write_fixes, Engine, FixRecord, RunResult, RunSpec, FIXES_HEADER,
};
pub use manifest::RunManifest;
pub use report::{compare, empirical_cdf, Comparison, ComparisonRow, ErrorReport};
pub use scenario::{EnvironmentSpec, ScenarioConfig, TrainingConfig};
