//! Scenario layer: configuration, the per-tick run loop, sweeps, and CSV
//! output.

pub mod config;
pub mod metrics;
pub mod run;

pub use config::{
    load_config, parse_config, ConfigError, ProfileSegment, Role, ScenarioConfig, VehicleSpec,
};
pub use metrics::{emit_metrics, emit_summary, OutputError};
pub use run::{
    odom_topic, run_scenario, run_sweep, run_sweep_with, FollowerSample, FollowerStats,
    MetricsRecord, RunSummary, SimMsg, SETTLING,
};
