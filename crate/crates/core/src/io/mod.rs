//! File formats: scenario documents, sensor streams and result tables.

mod output;
mod scenario;
mod streams;

pub use output::{
    format_real, read_metrics, write_metrics, write_observations, write_robot_trace, write_timeline, write_timing,
    write_trajectory_log, write_trial_traces, MetricsRow, METRICS_HEADER,
};
pub use scenario::{
    load_scenario, parse_scenario, DEFAULT_DT, DEFAULT_MAX_STEPS, DEFAULT_ROBOT_ACCEL, DEFAULT_ROBOT_RADIUS,
    DEFAULT_ROBOT_SPEED,
};
pub use streams::{ingest_streams, FaceSample, PedestrianStream, Streams, MAX_MALFORMED_FRACTION};
