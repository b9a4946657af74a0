//! CSV writers for metrics, timing and traces.
//!
//! Reals are written with six significant digits so that reruns of a
//! deterministic computation produce byte-identical files.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimation::TimelineRow;
use crate::navigation::{NavMetrics, PlannerKind, RobotRecord, TrialRun};
use crate::sim::TrajectoryLog;

/// Six significant digits, shortest form, no exponent for ordinary magnitudes.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Stream(format!("{}: {other:?}", path.display())),
    }
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_error(path))?;
    }
    w.flush()?;
    Ok(())
}

pub const METRICS_HEADER: [&str; 11] = [
    "scenario",
    "planner",
    "goal_reached",
    "travel_time",
    "baseline_travel_time",
    "additional_time_fraction",
    "comfort_intrusions",
    "reachability_intrusions",
    "intrusions_avoided",
    "closest_approach",
    "emergency_stops",
];

/// A metrics row as read back from disk. Wall-clock timing lives in a
/// separate file so that this one stays deterministic.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub planner: PlannerKind,
    pub goal_reached: bool,
    pub travel_time: f64,
    pub baseline_travel_time: f64,
    pub additional_time_fraction: f64,
    pub comfort_intrusions: usize,
    pub reachability_intrusions: usize,
    pub intrusions_avoided: usize,
    pub closest_approach: f64,
    pub emergency_stops: usize,
}

pub fn write_metrics(rows: &[NavMetrics], path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &METRICS_HEADER,
        rows.iter().map(|m| {
            vec![
                m.scenario.clone(),
                m.planner.to_string(),
                m.goal_reached.to_string(),
                format_real(m.travel_time),
                format_real(m.baseline_travel_time),
                format_real(m.additional_time_fraction),
                m.comfort_intrusions.to_string(),
                m.reachability_intrusions.to_string(),
                m.intrusions_avoided.to_string(),
                format_real(m.closest_approach),
                m.emergency_stops.to_string(),
            ]
        }),
    )
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    r.deserialize().map(|row| row.map_err(csv_error(path))).collect()
}

/// Median decision time per scenario and planner, in milliseconds.
pub fn write_timing(rows: &[NavMetrics], path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &["scenario", "planner", "median_decision_ms"],
        rows.iter().map(|m| {
            vec![
                m.scenario.clone(),
                m.planner.to_string(),
                format_real(m.decision_time * 1e3),
            ]
        }),
    )
}

pub fn write_trajectory_log(log: &TrajectoryLog, path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &["step", "time", "id", "x", "y", "vx", "vy"],
        log.records.iter().map(|r| {
            vec![
                r.step.to_string(),
                format_real(r.time),
                r.agent.to_string(),
                format_real(r.position.x),
                format_real(r.position.y),
                format_real(r.velocity.x),
                format_real(r.velocity.y),
            ]
        }),
    )
}

/// Writes the log as a trajectory stream (`time,id,x,y`), adding isotropic
/// Gaussian noise of standard deviation `noise` drawn from `seed`.
pub fn write_observations(log: &TrajectoryLog, noise: f64, seed: u64, path: impl AsRef<Path>) -> Result<()> {
    let normal = Normal::new(0.0, noise).map_err(|e| Error::Config(format!("observation noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<String>> = log
        .records
        .iter()
        .map(|r| {
            let (dx, dy) = if noise > 0.0 {
                (normal.sample(&mut rng), normal.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            vec![
                format_real(r.time),
                r.agent.to_string(),
                format_real(r.position.x + dx),
                format_real(r.position.y + dy),
            ]
        })
        .collect();
    write_table(path.as_ref(), &["time", "id", "x", "y"], rows)
}

pub fn write_timeline(rows: &[TimelineRow], path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &[
            "time",
            "id",
            "x",
            "y",
            "vx",
            "vy",
            "planning_horizon",
            "radius",
            "preferred_speed",
            "happy",
            "angry",
            "sad",
            "label",
            "confidence",
            "face_used",
        ],
        rows.iter().map(|r| {
            let p = r.params.to_array();
            let e = r.emotion.to_array();
            vec![
                format_real(r.time),
                r.id.to_string(),
                format_real(r.position.x),
                format_real(r.position.y),
                format_real(r.velocity.x),
                format_real(r.velocity.y),
                format_real(p[0]),
                format_real(p[1]),
                format_real(p[2]),
                format_real(e[0]),
                format_real(e[1]),
                format_real(e[2]),
                r.label.to_string(),
                format_real(r.confidence),
                r.face_used.to_string(),
            ]
        }),
    )
}

pub fn write_robot_trace(records: &[RobotRecord], path: impl AsRef<Path>) -> Result<()> {
    write_table(
        path.as_ref(),
        &["step", "time", "x", "y", "vx", "vy", "emergency"],
        records.iter().map(|r| {
            vec![
                r.step.to_string(),
                format_real(r.time),
                format_real(r.position.x),
                format_real(r.position.y),
                format_real(r.velocity.x),
                format_real(r.velocity.y),
                r.emergency.to_string(),
            ]
        }),
    )
}

/// Writes `<prefix>_robot.csv`, `<prefix>_crowd.csv` and
/// `<prefix>_pedestrians.csv` (true labels and distances) into `dir`.
pub fn write_trial_traces(run: &TrialRun, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let prefix = format!("{}_{}", run.scenario, run.planner);
    write_robot_trace(&run.robot, dir.join(format!("{prefix}_robot.csv")))?;
    write_trajectory_log(&run.crowd, dir.join(format!("{prefix}_crowd.csv")))?;
    write_table(
        &dir.join(format!("{prefix}_pedestrians.csv")),
        &["id", "label", "radius", "comfort", "reachability"],
        run.truth.iter().map(|t| {
            vec![
                t.id.to_string(),
                t.label.to_string(),
                format_real(t.radius),
                format_real(t.comfort),
                format_real(t.reachability),
            ]
        }),
    )
}
