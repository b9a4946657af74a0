//! Sampling-based robot planner over generalized velocity obstacles with
//! emotion-dependent proxemic constraints, plus a proxemics-blind baseline.
//!
//! Control samples are velocities reachable within one step. A sample is
//! feasible when holding it keeps the robot clear of static obstacles and of
//! every pedestrian's keep-out disc along the predicted paths. For the
//! proxemic planner that disc is the comfort distance (hard) and entering
//! the reachability distance costs `lambda` per meter of penetration. The
//! baseline keeps only physical clearance.

mod roadmap;
mod trial;

pub use roadmap::Roadmap;
pub use trial::{
    run_pair, run_single, run_trial, NavMetrics, PedestrianTruth, PlannerKind, RobotRecord, TrialRun, GOAL_RADIUS,
};

use crate::config::PlannerConfig;
use crate::domain::{EmotionLabel, PedestrianState, RobotState};
use crate::geometry::{Segment, Vec2};
use crate::prediction::PredictedPath;

/// A pedestrian as the planner sees it: perceived state and forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub state: PedestrianState,
    pub path: PredictedPath,
    /// Body radius the keep-out discs are built on; at least the perceived one.
    pub radius: f64,
}

impl Forecast {
    pub fn new(state: PedestrianState, path: PredictedPath) -> Self {
        let radius = state.radius();
        Self { state, path, radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub velocity: Vec2,
    pub feasible: bool,
    pub cost: f64,
}

/// Keep-out radii around a pedestrian's center, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// The robot center must stay at least this far away.
    pub hard: f64,
    /// Entering this radius is penalized by depth.
    pub soft: f64,
}

/// Result of one planning decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOutcome {
    pub velocity: Vec2,
    /// No sample was feasible at any horizon; the robot brakes.
    pub emergency: bool,
    /// Horizon (s) over which the chosen sample was verified.
    pub horizon: f64,
    pub cost: f64,
    pub samples: usize,
}

/// Candidate velocities: a polar grid around the current velocity with the
/// radius of one step's acceleration, plus the preferred velocity projected
/// into that window, the current velocity and maximal braking.
pub fn control_samples(robot: &RobotState, dt: f64, config: &PlannerConfig) -> Vec<Vec2> {
    let center = robot.current_velocity;
    let reach = robot.max_accel * dt;
    let fits = |v: Vec2| v.length() <= robot.max_speed + 1e-12 && (v - center).length() <= reach + 1e-12;
    let mut out = Vec::with_capacity(config.grid_angles * config.grid_speeds + 4);

    let to_pref = robot.preferred_velocity - center;
    if to_pref.length() <= reach {
        out.push(robot.preferred_velocity);
    } else {
        out.push((center + to_pref.clamp_length(reach)).clamp_length(robot.max_speed));
    }
    out.push(center.clamp_length(robot.max_speed));
    out.push(center - center.clamp_length(reach));
    for i in 0..config.grid_angles {
        let angle = std::f64::consts::TAU * i as f64 / config.grid_angles as f64;
        let dir = Vec2::new(angle.cos(), angle.sin());
        for j in 1..=config.grid_speeds {
            let v = center + dir * (reach * j as f64 / config.grid_speeds as f64);
            out.push(v.clamp_length(robot.max_speed));
        }
    }
    out.retain(|&v| fits(v));
    out
}

/// Maximal braking within the acceleration limit.
pub fn braking_velocity(robot: &RobotState, dt: f64) -> Vec2 {
    let v = robot.current_velocity;
    v - v.clamp_length(robot.max_accel * dt)
}

fn obstacle_clear(robot: &RobotState, v: Vec2, obstacles: &[Segment], horizon: f64) -> bool {
    let sweep = Segment::new(robot.position, robot.position + v * horizon);
    obstacles
        .iter()
        .all(|s| sweep.distance_to_segment(s) >= robot.radius)
}

/// Evaluates one candidate over `horizon` seconds. Returns `None` when a
/// hard constraint is violated, else the reachability penetration summed
/// over pedestrians (deepest point along each path).
fn evaluate(
    robot: &RobotState,
    v: Vec2,
    forecasts: &[(Margins, &PredictedPath)],
    obstacles: &[Segment],
    dt: f64,
    horizon: f64,
    obstacle_horizon: f64,
) -> Option<f64> {
    if !obstacle_clear(robot, v, obstacles, obstacle_horizon) {
        return None;
    }
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let mut penetration = 0.0;
    for (m, path) in forecasts {
        let mut deepest: f64 = 0.0;
        for k in 1..=steps {
            let t = k as f64 * dt;
            let d = (robot.position + v * t).distance(path.position_at(t));
            if d < m.hard {
                return None;
            }
            deepest = deepest.max(m.soft - d);
        }
        penetration += deepest;
    }
    Some(penetration)
}

/// Picks the cheapest feasible sample. Horizons shrink from the configured
/// one down to a single step before giving up and braking.
pub fn plan_with_margins(
    robot: &RobotState,
    forecasts: &[(Margins, &PredictedPath)],
    obstacles: &[Segment],
    dt: f64,
    config: &PlannerConfig,
) -> PlanOutcome {
    let candidates = control_samples(robot, dt, config);
    let h = config.horizon;
    let obstacle_h = config.obstacle_horizon;
    for horizon in [h, h / 2.0, h / 4.0, dt] {
        let horizon = horizon.max(dt);
        let mut best: Option<ControlSample> = None;
        for &v in &candidates {
            let Some(penetration) = evaluate(robot, v, forecasts, obstacles, dt, horizon, obstacle_h) else {
                continue;
            };
            let cost = (v - robot.preferred_velocity).length_squared() + config.lambda * penetration;
            if best.is_none_or(|b| cost < b.cost) {
                best = Some(ControlSample {
                    velocity: v,
                    feasible: true,
                    cost,
                });
            }
        }
        if let Some(b) = best {
            return PlanOutcome {
                velocity: b.velocity,
                emergency: false,
                horizon,
                cost: b.cost,
                samples: candidates.len(),
            };
        }
    }
    PlanOutcome {
        velocity: braking_velocity(robot, dt),
        emergency: true,
        horizon: 0.0,
        cost: f64::INFINITY,
        samples: candidates.len(),
    }
}

/// Proxemic margins: the comfort distance (never less than the robot's own
/// radius) is hard, the reachability distance soft. Distances are measured
/// from the pedestrian's surface to the robot's center.
pub fn proxemic_margins(label: EmotionLabel, radius: f64, robot: &RobotState, config: &PlannerConfig) -> Margins {
    let profile = config.proxemics.get(label);
    margins_for(
        radius,
        profile.comfort_distance(),
        profile.reachability_distance(),
        robot,
        config,
    )
}

/// Margins for raw comfort and reachability distances.
pub fn margins_for(radius: f64, comfort: f64, reachability: f64, robot: &RobotState, config: &PlannerConfig) -> Margins {
    Margins {
        hard: radius + comfort.max(robot.radius) + config.safety_buffer,
        soft: radius + reachability,
    }
}

/// Physical contact only.
pub fn baseline_margins(radius: f64, robot: &RobotState, config: &PlannerConfig) -> Margins {
    let r = radius + robot.radius;
    Margins {
        hard: r + config.safety_buffer,
        soft: r,
    }
}

pub fn plan_step(
    robot: &RobotState,
    forecasts: &[Forecast],
    obstacles: &[Segment],
    dt: f64,
    config: &PlannerConfig,
) -> PlanOutcome {
    let f: Vec<(Margins, &PredictedPath)> = forecasts
        .iter()
        .map(|f| (proxemic_margins(f.state.label(), f.radius, robot, config), &f.path))
        .collect();
    plan_with_margins(robot, &f, obstacles, dt, config)
}

pub fn plan_step_baseline(
    robot: &RobotState,
    forecasts: &[Forecast],
    obstacles: &[Segment],
    dt: f64,
    config: &PlannerConfig,
) -> PlanOutcome {
    let f: Vec<(Margins, &PredictedPath)> = forecasts
        .iter()
        .map(|f| (baseline_margins(f.radius, robot, config), &f.path))
        .collect();
    plan_with_margins(robot, &f, obstacles, dt, config)
}

/// Whether `v` passes every hard constraint over `horizon`.
pub fn is_feasible(
    robot: &RobotState,
    v: Vec2,
    forecasts: &[(Margins, &PredictedPath)],
    obstacles: &[Segment],
    dt: f64,
    horizon: f64,
    config: &PlannerConfig,
) -> bool {
    evaluate(robot, v, forecasts, obstacles, dt, horizon, config.obstacle_horizon).is_some()
}
