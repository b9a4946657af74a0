//! Closed-loop navigation trials: the robot plans every step against
//! perceived pedestrians while the crowd replays its own simulation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    label_emotion, param_range, MAX_SPEED_FACTOR, VALID_RANGE_MARGIN, EmotionLabel, PedestrianId, PedestrianObservation, PedestrianState, RobotState,
};
use crate::emotion::{fuse_emotions, tem_forward};
use crate::error::{Error, Result};
use crate::estimation::{GoalHint, PedestrianEstimator};
use crate::geometry::Vec2;
use crate::prediction::{predict_all, regularize, GoalEstimate};
use crate::sim::{Agent, CrowdState, Goal, ParamSource, PedestrianSpec, Scenario, TrajectoryLog};

use super::{plan_step, plan_step_baseline, Forecast, Roadmap};

/// The robot counts as arrived within this distance of its goal (m).
pub const GOAL_RADIUS: f64 = 1.0;

/// Extra roadmap clearance beyond the robot radius (m).
const ROADMAP_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Proxemic,
    Baseline,
}

impl PlannerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Proxemic => "proxemic",
            PlannerKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proxemic" => Ok(PlannerKind::Proxemic),
            "baseline" => Ok(PlannerKind::Baseline),
            other => Err(Error::validation("planner", format!("unknown planner {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotRecord {
    pub step: usize,
    pub time: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub emergency: bool,
}

/// Ground-truth proxemic profile of one pedestrian, as used by the intrusion count.
#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianTruth {
    pub id: PedestrianId,
    pub label: EmotionLabel,
    pub radius: f64,
    pub comfort: f64,
    pub reachability: f64,
}

/// Everything recorded during one trial.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub scenario: String,
    pub planner: PlannerKind,
    pub goal_reached: bool,
    /// Time of arrival, or the time simulated when the goal was not reached.
    pub travel_time: f64,
    pub comfort_intrusions: usize,
    pub reachability_intrusions: usize,
    /// Smallest pedestrian-surface to robot-center distance over the trial.
    pub closest_approach: f64,
    pub emergency_stops: usize,
    /// Wall-clock seconds of each planning decision.
    pub decision_times: Vec<f64>,
    pub robot: Vec<RobotRecord>,
    pub crowd: TrajectoryLog,
    pub truth: Vec<PedestrianTruth>,
}

impl TrialRun {
    pub fn median_decision_time(&self) -> f64 {
        if self.decision_times.is_empty() {
            return 0.0;
        }
        let mut t = self.decision_times.clone();
        t.sort_by(f64::total_cmp);
        let n = t.len();
        if n % 2 == 1 {
            t[n / 2]
        } else {
            0.5 * (t[n / 2 - 1] + t[n / 2])
        }
    }
}

/// One row of the navigation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct NavMetrics {
    pub scenario: String,
    pub planner: PlannerKind,
    pub goal_reached: bool,
    pub travel_time: f64,
    pub baseline_travel_time: f64,
    pub additional_time_fraction: f64,
    pub comfort_intrusions: usize,
    pub reachability_intrusions: usize,
    /// Baseline intrusions (comfort plus reachability) minus ours, floored at zero.
    pub intrusions_avoided: usize,
    pub closest_approach: f64,
    pub emergency_stops: usize,
    /// Median wall-clock seconds per planning decision.
    pub decision_time: f64,
}

impl NavMetrics {
    pub fn compare(run: &TrialRun, baseline: &TrialRun) -> Self {
        let ours = run.comfort_intrusions + run.reachability_intrusions;
        let theirs = baseline.comfort_intrusions + baseline.reachability_intrusions;
        Self {
            scenario: run.scenario.clone(),
            planner: run.planner,
            goal_reached: run.goal_reached,
            travel_time: run.travel_time,
            baseline_travel_time: baseline.travel_time,
            additional_time_fraction: if baseline.travel_time > 0.0 {
                run.travel_time / baseline.travel_time - 1.0
            } else {
                0.0
            },
            comfort_intrusions: run.comfort_intrusions,
            reachability_intrusions: run.reachability_intrusions,
            intrusions_avoided: theirs.saturating_sub(ours),
            closest_approach: run.closest_approach,
            emergency_stops: run.emergency_stops,
            decision_time: run.median_decision_time(),
        }
    }
}

/// True emotion label of a pedestrian: its scripted emotion, or the emotion
/// implied by its parameters, fused with its face channel.
fn true_label(spec: &PedestrianSpec, scenario: &Scenario) -> Result<EmotionLabel> {
    let s = &scenario.settings;
    let trajectory = match spec.emotion {
        Some(e) => e,
        None => tem_forward(&spec.params, &s.tem).1,
    };
    let fused = fuse_emotions(&trajectory, spec.face.as_ref(), spec.tracking_confidence)?;
    label_emotion(&fused.emotion, s.theta)
}

/// What the robot knows about the pedestrians.
struct Perception {
    estimators: Vec<Option<PedestrianEstimator>>,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    last: Vec<PedestrianState>,
}

impl Perception {
    fn new(scenario: &Scenario) -> Result<Self> {
        let estimators = scenario
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (p.source == ParamSource::Estimate).then(|| {
                    PedestrianEstimator::new(
                        p.id.clone(),
                        GoalHint::FromVelocity,
                        scenario.settings.estimator,
                        scenario.seed.wrapping_add(i as u64 + 1),
                    )
                })
            })
            .collect();
        let noise = if scenario.observation_noise > 0.0 {
            Some(Normal::new(0.0, scenario.observation_noise).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            estimators,
            noise,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            last: Vec::new(),
        })
    }

    /// Scene of the previous perception, used as the estimators' context.
    fn context(&self, scenario: &Scenario) -> CrowdState {
        let h = scenario.settings.prediction_horizon;
        CrowdState {
            step: 0,
            time: 0.0,
            dt: scenario.dt,
            agents: self
                .last
                .iter()
                .map(|p| Agent {
                    id: p.id.clone(),
                    position: p.position,
                    velocity: p.current_velocity,
                    goal: Goal::Offset(p.predicted_velocity * h),
                    params: p.params,
                })
                .collect(),
            obstacles: scenario.obstacles.clone(),
        }
    }

    /// Perceived states, each with the radius to plan against.
    fn perceive(&mut self, scenario: &Scenario, crowd: &CrowdState) -> Result<Vec<(PedestrianState, f64)>> {
        let s = &scenario.settings;
        let context = self.context(scenario);
        let mut out = Vec::with_capacity(crowd.agents.len());
        for (i, (agent, spec)) in crowd.agents.iter().zip(&scenario.pedestrians).enumerate() {
            let (position, velocity, params, alpha, radius_ucb) = match &mut self.estimators[i] {
                None => (agent.position, agent.velocity, agent.params, spec.tracking_confidence, 0.0),
                Some(est) => {
                    let mut obs = agent.position;
                    if let Some(n) = &self.noise {
                        obs += Vec2::new(n.sample(&mut self.rng), n.sample(&mut self.rng));
                    }
                    let skip = (i < context.agents.len()).then_some(i);
                    est.observe(crowd.time, obs, &context, skip)?;
                    let state = est.state().expect("estimator initialized by observe");
                    // radius barely shows in free walking; plan against its upper confidence value
                    let ucb = (state.mean()[5] + 2.0 * state.spread()[5]).min(param_range(VALID_RANGE_MARGIN).1[1]);
                    (state.position(), state.velocity(), est.params(), est.tracking_confidence(), ucb)
                }
            };
            let (params, reestimate) = regularize(&params, &s.tem, s.gamma, s.theta)?;
            let trajectory = spec.emotion.unwrap_or(reestimate.emotion);
            let velocity = velocity.clamp_length(MAX_SPEED_FACTOR * params.preferred_speed() * (1.0 - 1e-9));
            let state = PedestrianState::new(
                PedestrianObservation {
                    id: agent.id.clone(),
                    position,
                    current_velocity: velocity,
                    predicted_velocity: velocity,
                    params,
                    emotion_trajectory: trajectory,
                    emotion_face: spec.face,
                    tracking_confidence: alpha,
                },
                s.theta,
            )?;
            let radius = state.radius().max(radius_ucb);
            out.push((state, radius));
        }
        self.last = out.iter().map(|(p, _)| p.clone()).collect();
        Ok(out)
    }
}

/// Tracks contiguous intervals below a distance threshold.
#[derive(Debug, Clone, Copy, Default)]
struct IntervalCounter {
    inside: bool,
    count: usize,
}

impl IntervalCounter {
    fn observe(&mut self, below: bool) {
        if below && !self.inside {
            self.count += 1;
        }
        self.inside = below;
    }
}

/// Runs one planner on the scenario.
pub fn run_single(scenario: &Scenario, kind: PlannerKind) -> Result<TrialRun> {
    let spec = scenario
        .robot
        .ok_or_else(|| Error::Config(format!("scenario {:?} has no robot", scenario.name)))?;
    let mut robot: RobotState = spec.initial_state()?;
    let s = &scenario.settings;
    let dt = scenario.dt;
    let roadmap = Roadmap::new(&scenario.obstacles, robot.goal, robot.radius + ROADMAP_MARGIN);
    let truth: Vec<PedestrianTruth> = scenario
        .pedestrians
        .iter()
        .map(|p| {
            let label = true_label(p, scenario)?;
            let profile = s.planner.proxemics.get(label);
            Ok(PedestrianTruth {
                id: p.id.clone(),
                label,
                radius: p.params.radius(),
                comfort: profile.comfort_distance(),
                reachability: profile.reachability_distance(),
            })
        })
        .collect::<Result<_>>()?;

    let mut crowd = CrowdState::from_scenario(scenario);
    let mut perception = Perception::new(scenario)?;
    let mut log = TrajectoryLog::new(dt);
    let mut comfort = vec![IntervalCounter::default(); truth.len()];
    let mut reach = vec![IntervalCounter::default(); truth.len()];
    let mut closest = f64::INFINITY;
    let mut records = Vec::new();
    let mut decision_times = Vec::new();
    let mut emergency_stops = 0;
    let mut emergency = false;
    let mut arrival = None;

    for step in 0..=scenario.max_steps {
        let time = step as f64 * dt;
        log.record(&crowd);
        records.push(RobotRecord {
            step,
            time,
            position: robot.position,
            velocity: robot.current_velocity,
            emergency,
        });
        for (i, agent) in crowd.agents.iter().enumerate() {
            let gap = agent.position.distance(robot.position) - truth[i].radius;
            closest = closest.min(gap);
            comfort[i].observe(gap < truth[i].comfort);
            reach[i].observe(gap < truth[i].reachability);
        }
        if robot.position.distance(robot.goal) <= GOAL_RADIUS {
            arrival = Some(time);
            break;
        }
        if step == scenario.max_steps {
            break;
        }

        let percepts = perception.perceive(scenario, &crowd)?;
        let inputs: Vec<_> = percepts.iter().map(|(p, _)| (p.clone(), GoalEstimate::Extrapolate)).collect();
        let paths = predict_all(&inputs, &scenario.obstacles, dt, s.prediction_horizon)?;
        let forecasts: Vec<Forecast> = percepts
            .into_iter()
            .zip(paths)
            .map(|((state, radius), path)| Forecast { state, path, radius })
            .collect();
        robot.preferred_velocity = roadmap.preferred_velocity(robot.position, robot.max_speed, dt);

        let started = Instant::now();
        let outcome = match kind {
            PlannerKind::Proxemic => plan_step(&robot, &forecasts, &scenario.obstacles, dt, &s.planner),
            PlannerKind::Baseline => plan_step_baseline(&robot, &forecasts, &scenario.obstacles, dt, &s.planner),
        };
        decision_times.push(started.elapsed().as_secs_f64());
        emergency = outcome.emergency;
        if emergency {
            emergency_stops += 1;
            log::debug!("{}: emergency stop at step {step}", scenario.name);
        }
        robot.current_velocity = outcome.velocity;
        robot.position += outcome.velocity * dt;
        crowd.advance();
    }

    let travel_time = arrival.unwrap_or(scenario.max_steps as f64 * dt);
    if arrival.is_none() {
        log::warn!("{}: {kind} planner timed out after {} steps", scenario.name, scenario.max_steps);
    }
    log.truncated = arrival.is_none();
    Ok(TrialRun {
        scenario: scenario.name.clone(),
        planner: kind,
        goal_reached: arrival.is_some(),
        travel_time,
        comfort_intrusions: comfort.iter().map(|c| c.count).sum(),
        reachability_intrusions: reach.iter().map(|c| c.count).sum(),
        closest_approach: closest,
        emergency_stops,
        decision_times,
        robot: records,
        crowd: log,
        truth,
    })
}

/// Runs both planners on identical crowds.
pub fn run_pair(scenario: &Scenario) -> Result<(TrialRun, TrialRun)> {
    Ok((
        run_single(scenario, PlannerKind::Proxemic)?,
        run_single(scenario, PlannerKind::Baseline)?,
    ))
}

/// Metrics of `kind` relative to the baseline on the same scenario.
pub fn run_trial(scenario: &Scenario, kind: PlannerKind) -> Result<NavMetrics> {
    let baseline = run_single(scenario, PlannerKind::Baseline)?;
    let run = match kind {
        PlannerKind::Baseline => baseline.clone(),
        PlannerKind::Proxemic => run_single(scenario, kind)?,
    };
    Ok(NavMetrics::compare(&run, &baseline))
}
