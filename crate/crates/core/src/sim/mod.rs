//! Deterministic 2D crowd simulation. Every pedestrian picks its velocity
//! with reciprocal velocity obstacles parameterized by its
//! [`MotionParams`]: the planning horizon is the collision look-ahead, the
//! radius is the disc size and the preferred speed is the speed cap. When
//! the constraints leave no velocity under that cap, the agent may speed up
//! to [`MAX_SPEED_FACTOR`] times it before constraints are relaxed.

pub mod orca;
mod scenario;
mod trajectory;

pub use scenario::{ParamSource, PedestrianSpec, RobotSpec, Scenario};
pub use trajectory::{LogRecord, TrajectoryLog};

use crate::domain::{MotionParams, PedestrianId, MAX_SPEED_FACTOR};
use crate::geometry::{Segment, Vec2};
use orca::{Disc, Line};

/// Where an agent is heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Goal {
    /// A fixed target position.
    Point(Vec2),
    /// A target that stays at a constant offset from the agent, re-anchored
    /// every step. Used when the true goal is unknown.
    Offset(Vec2),
}

impl Goal {
    fn target(&self, position: Vec2) -> Vec2 {
        match *self {
            Goal::Point(p) => p,
            Goal::Offset(o) => position + o,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: PedestrianId,
    pub position: Vec2,
    pub velocity: Vec2,
    pub goal: Goal,
    pub params: MotionParams,
}

impl Agent {
    /// Goal-directed velocity at preferred speed, shortened on the final
    /// step so the agent lands on the goal instead of overshooting.
    pub fn preferred_velocity(&self, dt: f64) -> Vec2 {
        let to_goal = self.goal.target(self.position) - self.position;
        let dist = to_goal.length();
        if dist <= 1e-12 {
            return Vec2::ZERO;
        }
        let speed = self.params.preferred_speed().min(dist / dt);
        to_goal * (speed / dist)
    }

    pub fn distance_to_goal(&self) -> f64 {
        match self.goal {
            Goal::Point(p) => self.position.distance(p),
            Goal::Offset(_) => f64::INFINITY,
        }
    }

    fn disc(&self) -> Disc {
        Disc {
            position: self.position,
            velocity: self.velocity,
            radius: self.params.radius(),
        }
    }

    /// Effective collision look-ahead: never shorter than one step.
    fn look_ahead(&self, dt: f64) -> f64 {
        self.params.planning_horizon().max(dt)
    }

    fn neighbor_range(&self, other: &Agent, dt: f64) -> f64 {
        self.look_ahead(dt) * self.params.preferred_speed() + self.params.radius() + other.params.radius()
    }
}

/// Tunables that are not part of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Agents closer than this to their goal count as arrived.
    pub arrival_tolerance: f64,
    /// Distance to goal under which an agent counts as successful when the
    /// step budget runs out.
    pub goal_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            arrival_tolerance: 1e-6,
            goal_tolerance: 1.0,
        }
    }
}

/// Simulation state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CrowdState {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub agents: Vec<Agent>,
    pub obstacles: Vec<Segment>,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    /// Agents whose constraints had to be relaxed.
    pub relaxed: usize,
    /// Agents that fell back to zero velocity.
    pub stopped: usize,
}

impl CrowdState {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let agents = scenario
            .pedestrians
            .iter()
            .map(|p| Agent {
                id: p.id.clone(),
                position: p.start,
                velocity: Vec2::ZERO,
                goal: Goal::Point(p.goal),
                params: p.params,
            })
            .collect();
        Self {
            step: 0,
            time: 0.0,
            dt: scenario.dt,
            agents,
            obstacles: scenario.obstacles.clone(),
        }
    }

    pub fn agent(&self, id: &PedestrianId) -> Option<&Agent> {
        self.agents.iter().find(|a| &a.id == id)
    }

    /// New velocity of agent `i` computed from the frozen current state.
    pub fn choose_velocity(&self, i: usize) -> orca::Solution {
        self.velocity_for(&self.agents[i], Some(i))
    }

    /// Velocity `agent` would choose against the frozen crowd, ignoring the
    /// crowd member at index `skip` (normally the agent itself).
    pub fn velocity_for(&self, agent: &Agent, skip: Option<usize>) -> orca::Solution {
        let dt = self.dt;
        let me = agent.disc();
        let tau = agent.look_ahead(dt);
        let obstacle_reach = tau * agent.params.preferred_speed() + agent.params.radius();

        let mut lines: Vec<Line> = self
            .obstacles
            .iter()
            .filter(|s| s.distance_to_point(agent.position) < obstacle_reach)
            .filter_map(|s| orca::obstacle_line(&me, s, tau, dt))
            .collect();
        let num_hard = lines.len();

        for (j, other) in self.agents.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            let dist = agent.position.distance(other.position);
            let in_range = dist < agent.neighbor_range(other, dt) || dist < other.neighbor_range(agent, dt);
            if in_range {
                lines.push(orca::agent_line(&me, &other.disc(), tau, dt));
            }
        }

        let speed = agent.params.preferred_speed();
        let preferred = agent.preferred_velocity(dt);
        let solution = orca::solve(&lines, num_hard, speed, preferred);
        if solution.relaxed && !solution.infeasible {
            return orca::solve(&lines, num_hard, MAX_SPEED_FACTOR * speed, preferred);
        }
        solution
    }

    /// Advances one step: all velocities are chosen from the time-t state,
    /// then all positions are integrated.
    pub fn advance(&mut self) -> StepStats {
        let solutions: Vec<orca::Solution> = (0..self.agents.len()).map(|i| self.choose_velocity(i)).collect();
        let mut stats = StepStats::default();
        for (agent, sol) in self.agents.iter_mut().zip(&solutions) {
            stats.relaxed += usize::from(sol.relaxed);
            stats.stopped += usize::from(sol.infeasible);
            agent.velocity = sol.velocity;
            agent.position += sol.velocity * self.dt;
        }
        self.step += 1;
        self.time = self.step as f64 * self.dt;
        stats
    }

    pub fn all_arrived(&self, tolerance: f64) -> bool {
        self.agents.iter().all(|a| a.distance_to_goal() <= tolerance)
    }
}

/// One simulation step as a pure function.
pub fn step(state: &CrowdState) -> CrowdState {
    let mut next = state.clone();
    next.advance();
    next
}

/// Runs the scenario until every pedestrian arrives or `max_steps` is hit.
pub fn simulate(scenario: &Scenario) -> TrajectoryLog {
    simulate_with(scenario, &SimConfig::default())
}

pub fn simulate_with(scenario: &Scenario, config: &SimConfig) -> TrajectoryLog {
    let mut state = CrowdState::from_scenario(scenario);
    let mut log = TrajectoryLog::new(scenario.dt);
    if state.agents.is_empty() {
        return log;
    }
    log.record(&state);
    while state.step < scenario.max_steps && !state.all_arrived(config.arrival_tolerance) {
        let stats = state.advance();
        if stats.stopped > 0 {
            log::debug!("step {}: {} agents stopped on infeasible constraints", state.step, stats.stopped);
        }
        log.record(&state);
    }
    log.truncated = !state.all_arrived(config.goal_tolerance);
    log
}
