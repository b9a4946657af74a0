use std::collections::BTreeMap;

use crate::domain::PedestrianId;
use crate::geometry::Vec2;

use super::{CrowdState, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub step: usize,
    pub time: f64,
    pub agent: PedestrianId,
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Per-step agent records of one simulation run, step-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub records: Vec<LogRecord>,
    /// Number of steps simulated.
    pub steps: usize,
    /// Set when the step budget ran out with some agent still away from its goal.
    pub truncated: bool,
}

impl TrajectoryLog {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            ..Default::default()
        }
    }

    pub fn record(&mut self, state: &CrowdState) {
        self.steps = state.step;
        self.records.extend(state.agents.iter().map(|a| LogRecord {
            step: state.step,
            time: state.time,
            agent: a.id.clone(),
            position: a.position,
            velocity: a.velocity,
        }));
    }

    pub fn track(&self, id: &PedestrianId) -> Vec<&LogRecord> {
        self.records.iter().filter(|r| &r.agent == id).collect()
    }

    /// Records grouped by step.
    pub fn by_step(&self) -> BTreeMap<usize, Vec<&LogRecord>> {
        let mut out: BTreeMap<usize, Vec<&LogRecord>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.step).or_default().push(r);
        }
        out
    }

    /// First step at which the agent is within `tolerance` of `goal`.
    pub fn first_step_within(&self, id: &PedestrianId, goal: Vec2, tolerance: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| &r.agent == id && r.position.distance(goal) <= tolerance)
            .map(|r| r.step)
    }

    /// First step after which the agent no longer moves (within `tolerance` of its final position).
    pub fn arrival_step(&self, id: &PedestrianId, tolerance: f64) -> Option<usize> {
        let track = self.track(id);
        let last = track.last()?.position;
        track.iter().find(|r| r.position.distance(last) <= tolerance).map(|r| r.step)
    }

    /// Smallest `distance - (r_i + r_j)` over all logged steps and pairs.
    pub fn min_pairwise_clearance(&self, scenario: &Scenario) -> f64 {
        let radius: BTreeMap<&PedestrianId, f64> = scenario
            .pedestrians
            .iter()
            .map(|p| (&p.id, p.params.radius()))
            .collect();
        let mut min = f64::INFINITY;
        for records in self.by_step().values() {
            for (i, a) in records.iter().enumerate() {
                for b in &records[i + 1..] {
                    let gap = a.position.distance(b.position) - radius[&a.agent] - radius[&b.agent];
                    min = min.min(gap);
                }
            }
        }
        min
    }
}
