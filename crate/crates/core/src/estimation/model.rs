//! One-step motion predictors used to propagate ensemble members.

use crate::domain::{MotionParams, PedestrianId};
use crate::geometry::Vec2;
use crate::sim::{Agent, CrowdState, Goal};

use super::State;

/// Advances an augmented state by one step. Only the kinematic components
/// may change; parameters are carried through.
pub trait MotionModel {
    fn propagate(&self, state: &mut State);
}

/// Straight-line motion at the current velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantVelocity {
    pub dt: f64,
}

impl MotionModel for ConstantVelocity {
    fn propagate(&self, state: &mut State) {
        state[0] += self.dt * state[2];
        state[1] += self.dt * state[3];
    }
}

/// What the estimator assumes about a pedestrian's destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoalHint {
    Known(Vec2),
    /// Keep the member's current velocity, capped at its preferred speed.
    FromVelocity,
}

/// The crowd simulator's velocity rule, evaluated against a frozen crowd.
#[derive(Debug, Clone, Copy)]
pub struct CrowdModel<'a> {
    pub crowd: &'a CrowdState,
    /// Crowd index of the pedestrian being estimated, excluded from its own neighbors.
    pub skip: Option<usize>,
    pub goal: GoalHint,
}

impl MotionModel for CrowdModel<'_> {
    fn propagate(&self, state: &mut State) {
        let position = Vec2::new(state[0], state[1]);
        let velocity = Vec2::new(state[2], state[3]);
        let goal = match self.goal {
            GoalHint::Known(g) => Goal::Point(g),
            GoalHint::FromVelocity => Goal::Offset(velocity * self.crowd.dt),
        };
        let agent = Agent {
            id: PedestrianId::new("member"),
            position,
            velocity,
            goal,
            params: MotionParams::saturating([state[4], state[5], state[6]]),
        };
        let v = self.crowd.velocity_for(&agent, self.skip).velocity;
        let dt = self.crowd.dt;
        state[0] += dt * v.x;
        state[1] += dt * v.y;
        state[2] = v.x;
        state[3] = v.y;
    }
}
