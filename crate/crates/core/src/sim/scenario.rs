use std::collections::BTreeSet;

use crate::config::Settings;
use crate::domain::{EmotionVector, MotionParams, PedestrianId, RobotState};
use crate::error::{Error, Result};
use crate::geometry::{Segment, Vec2};

/// How the robot learns a pedestrian's motion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParamSource {
    /// The simulated parameters are handed to the robot directly.
    #[default]
    Known,
    /// The robot estimates them online from noisy position observations.
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianSpec {
    pub id: PedestrianId,
    pub start: Vec2,
    pub goal: Vec2,
    /// Parameters driving the simulated pedestrian.
    pub params: MotionParams,
    pub source: ParamSource,
    /// Scripted trajectory emotion; overrides the emotion implied by `params`.
    pub emotion: Option<EmotionVector>,
    /// Scripted face-channel emotion.
    pub face: Option<EmotionVector>,
    pub tracking_confidence: f64,
}

impl PedestrianSpec {
    pub fn new(id: impl Into<PedestrianId>, start: Vec2, goal: Vec2, params: MotionParams) -> Self {
        Self {
            id: id.into(),
            start,
            goal,
            params,
            source: ParamSource::Known,
            emotion: None,
            face: None,
            tracking_confidence: 1.0,
        }
    }

    pub fn with_emotion(mut self, emotion: EmotionVector) -> Self {
        self.emotion = Some(emotion);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotSpec {
    pub start: Vec2,
    pub goal: Vec2,
    pub max_speed: f64,
    pub max_accel: f64,
    pub radius: f64,
}

impl RobotSpec {
    pub fn initial_state(&self) -> Result<RobotState> {
        RobotState::new(self.start, self.goal, self.max_speed, self.max_accel, self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub obstacles: Vec<Segment>,
    pub pedestrians: Vec<PedestrianSpec>,
    pub robot: Option<RobotSpec>,
    pub dt: f64,
    pub max_steps: usize,
    pub seed: u64,
    /// Standard deviation (m) of the position noise injected into observations.
    pub observation_noise: f64,
    pub settings: Settings,
}

impl Scenario {
    pub fn new(pedestrians: Vec<PedestrianSpec>, dt: f64, max_steps: usize) -> Result<Self> {
        let scenario = Self {
            name: "unnamed".into(),
            obstacles: Vec::new(),
            pedestrians,
            robot: None,
            dt,
            max_steps,
            seed: 0,
            observation_noise: 0.0,
            settings: Settings::default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.5) {
            return Err(Error::validation("sim.dt", format!("{} not in (0, 0.5]", self.dt)));
        }
        if self.max_steps == 0 {
            return Err(Error::validation("sim.max_steps", "must be at least 1"));
        }
        if !(self.observation_noise >= 0.0 && self.observation_noise.is_finite()) {
            return Err(Error::validation(
                "sim.observation_noise",
                format!("{} must be non-negative", self.observation_noise),
            ));
        }
        let mut ids = BTreeSet::new();
        for p in &self.pedestrians {
            if !ids.insert(&p.id) {
                return Err(Error::validation("pedestrians.id", format!("duplicate id {:?}", p.id.as_str())));
            }
            if !p.start.is_finite() || !p.goal.is_finite() {
                return Err(Error::validation(
                    format!("pedestrians[{}].start", p.id),
                    "non-finite coordinates",
                ));
            }
            if !(0.0..=1.0).contains(&p.tracking_confidence) {
                return Err(Error::validation(
                    format!("pedestrians[{}].tracking_confidence", p.id),
                    format!("{} not in [0, 1]", p.tracking_confidence),
                ));
            }
        }
        for (i, a) in self.pedestrians.iter().enumerate() {
            for b in &self.pedestrians[i + 1..] {
                let min = a.params.radius() + b.params.radius();
                if a.start.distance(b.start) < min {
                    return Err(Error::validation(
                        format!("pedestrians[{}].start", b.id),
                        format!("overlaps pedestrian {} (need {min:.3} m separation)", a.id),
                    ));
                }
            }
        }
        for s in &self.obstacles {
            if !s.a.is_finite() || !s.b.is_finite() {
                return Err(Error::validation("world.obstacles", "non-finite coordinates"));
            }
        }
        if let Some(robot) = &self.robot {
            robot.initial_state()?;
        }
        self.settings.validate()
    }
}
