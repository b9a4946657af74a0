//! Emotion-aware crowd simulation, motion-parameter estimation and
//! proxemics-constrained robot navigation.

pub mod config;
pub mod domain;
pub mod emotion;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod io;
pub mod navigation;
pub mod prediction;
pub mod sim;

pub use config::{EstimatorConfig, PlannerConfig, Settings};
pub use domain::{
    label_emotion, proxemic_profile, EmotionLabel, EmotionVector, MotionParams, PedestrianId, PedestrianObservation,
    PedestrianState, ProxemicProfile, ProxemicTable, RobotState,
};
pub use emotion::{fuse_emotions, tem_forward, tem_forward_raw, tem_inverse, RawEmotion, TemMatrix};
pub use error::{Error, Result};
pub use geometry::{Segment, Vec2};
pub use sim::{simulate, CrowdState, Scenario, TrajectoryLog};
