//! Shared domain types: emotion vectors and labels, motion parameters,
//! pedestrian and robot state, and proxemic profiles.
//!
//! Everything here is an immutable value type once constructed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Default labeling threshold.
pub const DEFAULT_THETA: f64 = 0.55;

/// Observed minimum of (planning horizon s, radius m, preferred speed m/s).
pub const PARAM_MIN: [f64; 3] = [0.09, 0.30, 0.93];
/// Observed maximum of (planning horizon s, radius m, preferred speed m/s).
pub const PARAM_MAX: [f64; 3] = [2.21, 0.92, 2.33];
/// Observed average of (planning horizon s, radius m, preferred speed m/s).
pub const PARAM_AVERAGE: [f64; 3] = [1.25, 0.61, 1.39];
pub const PARAM_NAMES: [&str; 3] = ["planning_horizon", "radius", "preferred_speed"];

/// Margin applied to the observed parameter range for validation.
pub const VALID_RANGE_MARGIN: f64 = 0.10;
/// Wider margin accepted for linear inverses of emotion vectors.
pub const DOMAIN_RANGE_MARGIN: f64 = 0.50;
/// Pedestrian speed never exceeds this multiple of the preferred speed.
pub const MAX_SPEED_FACTOR: f64 = 1.5;

/// Parameter range `[min·(1−margin), max·(1+margin)]` per component.
pub fn param_range(margin: f64) -> ([f64; 3], [f64; 3]) {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for i in 0..3 {
        lo[i] = PARAM_MIN[i] * (1.0 - margin);
        hi[i] = PARAM_MAX[i] * (1.0 + margin);
    }
    (lo, hi)
}

/// Emotion intensities in `[0, 1]`, ordered (happy, angry, sad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EmotionVector {
    happy: f64,
    angry: f64,
    sad: f64,
}

impl EmotionVector {
    /// Builds a vector, clamping each component into `[0, 1]`.
    pub fn new(happy: f64, angry: f64, sad: f64) -> Result<Self> {
        for (name, v) in [("happy", happy), ("angry", angry), ("sad", sad)] {
            if !v.is_finite() {
                return Err(Error::validation(
                    format!("emotion.{name}"),
                    format!("{v} is not finite"),
                ));
            }
        }
        Ok(Self {
            happy: happy.clamp(0.0, 1.0),
            angry: angry.clamp(0.0, 1.0),
            sad: sad.clamp(0.0, 1.0),
        })
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    pub fn happy(&self) -> f64 {
        self.happy
    }

    pub fn angry(&self) -> f64 {
        self.angry
    }

    pub fn sad(&self) -> f64 {
        self.sad
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.happy, self.angry, self.sad]
    }

    pub fn max_component(&self) -> f64 {
        self.happy.max(self.angry).max(self.sad)
    }

    pub fn label(&self, theta: f64) -> Result<EmotionLabel> {
        label_emotion(self, theta)
    }
}

/// Discrete emotion label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Happy,
    Angry,
    Sad,
    Neutral,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 4] = [
        EmotionLabel::Happy,
        EmotionLabel::Angry,
        EmotionLabel::Sad,
        EmotionLabel::Neutral,
    ];

    /// Index of the matching emotion component, `None` for neutral.
    pub fn component(self) -> Option<usize> {
        match self {
            EmotionLabel::Happy => Some(0),
            EmotionLabel::Angry => Some(1),
            EmotionLabel::Sad => Some(2),
            EmotionLabel::Neutral => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Happy => "happy",
            EmotionLabel::Angry => "angry",
            EmotionLabel::Sad => "sad",
            EmotionLabel::Neutral => "neutral",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "happy" => Ok(EmotionLabel::Happy),
            "angry" => Ok(EmotionLabel::Angry),
            "sad" => Ok(EmotionLabel::Sad),
            "neutral" => Ok(EmotionLabel::Neutral),
            other => Err(Error::validation("label", format!("unknown label {other:?}"))),
        }
    }
}

/// Labels an emotion vector. A component wins only if it strictly exceeds
/// both others and `theta`; every other case, ties included, is neutral.
pub fn label_emotion(e: &EmotionVector, theta: f64) -> Result<EmotionLabel> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::validation("theta", format!("{theta} not in (0, 1)")));
    }
    let [h, a, s] = e.to_array();
    let label = if h > a && h > s && h > theta {
        EmotionLabel::Happy
    } else if a > h && a > s && a > theta {
        EmotionLabel::Angry
    } else if s > h && s > a && s > theta {
        EmotionLabel::Sad
    } else {
        EmotionLabel::Neutral
    };
    Ok(label)
}

/// Motion-model parameters of a pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct MotionParams {
    planning_horizon: f64,
    radius: f64,
    preferred_speed: f64,
}

impl MotionParams {
    pub fn new(planning_horizon: f64, radius: f64, preferred_speed: f64) -> Result<Self> {
        let (lo, hi) = param_range(VALID_RANGE_MARGIN);
        let values = [planning_horizon, radius, preferred_speed];
        for i in 0..3 {
            let v = values[i];
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::validation(
                    PARAM_NAMES[i],
                    format!("{v} must be strictly positive and finite"),
                ));
            }
            if v < lo[i] || v > hi[i] {
                return Err(Error::validation(
                    PARAM_NAMES[i],
                    format!("{v} outside valid range [{:.4}, {:.4}]", lo[i], hi[i]),
                ));
            }
        }
        Ok(Self {
            planning_horizon,
            radius,
            preferred_speed,
        })
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    /// The observed average parameters.
    pub fn average() -> Self {
        Self {
            planning_horizon: PARAM_AVERAGE[0],
            radius: PARAM_AVERAGE[1],
            preferred_speed: PARAM_AVERAGE[2],
        }
    }

    /// Clamps each finite component into the valid range.
    pub fn saturating(v: [f64; 3]) -> Self {
        let (lo, hi) = param_range(VALID_RANGE_MARGIN);
        let c = |i: usize| {
            if v[i].is_finite() {
                v[i].clamp(lo[i], hi[i])
            } else {
                PARAM_AVERAGE[i]
            }
        };
        Self {
            planning_horizon: c(0),
            radius: c(1),
            preferred_speed: c(2),
        }
    }

    pub fn planning_horizon(&self) -> f64 {
        self.planning_horizon
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn preferred_speed(&self) -> f64 {
        self.preferred_speed
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.planning_horizon, self.radius, self.preferred_speed]
    }
}

impl TryFrom<[f64; 3]> for MotionParams {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::from_array(v)
    }
}

impl From<MotionParams> for [f64; 3] {
    fn from(p: MotionParams) -> Self {
        p.to_array()
    }
}

/// Per-emotion comfort (hard) and reachability (soft) distances in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxemicProfile {
    comfort_distance: f64,
    reachability_distance: f64,
}

impl ProxemicProfile {
    pub fn new(comfort_distance: f64, reachability_distance: f64) -> Result<Self> {
        if !(comfort_distance > 0.0 && comfort_distance.is_finite()) {
            return Err(Error::validation(
                "comfort_distance",
                format!("{comfort_distance} must be positive"),
            ));
        }
        if !(reachability_distance > comfort_distance && reachability_distance.is_finite()) {
            return Err(Error::validation(
                "reachability_distance",
                format!("{reachability_distance} must exceed comfort distance {comfort_distance}"),
            ));
        }
        Ok(Self {
            comfort_distance,
            reachability_distance,
        })
    }

    pub fn comfort_distance(&self) -> f64 {
        self.comfort_distance
    }

    pub fn reachability_distance(&self) -> f64 {
        self.reachability_distance
    }
}

/// Proxemic distances in centimeters, as measured.
const PROXEMIC_TABLE_CM: [(EmotionLabel, f64, f64); 4] = [
    (EmotionLabel::Happy, 90.04, 127.38),
    (EmotionLabel::Sad, 112.71, 148.97),
    (EmotionLabel::Angry, 99.75, 138.38),
    (EmotionLabel::Neutral, 92.03, 136.09),
];

pub fn proxemic_profile(label: EmotionLabel) -> ProxemicProfile {
    let (_, comfort_cm, reach_cm) = PROXEMIC_TABLE_CM
        .iter()
        .copied()
        .find(|(l, _, _)| *l == label)
        .expect("every label has a row");
    ProxemicProfile {
        comfort_distance: comfort_cm / 100.0,
        reachability_distance: reach_cm / 100.0,
    }
}

/// Label-indexed proxemic profiles, overridable for experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxemicTable {
    profiles: [ProxemicProfile; 4],
}

impl ProxemicTable {
    pub fn uniform(profile: ProxemicProfile) -> Self {
        Self {
            profiles: [profile; 4],
        }
    }

    pub fn get(&self, label: EmotionLabel) -> ProxemicProfile {
        self.profiles[label as usize]
    }

    pub fn set(&mut self, label: EmotionLabel, profile: ProxemicProfile) {
        self.profiles[label as usize] = profile;
    }
}

impl Default for ProxemicTable {
    fn default() -> Self {
        let mut table = Self::uniform(proxemic_profile(EmotionLabel::Neutral));
        for label in EmotionLabel::ALL {
            table.set(label, proxemic_profile(label));
        }
        table
    }
}

/// Opaque pedestrian identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PedestrianId(pub String);

impl PedestrianId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PedestrianId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PedestrianId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for PedestrianId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Perceived state of one pedestrian.
#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianState {
    pub id: PedestrianId,
    pub position: Vec2,
    pub current_velocity: Vec2,
    pub predicted_velocity: Vec2,
    pub params: MotionParams,
    emotion_trajectory: EmotionVector,
    emotion_face: Option<EmotionVector>,
    emotion_joint: EmotionVector,
    label: EmotionLabel,
    tracking_confidence: f64,
}

/// Inputs for [`PedestrianState::new`].
#[derive(Debug, Clone)]
pub struct PedestrianObservation {
    pub id: PedestrianId,
    pub position: Vec2,
    pub current_velocity: Vec2,
    pub predicted_velocity: Vec2,
    pub params: MotionParams,
    pub emotion_trajectory: EmotionVector,
    pub emotion_face: Option<EmotionVector>,
    pub tracking_confidence: f64,
}

impl PedestrianState {
    /// Fuses the emotion channels and derives the label.
    pub fn new(obs: PedestrianObservation, theta: f64) -> Result<Self> {
        let cap = MAX_SPEED_FACTOR * obs.params.preferred_speed();
        if !obs.current_velocity.is_finite() || obs.current_velocity.length() > cap {
            return Err(Error::validation(
                "current_velocity",
                format!(
                    "speed {:.4} exceeds {MAX_SPEED_FACTOR} x preferred speed ({cap:.4})",
                    obs.current_velocity.length()
                ),
            ));
        }
        if !obs.position.is_finite() || !obs.predicted_velocity.is_finite() {
            return Err(Error::validation("position", "non-finite kinematics"));
        }
        if !(0.0..=1.0).contains(&obs.tracking_confidence) {
            return Err(Error::validation(
                "tracking_confidence",
                format!("{} not in [0, 1]", obs.tracking_confidence),
            ));
        }
        let fused = crate::emotion::fuse_emotions(
            &obs.emotion_trajectory,
            obs.emotion_face.as_ref(),
            obs.tracking_confidence,
        )?;
        let label = label_emotion(&fused.emotion, theta)?;
        Ok(Self {
            id: obs.id,
            position: obs.position,
            current_velocity: obs.current_velocity,
            predicted_velocity: obs.predicted_velocity,
            params: obs.params,
            emotion_trajectory: obs.emotion_trajectory,
            emotion_face: obs.emotion_face,
            emotion_joint: fused.emotion,
            label,
            tracking_confidence: obs.tracking_confidence,
        })
    }

    pub fn emotion_trajectory(&self) -> EmotionVector {
        self.emotion_trajectory
    }

    pub fn emotion_face(&self) -> Option<EmotionVector> {
        self.emotion_face
    }

    pub fn emotion_joint(&self) -> EmotionVector {
        self.emotion_joint
    }

    pub fn label(&self) -> EmotionLabel {
        self.label
    }

    pub fn tracking_confidence(&self) -> f64 {
        self.tracking_confidence
    }

    pub fn radius(&self) -> f64 {
        self.params.radius()
    }
}

/// Kinematic state and limits of the robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub position: Vec2,
    pub current_velocity: Vec2,
    pub preferred_velocity: Vec2,
    pub max_speed: f64,
    pub max_accel: f64,
    pub radius: f64,
    pub goal: Vec2,
}

impl RobotState {
    pub fn new(position: Vec2, goal: Vec2, max_speed: f64, max_accel: f64, radius: f64) -> Result<Self> {
        for (field, v) in [("max_speed", max_speed), ("max_accel", max_accel), ("radius", radius)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("robot.{field}"), format!("{v} must be positive")));
            }
        }
        if !position.is_finite() || !goal.is_finite() {
            return Err(Error::validation("robot.position", "non-finite coordinates"));
        }
        Ok(Self {
            position,
            current_velocity: Vec2::ZERO,
            preferred_velocity: Vec2::ZERO,
            max_speed,
            max_accel,
            radius,
            goal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(h: f64, a: f64, s: f64) -> EmotionVector {
        EmotionVector::new(h, a, s).unwrap()
    }

    #[test]
    fn labels_match_worked_examples() {
        let t = DEFAULT_THETA;
        assert_eq!(label_emotion(&ev(0.8, 0.2, 0.1), t).unwrap(), EmotionLabel::Happy);
        assert_eq!(label_emotion(&ev(0.5, 0.5, 0.5), t).unwrap(), EmotionLabel::Neutral);
        assert_eq!(label_emotion(&ev(0.3, 0.7, 0.2), t).unwrap(), EmotionLabel::Angry);
        assert_eq!(label_emotion(&ev(0.0, 0.54, 0.1), t).unwrap(), EmotionLabel::Neutral);
    }

    #[test]
    fn ties_above_threshold_are_neutral() {
        assert_eq!(label_emotion(&ev(0.9, 0.9, 0.1), 0.55).unwrap(), EmotionLabel::Neutral);
        assert_eq!(label_emotion(&ev(0.1, 0.8, 0.8), 0.55).unwrap(), EmotionLabel::Neutral);
    }

    #[test]
    fn theta_outside_open_unit_interval_is_rejected() {
        for theta in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                label_emotion(&ev(0.9, 0.0, 0.0), theta),
                Err(Error::Validation { .. })
            ));
        }
    }

    #[test]
    fn emotion_components_are_clamped() {
        let e = ev(-0.35, 1.4, 0.6);
        assert_eq!(e.to_array(), [0.0, 1.0, 0.6]);
        assert!(EmotionVector::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn proxemic_rows_in_meters() {
        let happy = proxemic_profile(EmotionLabel::Happy);
        assert!((happy.comfort_distance() - 0.9004).abs() < 1e-12);
        assert!((happy.reachability_distance() - 1.2738).abs() < 1e-12);
        let sad = proxemic_profile(EmotionLabel::Sad);
        assert!((sad.comfort_distance() - 1.1271).abs() < 1e-12);
        assert!((sad.reachability_distance() - 1.4897).abs() < 1e-12);
        let neutral = proxemic_profile(EmotionLabel::Neutral);
        assert!((neutral.comfort_distance() - 0.9203).abs() < 1e-12);
        assert!((neutral.reachability_distance() - 1.3609).abs() < 1e-12);
    }

    #[test]
    fn comfort_distances_are_ordered() {
        let c = |l| proxemic_profile(l).comfort_distance();
        assert!(c(EmotionLabel::Sad) > c(EmotionLabel::Angry));
        assert!(c(EmotionLabel::Angry) > c(EmotionLabel::Neutral));
        assert!(c(EmotionLabel::Neutral) > c(EmotionLabel::Happy));
        for l in EmotionLabel::ALL {
            let p = proxemic_profile(l);
            assert!(p.comfort_distance() < p.reachability_distance());
        }
    }

    #[test]
    fn motion_params_validate_range() {
        assert!(MotionParams::new(1.25, 0.61, 1.39).is_ok());
        let err = MotionParams::new(1.25, -0.3, 1.39).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
        assert!(MotionParams::new(1.25, 0.61, 5.0).is_err());
        // 10% margin around the observed range
        assert!(MotionParams::new(0.082, 0.28, 0.85).is_ok());
        assert!(MotionParams::new(0.08, 0.61, 1.39).is_err());
    }

    #[test]
    fn pedestrian_speed_sanity_bound() {
        let obs = PedestrianObservation {
            id: "p".into(),
            position: Vec2::ZERO,
            current_velocity: Vec2::new(3.0, 0.0),
            predicted_velocity: Vec2::ZERO,
            params: MotionParams::average(),
            emotion_trajectory: ev(0.0, 0.2, 0.6),
            emotion_face: None,
            tracking_confidence: 1.0,
        };
        assert!(PedestrianState::new(obs.clone(), 0.55).is_err());
        let ok = PedestrianObservation {
            current_velocity: Vec2::new(1.0, 0.0),
            ..obs
        };
        let state = PedestrianState::new(ok, 0.55).unwrap();
        assert_eq!(state.label(), EmotionLabel::Sad);
        assert_eq!(state.emotion_joint(), state.emotion_trajectory());
    }
}
