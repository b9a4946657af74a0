//! Trajectory-based emotion model (a linear map from motion parameters to
//! emotion intensities), its inverse, and face/trajectory fusion.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::domain::{
    param_range, EmotionVector, MotionParams, DOMAIN_RANGE_MARGIN, PARAM_NAMES,
};
use crate::error::{Error, Result};

/// Regression coefficients; rows (happy, angry, sad), columns
/// (planning horizon, radius, preferred speed).
pub const DEFAULT_TEM: [[f64; 3]; 3] = [
    [-0.15, 0.00, -0.12],
    [0.24, -0.61, 0.20],
    [-0.02, 0.79, 0.11],
];

const SINGULAR_DET: f64 = 1e-9;

/// Unclamped output of the linear map, ordered (happy, angry, sad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawEmotion(pub [f64; 3]);

impl RawEmotion {
    pub fn clamped(&self) -> EmotionVector {
        EmotionVector::from_array(self.0).unwrap_or_default()
    }
}

/// Unvalidated parameter 3-vector, as produced by linear inverses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub [f64; 3]);

impl ParamVector {
    pub fn into_params(self) -> Result<MotionParams> {
        MotionParams::from_array(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct TemMatrix {
    forward: Matrix3<f64>,
    inverse: Matrix3<f64>,
}

impl TemMatrix {
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("emotion matrix has non-finite entries".into()));
        }
        let forward = Matrix3::from_fn(|r, c| rows[r][c]);
        let det = forward.determinant();
        if det.abs() <= SINGULAR_DET {
            return Err(Error::Config(format!(
                "emotion matrix is singular (det = {det:e})"
            )));
        }
        let inverse = forward
            .try_inverse()
            .ok_or_else(|| Error::Config("emotion matrix is not invertible".into()))?;
        Ok(Self { forward, inverse })
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.forward;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn coefficient(&self, emotion: usize, param: usize) -> f64 {
        self.forward[(emotion, param)]
    }

    pub fn determinant(&self) -> f64 {
        self.forward.determinant()
    }

    /// `M·p` for an arbitrary 3-vector; no validation.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.forward * Vector3::from(p);
        [v[0], v[1], v[2]]
    }

    /// `M⁻¹·e` for an arbitrary 3-vector; no validation.
    pub fn apply_inverse(&self, e: [f64; 3]) -> [f64; 3] {
        let v = self.inverse * Vector3::from(e);
        [v[0], v[1], v[2]]
    }
}

impl Default for TemMatrix {
    fn default() -> Self {
        Self::new(DEFAULT_TEM).expect("default coefficients are invertible")
    }
}

impl TryFrom<[[f64; 3]; 3]> for TemMatrix {
    type Error = Error;
    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<TemMatrix> for [[f64; 3]; 3] {
    fn from(m: TemMatrix) -> Self {
        m.rows()
    }
}

pub fn tem_forward_raw(params: &MotionParams, m: &TemMatrix) -> RawEmotion {
    RawEmotion(m.apply(params.to_array()))
}

/// Emotion vector of a pedestrian with the given motion parameters, clamped
/// into `[0, 1]`. The raw linear value is returned alongside.
pub fn tem_forward(params: &MotionParams, m: &TemMatrix) -> (RawEmotion, EmotionVector) {
    let raw = tem_forward_raw(params, m);
    (raw, raw.clamped())
}

/// Motion parameters whose raw emotion equals `e`.
///
/// Fails when any component is non-positive or outside the observed range
/// widened by 50%.
pub fn tem_inverse(e: &RawEmotion, m: &TemMatrix) -> Result<ParamVector> {
    let p = m.apply_inverse(e.0);
    let (lo, hi) = param_range(DOMAIN_RANGE_MARGIN);
    for i in 0..3 {
        if !p[i].is_finite() || p[i] <= 0.0 {
            return Err(Error::OutOfDomain(format!(
                "{} = {:.6} is non-positive",
                PARAM_NAMES[i], p[i]
            )));
        }
        if p[i] < lo[i] || p[i] > hi[i] {
            return Err(Error::OutOfDomain(format!(
                "{} = {:.6} outside [{:.4}, {:.4}]",
                PARAM_NAMES[i], p[i], lo[i], hi[i]
            )));
        }
    }
    Ok(ParamVector(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedEmotion {
    pub emotion: EmotionVector,
    /// Gate weight applied to the face channel, 0 or 1.
    pub face_weight: f64,
    /// Set when both channels carried zero weight and the trajectory
    /// emotion was passed through.
    pub low_confidence: bool,
}

/// Reliability-weighted average of trajectory and face emotion. The face
/// channel is used only when its strongest component reaches 0.5.
pub fn fuse_emotions(
    trajectory: &EmotionVector,
    face: Option<&EmotionVector>,
    alpha: f64,
) -> Result<FusedEmotion> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::validation("alpha", format!("{alpha} not in [0, 1]")));
    }
    let Some(face) = face else {
        return Ok(FusedEmotion {
            emotion: *trajectory,
            face_weight: 0.0,
            low_confidence: false,
        });
    };
    let w = (face.max_component() + 0.5).floor();
    if alpha + w == 0.0 {
        return Ok(FusedEmotion {
            emotion: *trajectory,
            face_weight: 0.0,
            low_confidence: true,
        });
    }
    if w == 0.0 {
        return Ok(FusedEmotion {
            emotion: *trajectory,
            face_weight: 0.0,
            low_confidence: false,
        });
    }
    let t = trajectory.to_array();
    let f = face.to_array();
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = (alpha * t[i] + w * f[i]) / (alpha + w);
    }
    Ok(FusedEmotion {
        emotion: EmotionVector::from_array(out)?,
        face_weight: w,
        low_confidence: false,
    })
}
