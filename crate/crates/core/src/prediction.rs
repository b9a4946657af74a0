//! Emotion-consistent parameter bounds and path prediction by rollout.

use crate::domain::{
    label_emotion, EmotionLabel, EmotionVector, MotionParams, PedestrianId, PedestrianState, PARAM_NAMES,
};
use crate::emotion::{tem_forward, RawEmotion, TemMatrix};
use crate::error::{Error, Result};
use crate::geometry::{Segment, Vec2};
use crate::sim::{Agent, CrowdState, Goal};

/// Parameter box around an emotion, built by perturbing the emotion and
/// mapping back through the inverse emotion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub lower: MotionParams,
    pub upper: MotionParams,
    pub label: EmotionLabel,
    pub gamma: f64,
    /// Inverse image of the lowered emotion, before reordering and clipping.
    pub lower_image: [f64; 3],
    /// Inverse image of the raised emotion, before reordering and clipping.
    pub upper_image: [f64; 3],
}

/// Per-component scale factors `(lowered, raised)` for a label.
fn perturbation(label: EmotionLabel, gamma: f64) -> ([f64; 3], [f64; 3]) {
    let mut up = [1.0 + gamma / 3.0; 3];
    let mut down = [1.0 - gamma / 3.0; 3];
    if let Some(i) = label.component() {
        up[i] = 1.0 + gamma;
        down[i] = 1.0 - gamma;
    }
    (down, up)
}

/// Bounds for a pedestrian whose raw emotion is `raw` and label is `label`.
///
/// The labeled component is scaled by `1 ± gamma` and the others by
/// `1 ± gamma/3` (all three for Neutral). Both perturbed emotions are mapped
/// through the inverse model, ordered componentwise and clipped into the
/// valid parameter range.
pub fn compute_bounds(raw: &RawEmotion, label: EmotionLabel, gamma: f64, m: &TemMatrix) -> Result<ParamBounds> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::validation("gamma", format!("{gamma} not in [0, 1)")));
    }
    let (down, up) = perturbation(label, gamma);
    let e_lb: [f64; 3] = std::array::from_fn(|i| raw.0[i] * down[i]);
    let e_ub: [f64; 3] = std::array::from_fn(|i| raw.0[i] * up[i]);
    let lower_image = m.apply_inverse(e_lb);
    let upper_image = m.apply_inverse(e_ub);
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        if !lower_image[i].is_finite() || !upper_image[i].is_finite() {
            return Err(Error::OutOfDomain(format!("{name} bound is not finite")));
        }
    }
    let lo: [f64; 3] = std::array::from_fn(|i| lower_image[i].min(upper_image[i]));
    let hi: [f64; 3] = std::array::from_fn(|i| lower_image[i].max(upper_image[i]));
    Ok(ParamBounds {
        lower: MotionParams::saturating(lo),
        upper: MotionParams::saturating(hi),
        label,
        gamma,
        lower_image,
        upper_image,
    })
}

/// Componentwise clamp of an estimate into the bounds.
pub fn clamp_params(p: &MotionParams, bounds: &ParamBounds) -> MotionParams {
    let v = p.to_array();
    let lo = bounds.lower.to_array();
    let hi = bounds.upper.to_array();
    MotionParams::saturating(std::array::from_fn(|i| v[i].clamp(lo[i], hi[i])))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reestimate {
    pub raw: RawEmotion,
    pub emotion: EmotionVector,
    pub label: EmotionLabel,
}

/// Emotion implied by clamped parameters.
pub fn reestimate_emotion(p: &MotionParams, m: &TemMatrix, theta: f64) -> Result<Reestimate> {
    let (raw, emotion) = tem_forward(p, m);
    let label = label_emotion(&emotion, theta)?;
    Ok(Reestimate { raw, emotion, label })
}

/// Emotion-consistent parameters: estimate, bound around its own emotion,
/// clamp, re-derive the emotion.
pub fn regularize(p: &MotionParams, m: &TemMatrix, gamma: f64, theta: f64) -> Result<(MotionParams, Reestimate)> {
    let before = reestimate_emotion(p, m, theta)?;
    let bounds = compute_bounds(&before.raw, before.label, gamma, m)?;
    let clamped = clamp_params(p, &bounds);
    Ok((clamped, reestimate_emotion(&clamped, m, theta)?))
}

/// Future positions of one pedestrian; times are relative to the prediction instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedPath {
    pub id: PedestrianId,
    pub horizon: f64,
    pub samples: Vec<(f64, Vec2)>,
}

impl PredictedPath {
    /// Position at relative time `t`, interpolated between samples and held
    /// at the last sample beyond the horizon.
    pub fn position_at(&self, t: f64) -> Vec2 {
        let (t0, p0) = self.samples[0];
        if t <= t0 {
            return p0;
        }
        for w in self.samples.windows(2) {
            let (ta, pa) = w[0];
            let (tb, pb) = w[1];
            if t <= tb {
                return pa.lerp(pb, (t - ta) / (tb - ta));
            }
        }
        self.samples[self.samples.len() - 1].1
    }
}

/// How the destination of a pedestrian is guessed during prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoalEstimate {
    /// Keep heading along the predicted velocity; the target is re-anchored
    /// at `position + predicted_velocity * horizon` every step.
    Extrapolate,
    Fixed(Vec2),
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(0.0..=10.0).contains(&horizon) {
        return Err(Error::validation("horizon", format!("{horizon} not in [0, 10]")));
    }
    Ok(())
}

fn agent_for(ped: &PedestrianState, goal: GoalEstimate, horizon: f64) -> Agent {
    let goal = match goal {
        GoalEstimate::Extrapolate => Goal::Offset(ped.predicted_velocity * horizon),
        GoalEstimate::Fixed(g) => Goal::Point(g),
    };
    Agent {
        id: ped.id.clone(),
        position: ped.position,
        velocity: ped.current_velocity,
        goal,
        params: ped.params,
    }
}

/// Advances `crowd` over `horizon` seconds, recording every agent.
pub fn rollout(mut crowd: CrowdState, horizon: f64) -> Result<Vec<PredictedPath>> {
    check_horizon(horizon)?;
    let steps = (horizon / crowd.dt - 1e-9).ceil().max(0.0) as usize;
    let mut paths: Vec<PredictedPath> = crowd
        .agents
        .iter()
        .map(|a| PredictedPath {
            id: a.id.clone(),
            horizon,
            samples: Vec::with_capacity(steps + 1),
        })
        .collect();
    for k in 0..=steps {
        if k > 0 {
            crowd.advance();
        }
        for (path, agent) in paths.iter_mut().zip(&crowd.agents) {
            path.samples.push((k as f64 * crowd.dt, agent.position));
        }
    }
    Ok(paths)
}

/// Predicts every pedestrian jointly: all are rolled out simultaneously with
/// their own parameters and guessed goals.
pub fn predict_all(
    peds: &[(PedestrianState, GoalEstimate)],
    obstacles: &[Segment],
    dt: f64,
    horizon: f64,
) -> Result<Vec<PredictedPath>> {
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(Error::validation("dt", format!("{dt} not in (0, 0.5]")));
    }
    let crowd = CrowdState {
        step: 0,
        time: 0.0,
        dt,
        agents: peds.iter().map(|(p, g)| agent_for(p, *g, horizon)).collect(),
        obstacles: obstacles.to_vec(),
    };
    rollout(crowd, horizon)
}

/// Predicts one pedestrian inside the environment snapshot `env`. The
/// pedestrian replaces the agent with the same id, if any; every other
/// agent keeps its own parameters and goal.
pub fn predict_path(ped: &PedestrianState, env: &CrowdState, horizon: f64) -> Result<PredictedPath> {
    let mut crowd = env.clone();
    let agent = agent_for(ped, GoalEstimate::Extrapolate, horizon);
    let index = match crowd.agents.iter().position(|a| a.id == ped.id) {
        Some(i) => {
            crowd.agents[i] = agent;
            i
        }
        None => {
            crowd.agents.push(agent);
            crowd.agents.len() - 1
        }
    };
    Ok(rollout(crowd, horizon)?.swap_remove(index))
}
