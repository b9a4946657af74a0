//! Offline estimation over recorded streams: every trajectory sample yields
//! updated parameters, a regularized emotion and a fused label.

use std::collections::BTreeMap;

use crate::config::Settings;
use crate::domain::{EmotionLabel, EmotionVector, MotionParams, PedestrianId};
use crate::emotion::fuse_emotions;
use crate::error::Result;
use crate::geometry::{Segment, Vec2};
use crate::io::Streams;
use crate::prediction::regularize;
use crate::sim::{Agent, CrowdState, Goal};

use super::{GoalHint, PedestrianEstimator};

/// Estimates for one pedestrian at one trajectory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineRow {
    pub time: f64,
    pub id: PedestrianId,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Regularized parameters.
    pub params: MotionParams,
    pub emotion: EmotionVector,
    pub label: EmotionLabel,
    /// Confidence used in fusion: the stream's value, else one derived from the innovations.
    pub confidence: f64,
    pub face_used: bool,
}

struct Track {
    estimator: PedestrianEstimator,
    position: Vec2,
    velocity: Vec2,
    params: MotionParams,
}

/// Runs one estimator per pedestrian over all samples in time order. Each
/// update sees the latest estimates of everyone else as its crowd.
pub fn estimate_timeline(streams: &Streams, settings: &Settings, obstacles: &[Segment], seed: u64) -> Result<Vec<TimelineRow>> {
    let mut events = Vec::new();
    for (id, stream) in &streams.pedestrians {
        for (k, &(t, p)) in stream.window.samples().iter().enumerate() {
            events.push((t, id, p, stream.faces[k]));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let mut tracks: BTreeMap<&PedestrianId, Track> = BTreeMap::new();
    let mut rows = Vec::with_capacity(events.len());
    for (t, id, p, face) in events {
        let context = CrowdState {
            step: 0,
            time: t,
            dt: streams.dt,
            agents: tracks
                .iter()
                .filter(|(other, _)| **other != id)
                .map(|(other, tr)| Agent {
                    id: (*other).clone(),
                    position: tr.position,
                    velocity: tr.velocity,
                    goal: Goal::Offset(tr.velocity * settings.prediction_horizon),
                    params: tr.params,
                })
                .collect(),
            obstacles: obstacles.to_vec(),
        };
        let index = tracks.len() as u64;
        let track = tracks.entry(id).or_insert_with(|| Track {
            estimator: PedestrianEstimator::new(
                id.clone(),
                GoalHint::FromVelocity,
                settings.estimator,
                seed.wrapping_add(index + 1),
            ),
            position: p,
            velocity: Vec2::ZERO,
            params: MotionParams::average(),
        });
        track.estimator.observe(t, p, &context, None)?;
        let state = track.estimator.state().expect("estimator initialized by observe");
        let (params, reestimate) = regularize(&track.estimator.params(), &settings.tem, settings.gamma, settings.theta)?;
        track.position = state.position();
        track.velocity = state.velocity();
        track.params = params;

        let confidence = face
            .and_then(|f| f.confidence)
            .unwrap_or_else(|| track.estimator.tracking_confidence());
        let fused = fuse_emotions(&reestimate.emotion, face.as_ref().map(|f| &f.emotion), confidence)?;
        rows.push(TimelineRow {
            time: t,
            id: id.clone(),
            position: track.position,
            velocity: track.velocity,
            params,
            emotion: fused.emotion,
            label: fused.emotion.label(settings.theta)?,
            confidence,
            face_used: fused.face_weight > 0.0,
        });
    }
    Ok(rows)
}
