//! Online recovery of pedestrian motion parameters from noisy positions.
//!
//! Each pedestrian gets an ensemble Kalman filter over the augmented state
//! `(x, y, vx, vy, planning_horizon, radius, preferred_speed)`. Members are
//! propagated through the crowd simulator's velocity rule, so parameters are
//! learned through their effect on observed motion. Parameters follow a small
//! random walk to keep the ensemble responsive. Noise levels are periodically
//! re-estimated by EM on a constant-velocity model of the recent window.

pub mod em;
mod enkf;
mod model;
mod timeline;

pub use em::{EmConfig, EmReport};
pub use model::{ConstantVelocity, CrowdModel, GoalHint, MotionModel};
pub use timeline::{estimate_timeline, TimelineRow};

use std::collections::VecDeque;

use nalgebra::{Matrix2, Matrix4, SVector, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::EstimatorConfig;
use crate::domain::{param_range, MotionParams, PedestrianId, PARAM_MAX, PARAM_MIN, VALID_RANGE_MARGIN};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::sim::CrowdState;

pub const STATE_DIM: usize = 7;

/// Augmented state `(x, y, vx, vy, planning_horizon, radius, preferred_speed)`.
pub type State = SVector<f64, STATE_DIM>;

/// Spread below which the ensemble counts as collapsed.
const COLLAPSE_SPREAD: f64 = 1e-9;

/// Re-inflation spread of each parameter, as a fraction of its range.
const REINFLATION: f64 = 0.05;

/// Time-ordered position samples of one pedestrian.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    id: PedestrianId,
    samples: Vec<(f64, Vec2)>,
}

impl ObservationWindow {
    pub fn new(id: PedestrianId, samples: Vec<(f64, Vec2)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::validation(
                "window",
                format!("{} needs at least 2 samples, got {}", id, samples.len()),
            ));
        }
        for (t, p) in &samples {
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::validation("window", format!("{id}: non-finite sample")));
            }
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::validation(
                "window",
                format!("{id}: time {} does not follow {}", w[1].0, w[0].0),
            ));
        }
        Ok(Self { id, samples })
    }

    pub fn id(&self) -> &PedestrianId {
        &self.id
    }

    pub fn samples(&self) -> &[(f64, Vec2)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(times, xs, ys)`.
    pub fn columns(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let times = self.samples.iter().map(|s| s.0).collect();
        let xs = self.samples.iter().map(|s| s.1.x).collect();
        let ys = self.samples.iter().map(|s| s.1.y).collect();
        (times, xs, ys)
    }
}

/// Process covariance of `(x, y, vx, vy)` under white acceleration of intensity `q`.
fn kinematic_process_cov(q: f64, dt: f64) -> Matrix4<f64> {
    let a = q * dt.powi(3) / 3.0;
    let b = q * dt.powi(2) / 2.0;
    let c = q * dt;
    Matrix4::new(
        a, 0.0, b, 0.0, //
        0.0, a, 0.0, b, //
        b, 0.0, c, 0.0, //
        0.0, b, 0.0, c,
    )
}

fn param_scale() -> [f64; 3] {
    [0, 1, 2].map(|i| PARAM_MAX[i] - PARAM_MIN[i])
}

/// Ensemble and noise model of one pedestrian's estimator.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    members: Vec<State>,
    obs_var: f64,
    process_var: f64,
    dt: f64,
    param_drift: f64,
    /// Analysis steps performed.
    pub updates: usize,
    /// Noise adaptations performed.
    pub em_runs: usize,
    /// Times the ensemble had collapsed and was re-inflated.
    pub reinflations: usize,
    /// The last update re-inflated a collapsed ensemble.
    pub collapse_flag: bool,
    /// The last adaptation saw a window without motion and floored the noise.
    pub degenerate_flag: bool,
    rng: ChaCha8Rng,
}

impl EstimatorState {
    /// Ensemble around a first observation, with parameters drawn uniformly
    /// over the observed range and zero mean velocity.
    pub fn new(first_obs: Vec2, dt: f64, config: &EstimatorConfig, seed: u64) -> Result<Self> {
        if !first_obs.is_finite() {
            return Err(Error::validation("observation", "non-finite position"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos_sd = config.initial_obs_var.sqrt();
        let members = (0..config.ensemble_size)
            .map(|_| {
                let mut x = State::zeros();
                x[0] = first_obs.x + pos_sd * rng.sample::<f64, _>(StandardNormal);
                x[1] = first_obs.y + pos_sd * rng.sample::<f64, _>(StandardNormal);
                x[2] = 0.5 * rng.sample::<f64, _>(StandardNormal);
                x[3] = 0.5 * rng.sample::<f64, _>(StandardNormal);
                for i in 0..3 {
                    x[4 + i] = rng.random_range(PARAM_MIN[i]..=PARAM_MAX[i]);
                }
                x
            })
            .collect();
        Self::from_members(members, config.initial_obs_var, config.initial_process_var, dt, config.param_drift, rng)
    }

    /// Estimator over an explicit ensemble.
    pub fn from_members(
        members: Vec<State>,
        obs_var: f64,
        process_var: f64,
        dt: f64,
        param_drift: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::validation("estimator.ensemble_size", "must be at least 2"));
        }
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::validation("estimator.dt", format!("{dt} must be positive")));
        }
        for (field, v) in [("obs_var", obs_var), ("process_var", process_var), ("param_drift", param_drift)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("estimator.{field}"), format!("{v} must be non-negative")));
            }
        }
        Ok(Self {
            members,
            obs_var,
            process_var,
            dt,
            param_drift,
            updates: 0,
            em_runs: 0,
            reinflations: 0,
            collapse_flag: false,
            degenerate_flag: false,
            rng,
        })
    }

    pub fn members(&self) -> &[State] {
        &self.members
    }

    pub fn mean(&self) -> State {
        enkf::mean(&self.members)
    }

    pub fn spread(&self) -> State {
        enkf::spread(&self.members)
    }

    pub fn position(&self) -> Vec2 {
        let m = self.mean();
        Vec2::new(m[0], m[1])
    }

    pub fn velocity(&self) -> Vec2 {
        let m = self.mean();
        Vec2::new(m[2], m[3])
    }

    /// Parameter estimate; always inside the valid range.
    pub fn params(&self) -> MotionParams {
        let m = self.mean();
        MotionParams::saturating([m[4], m[5], m[6]])
    }

    pub fn obs_cov(&self) -> Matrix2<f64> {
        Matrix2::identity() * self.obs_var
    }

    pub fn process_cov(&self) -> Matrix4<f64> {
        kinematic_process_cov(self.process_var, self.dt)
    }

    pub fn obs_var(&self) -> f64 {
        self.obs_var
    }

    pub fn process_var(&self) -> f64 {
        self.process_var
    }

    fn add_process_noise(&mut self) {
        let cov = self.process_cov();
        let chol = cov.cholesky().map(|c| c.l());
        let scale = param_scale().map(|s| s * self.param_drift);
        for x in &mut self.members {
            if let Some(l) = &chol {
                let z = Vector4::from_fn(|_, _| self.rng.sample::<f64, _>(StandardNormal));
                let n = l * z;
                for i in 0..4 {
                    x[i] += n[i];
                }
            }
            for i in 0..3 {
                x[4 + i] += scale[i] * self.rng.sample::<f64, _>(StandardNormal);
            }
        }
    }

    fn clip_params(&mut self) {
        let (lo, hi) = param_range(VALID_RANGE_MARGIN);
        for x in &mut self.members {
            for i in 0..3 {
                x[4 + i] = x[4 + i].clamp(lo[i], hi[i]);
            }
        }
    }

    fn reinflate_if_collapsed(&mut self) -> bool {
        let s = self.spread();
        if (0..STATE_DIM).all(|i| s[i] >= COLLAPSE_SPREAD) {
            return false;
        }
        let pos_sd = self.obs_var.sqrt().max(1e-3);
        let scale = param_scale().map(|s| s * REINFLATION);
        for x in &mut self.members {
            x[0] += pos_sd * self.rng.sample::<f64, _>(StandardNormal);
            x[1] += pos_sd * self.rng.sample::<f64, _>(StandardNormal);
            x[2] += pos_sd * self.rng.sample::<f64, _>(StandardNormal);
            x[3] += pos_sd * self.rng.sample::<f64, _>(StandardNormal);
            for i in 0..3 {
                x[4 + i] += scale[i] * self.rng.sample::<f64, _>(StandardNormal);
            }
        }
        true
    }
}

/// Result of one analysis step.
#[derive(Debug, Clone)]
pub struct Update {
    pub state: EstimatorState,
    /// Observation minus predicted mean position.
    pub innovation: Vec2,
}

/// Propagates every member through `model`, adds process noise, and
/// corrects the ensemble against `obs`.
pub fn enkf_update<M: MotionModel + ?Sized>(mut state: EstimatorState, obs: Vec2, model: &M) -> Result<Update> {
    if !obs.is_finite() {
        return Err(Error::validation("observation", "non-finite position"));
    }
    for x in &mut state.members {
        model.propagate(x);
    }
    state.add_process_noise();
    let obs_cov = state.obs_cov();
    let innovation = enkf::analysis(&mut state.members, Vector2::new(obs.x, obs.y), &obs_cov, &mut state.rng);
    state.clip_params();
    state.collapse_flag = state.reinflate_if_collapsed();
    if state.collapse_flag {
        state.reinflations += 1;
        state.clip_params();
        log::warn!("ensemble collapsed after {} updates; re-inflated", state.updates + 1);
    }
    state.updates += 1;
    Ok(Update {
        state,
        innovation: Vec2::new(innovation[0], innovation[1]),
    })
}

/// Re-estimates observation and process noise from the window by EM.
pub fn em_adapt(mut state: EstimatorState, window: &ObservationWindow) -> Result<(EstimatorState, EmReport)> {
    if window.len() < 5 {
        return Err(Error::validation(
            "window",
            format!("{} has {} samples, EM needs at least 5", window.id(), window.len()),
        ));
    }
    let report = em::estimate_noise(window, state.obs_var, state.process_var, &EmConfig::default());
    state.obs_var = report.obs_var;
    state.process_var = report.process_var;
    state.degenerate_flag = report.degenerate;
    state.em_runs += 1;
    if report.degenerate {
        log::warn!("{}: window without motion, noise floored", window.id());
    }
    Ok((state, report))
}

/// Streaming estimator for one pedestrian: keeps the observation window,
/// runs the ensemble update per sample and EM every few samples.
#[derive(Debug, Clone)]
pub struct PedestrianEstimator {
    id: PedestrianId,
    config: EstimatorConfig,
    goal: GoalHint,
    seed: u64,
    state: Option<EstimatorState>,
    window: VecDeque<(f64, Vec2)>,
    innovations: VecDeque<f64>,
    last_em: Option<EmReport>,
}

impl PedestrianEstimator {
    pub fn new(id: PedestrianId, goal: GoalHint, config: EstimatorConfig, seed: u64) -> Self {
        Self {
            id,
            config,
            goal,
            seed,
            state: None,
            window: VecDeque::with_capacity(config.window),
            innovations: VecDeque::with_capacity(config.window),
            last_em: None,
        }
    }

    pub fn id(&self) -> &PedestrianId {
        &self.id
    }

    pub fn state(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }

    pub fn last_em(&self) -> Option<&EmReport> {
        self.last_em.as_ref()
    }

    /// Parameter estimate; the average parameters before any observation.
    pub fn params(&self) -> MotionParams {
        self.state.as_ref().map_or_else(MotionParams::average, EstimatorState::params)
    }

    /// Tracking confidence `1 / (1 + mean innovation magnitude)` over the window.
    pub fn tracking_confidence(&self) -> f64 {
        if self.innovations.is_empty() {
            return 1.0;
        }
        let mean = self.innovations.iter().sum::<f64>() / self.innovations.len() as f64;
        1.0 / (1.0 + mean)
    }

    pub fn window(&self) -> Result<ObservationWindow> {
        ObservationWindow::new(self.id.clone(), self.window.iter().copied().collect())
    }

    /// Incorporates the position observed at `time`. `crowd` is the scene
    /// the pedestrian moved through since the previous observation, and
    /// `skip` is the pedestrian's own index in it, if present.
    pub fn observe(&mut self, time: f64, position: Vec2, crowd: &CrowdState, skip: Option<usize>) -> Result<()> {
        if let Some(&(last, _)) = self.window.back() {
            if time <= last {
                return Err(Error::Stream(format!(
                    "{}: observation at {time} does not follow {last}",
                    self.id
                )));
            }
        }
        if self.window.len() == self.config.window {
            self.window.pop_front();
        }
        self.window.push_back((time, position));

        let Some(state) = self.state.take() else {
            self.state = Some(EstimatorState::new(position, crowd.dt, &self.config, self.seed)?);
            return Ok(());
        };
        let model = CrowdModel {
            crowd,
            skip,
            goal: self.goal,
        };
        let Update { state, innovation } = enkf_update(state, position, &model)?;
        if self.innovations.len() == self.config.window {
            self.innovations.pop_front();
        }
        self.innovations.push_back(innovation.length());

        let state = if state.updates % self.config.em_interval == 0 && self.window.len() >= 5 {
            let (state, report) = em_adapt(state, &self.window()?)?;
            self.last_em = Some(report);
            state
        } else {
            state
        };
        self.state = Some(state);
        Ok(())
    }
}
