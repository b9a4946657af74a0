//! Tunables shared by estimation, prediction and navigation.

use crate::domain::{ProxemicTable, DEFAULT_THETA};
use crate::emotion::TemMatrix;
use crate::error::{Error, Result};

/// Robot planner tunables.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Angular resolution of the control-sample grid.
    pub grid_angles: usize,
    /// Radial resolution of the control-sample grid.
    pub grid_speeds: usize,
    /// Cost per meter of reachability penetration.
    pub lambda: f64,
    /// Seconds of predicted motion over which proxemic constraints apply.
    pub horizon: f64,
    /// Seconds of look-ahead for static obstacles.
    pub obstacle_horizon: f64,
    /// Added to every hard keep-out radius (m); absorbs one-step prediction error.
    pub safety_buffer: f64,
    pub proxemics: ProxemicTable,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            grid_angles: 36,
            grid_speeds: 8,
            lambda: 2.0,
            horizon: 3.0,
            obstacle_horizon: 1.0,
            safety_buffer: 0.1,
            proxemics: ProxemicTable::default(),
        }
    }
}

/// Parameter-estimator tunables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub ensemble_size: usize,
    /// Observation samples kept for noise adaptation.
    pub window: usize,
    /// Updates between noise adaptations.
    pub em_interval: usize,
    /// Per-step parameter random walk, as a fraction of each parameter's range.
    pub param_drift: f64,
    /// Observation variance (m²) before the first adaptation.
    pub initial_obs_var: f64,
    /// Process intensity (m²/s³) before the first adaptation.
    pub initial_process_var: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 100,
            window: 30,
            em_interval: 10,
            param_drift: 0.01,
            initial_obs_var: 0.0025,
            initial_process_var: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub theta: f64,
    /// Relative emotion perturbation used to build parameter bounds.
    pub gamma: f64,
    pub tem: TemMatrix,
    /// Seconds of path prediction.
    pub prediction_horizon: f64,
    pub planner: PlannerConfig,
    pub estimator: EstimatorConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            gamma: 0.05,
            tem: TemMatrix::default(),
            prediction_horizon: 3.0,
            planner: PlannerConfig::default(),
            estimator: EstimatorConfig::default(),
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::validation("planner.theta", format!("{} not in (0, 1)", self.theta)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::validation("planner.gamma", format!("{} not in [0, 1)", self.gamma)));
        }
        if !(self.prediction_horizon > 0.0 && self.prediction_horizon <= 10.0) {
            return Err(Error::validation(
                "planner.prediction_horizon",
                format!("{} not in (0, 10]", self.prediction_horizon),
            ));
        }
        let p = &self.planner;
        if p.grid_angles < 4 || p.grid_speeds < 1 {
            return Err(Error::validation(
                "planner.grid",
                format!("{} angles x {} speeds is too coarse", p.grid_angles, p.grid_speeds),
            ));
        }
        if !(p.lambda >= 0.0 && p.lambda.is_finite()) {
            return Err(Error::validation("planner.lambda", format!("{} must be non-negative", p.lambda)));
        }
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(Error::validation("planner.horizon", format!("{} must be positive", p.horizon)));
        }
        if !(p.obstacle_horizon > 0.0 && p.obstacle_horizon.is_finite()) {
            return Err(Error::validation(
                "planner.obstacle_horizon",
                format!("{} must be positive", p.obstacle_horizon),
            ));
        }
        if !(p.safety_buffer >= 0.0 && p.safety_buffer.is_finite()) {
            return Err(Error::validation(
                "planner.safety_buffer",
                format!("{} must be non-negative", p.safety_buffer),
            ));
        }
        let e = &self.estimator;
        if e.ensemble_size < 2 {
            return Err(Error::validation("estimator.ensemble_size", "must be at least 2"));
        }
        if e.window < 5 {
            return Err(Error::validation("estimator.window", "must be at least 5"));
        }
        if e.em_interval == 0 {
            return Err(Error::validation("estimator.em_interval", "must be at least 1"));
        }
        for (field, v) in [
            ("estimator.param_drift", e.param_drift),
            ("estimator.initial_obs_var", e.initial_obs_var),
            ("estimator.initial_process_var", e.initial_process_var),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(field, format!("{v} must be non-negative")));
            }
        }
        Ok(())
    }
}
