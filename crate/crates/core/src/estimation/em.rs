//! Expectation-maximization of observation and process noise intensities
//! for a constant-velocity model, run in batch over an observation window.
//!
//! Each axis is an independent `(position, velocity)` system sharing two
//! scalars: the observation variance `r` (m²) and the white-acceleration
//! intensity `q` (m²/s³). The E-step is a Kalman filter followed by a
//! Rauch-Tung-Striebel smoother; the M-step has a closed form for both.

use nalgebra::{Matrix2, Vector2};

use super::ObservationWindow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once the log-likelihood improves by less than this.
    pub tolerance: f64,
    /// Lower bound for both variances.
    pub floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            tolerance: 1e-6,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmReport {
    pub obs_var: f64,
    pub process_var: f64,
    /// Log-likelihood of the window before each iteration, plus the final value.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// All positions identical; variances were floored without iterating.
    pub degenerate: bool,
}

const PRIOR_POS_VAR: f64 = 1.0;
const PRIOR_VEL_VAR: f64 = 4.0;

fn transition(dt: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, dt, 0.0, 1.0)
}

fn unit_process(dt: f64) -> Matrix2<f64> {
    Matrix2::new(dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt.powi(2) / 2.0, dt)
}

struct Smoothed {
    log_likelihood: f64,
    mean: Vec<Vector2<f64>>,
    cov: Vec<Matrix2<f64>>,
    /// Cov(x_k, x_{k-1} | all observations), index k (entry 0 unused).
    cross: Vec<Matrix2<f64>>,
}

/// Kalman filter plus RTS smoother on one axis.
fn smooth_axis(times: &[f64], ys: &[f64], r: f64, q: f64) -> Smoothed {
    let n = ys.len();
    let h = Vector2::new(1.0, 0.0);
    let v0 = if n > 1 {
        (ys[1] - ys[0]) / (times[1] - times[0])
    } else {
        0.0
    };
    let mut pred_mean = Vec::with_capacity(n);
    let mut pred_cov = Vec::with_capacity(n);
    let mut filt_mean: Vec<Vector2<f64>> = Vec::with_capacity(n);
    let mut filt_cov: Vec<Matrix2<f64>> = Vec::with_capacity(n);
    let mut ll = 0.0;

    for k in 0..n {
        let (m_pred, p_pred) = if k == 0 {
            (
                Vector2::new(ys[0], v0),
                Matrix2::new(PRIOR_POS_VAR, 0.0, 0.0, PRIOR_VEL_VAR),
            )
        } else {
            let dt = times[k] - times[k - 1];
            let f = transition(dt);
            (f * filt_mean[k - 1], f * filt_cov[k - 1] * f.transpose() + unit_process(dt) * q)
        };
        let s = (h.transpose() * p_pred * h)[0] + r;
        let innovation = ys[k] - m_pred[0];
        let gain = p_pred * h / s;
        ll += -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + innovation * innovation / s);
        filt_mean.push(m_pred + gain * innovation);
        filt_cov.push((Matrix2::identity() - gain * h.transpose()) * p_pred);
        pred_mean.push(m_pred);
        pred_cov.push(p_pred);
    }

    let mut mean = filt_mean.clone();
    let mut cov = filt_cov.clone();
    let mut cross = vec![Matrix2::zeros(); n];
    for k in (0..n.saturating_sub(1)).rev() {
        let dt = times[k + 1] - times[k];
        let f = transition(dt);
        let p_pred_inv = pred_cov[k + 1]
            .try_inverse()
            .unwrap_or_else(Matrix2::identity);
        let c = filt_cov[k] * f.transpose() * p_pred_inv;
        mean[k] = filt_mean[k] + c * (mean[k + 1] - pred_mean[k + 1]);
        cov[k] = filt_cov[k] + c * (cov[k + 1] - pred_cov[k + 1]) * c.transpose();
        cross[k + 1] = cov[k + 1] * c.transpose();
    }

    Smoothed {
        log_likelihood: ll,
        mean,
        cov,
        cross,
    }
}

/// Log-likelihood of the window under `(r, q)`.
pub fn log_likelihood(window: &ObservationWindow, r: f64, q: f64) -> f64 {
    let (times, xs, ys) = window.columns();
    smooth_axis(&times, &xs, r, q).log_likelihood + smooth_axis(&times, &ys, r, q).log_likelihood
}

/// One EM step: the log-likelihood at `(r, q)` and the maximizing `(r', q')`.
fn em_step(times: &[f64], xs: &[f64], ys: &[f64], r: f64, q: f64, floor: f64) -> (f64, f64, f64) {
    let n = times.len();
    let h = Vector2::new(1.0, 0.0);
    let axes = [smooth_axis(times, xs, r, q), smooth_axis(times, ys, r, q)];
    let ll = axes[0].log_likelihood + axes[1].log_likelihood;
    let mut r_sum = 0.0;
    let mut q_sum = 0.0;
    for (axis, obs) in axes.iter().zip([xs, ys]) {
        for ((o, mean), cov) in obs.iter().zip(&axis.mean).zip(&axis.cov) {
            let resid = o - mean[0];
            r_sum += resid * resid + (h.transpose() * cov * h)[0];
        }
        for k in 1..n {
            let dt = times[k] - times[k - 1];
            let f = transition(dt);
            let d = axis.mean[k] - f * axis.mean[k - 1];
            let cross = axis.cross[k];
            let e = d * d.transpose() + axis.cov[k] - cross * f.transpose() - f * cross.transpose()
                + f * axis.cov[k - 1] * f.transpose();
            let q_inv = unit_process(dt).try_inverse().unwrap_or_else(Matrix2::identity);
            q_sum += (q_inv * e).trace();
        }
    }
    let r_next = (r_sum / (2 * n) as f64).max(floor);
    let q_next = (q_sum / (4 * (n - 1)) as f64).max(floor);
    (ll, r_next, q_next)
}

/// Runs EM from `(r0, q0)` until the likelihood gain drops below tolerance.
///
/// Each iteration takes two EM steps and extrapolates along them in
/// log-variance space (squared iterative extrapolation), then takes a
/// stabilizing EM step. The extrapolated point is kept only if it does not
/// lower the likelihood, so the trace is non-decreasing like plain EM while
/// boundary optima (a variance driven to the floor) are reached quickly.
pub fn estimate_noise(window: &ObservationWindow, r0: f64, q0: f64, config: &EmConfig) -> EmReport {
    let (times, xs, ys) = window.columns();
    let first = window.samples()[0].1;
    if window.samples().iter().all(|(_, p)| *p == first) {
        return EmReport {
            obs_var: config.floor,
            process_var: config.floor,
            log_likelihood: Vec::new(),
            iterations: 0,
            converged: true,
            degenerate: true,
        };
    }

    let floor = config.floor;
    let step = |r: f64, q: f64| em_step(&times, &xs, &ys, r, q, floor);
    let mut theta = (r0.max(floor), q0.max(floor));
    let mut ll = step(theta.0, theta.1).0;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let (_, r1, q1) = step(theta.0, theta.1);
        let (_, r2, q2) = step(r1, q1);
        let (ll2, r3, q3) = step(r2, q2);
        // plain EM fallback: the point after two steps
        let mut next = (r2, q2, ll2);

        let u0 = [theta.0.ln(), theta.1.ln()];
        let u1 = [r1.ln(), q1.ln()];
        let u2 = [r2.ln(), q2.ln()];
        let d1 = [u1[0] - u0[0], u1[1] - u0[1]];
        let d2 = [u2[0] - u1[0] - d1[0], u2[1] - u1[1] - d1[1]];
        let d1_norm = d1[0].hypot(d1[1]);
        let d2_norm = d2[0].hypot(d2[1]);
        if d2_norm > 1e-12 {
            let alpha = (-d1_norm / d2_norm).min(-1.0);
            let ext = [0, 1].map(|i| (u0[i] - 2.0 * alpha * d1[i] + alpha * alpha * d2[i]).exp().max(floor));
            let ext = [0, 1].map(|i| if ext[i].is_finite() { ext[i] } else { [r3, q3][i] });
            let (ll_ext, r_ext, q_ext) = step(ext[0], ext[1]);
            if ll_ext >= ll2 {
                let ll_stab = step(r_ext, q_ext).0;
                if ll_stab >= ll_ext {
                    next = (r_ext, q_ext, ll_stab);
                } else {
                    next = (ext[0], ext[1], ll_ext);
                }
            }
        }
        iterations += 1;
        let gain = next.2 - ll;
        theta = (next.0, next.1);
        ll = next.2;
        trace.push(ll);
        if gain < config.tolerance {
            converged = true;
            break;
        }
    }

    EmReport {
        obs_var: theta.0,
        process_var: theta.1,
        log_likelihood: trace,
        iterations,
        converged,
        degenerate: false,
    }
}
