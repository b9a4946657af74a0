//! Stochastic ensemble Kalman analysis with centered perturbed observations.

use nalgebra::{Matrix2, SMatrix, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{State, STATE_DIM};

/// Ensemble mean.
pub fn mean(members: &[State]) -> State {
    let mut m = State::zeros();
    for x in members {
        m += x;
    }
    m / members.len() as f64
}

/// Sample standard deviation of each state component.
pub fn spread(members: &[State]) -> State {
    let m = mean(members);
    let mut var = State::zeros();
    for x in members {
        let d = x - m;
        var += d.component_mul(&d);
    }
    (var / (members.len() - 1) as f64).map(f64::sqrt)
}

/// Draws `count` samples of `N(0, cov)` and subtracts their sample mean, so
/// the perturbations leave the ensemble mean untouched.
fn centered_perturbations<R: Rng>(count: usize, cov: &Matrix2<f64>, rng: &mut R) -> Vec<Vector2<f64>> {
    let chol = cov
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| Matrix2::from_diagonal(&cov.diagonal().map(|v| v.max(0.0).sqrt())));
    let mut eps: Vec<Vector2<f64>> = (0..count)
        .map(|_| chol * Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let m = eps.iter().sum::<Vector2<f64>>() / count as f64;
    for e in &mut eps {
        *e -= m;
    }
    eps
}

/// Corrects the ensemble in place against a position observation and
/// returns the innovation (observation minus predicted mean position).
pub fn analysis<R: Rng>(members: &mut [State], obs: Vector2<f64>, obs_cov: &Matrix2<f64>, rng: &mut R) -> Vector2<f64> {
    let k = members.len();
    let x_mean = mean(members);
    let y_mean = Vector2::new(x_mean[0], x_mean[1]);
    let norm = 1.0 / (k - 1) as f64;

    let mut p_xy = SMatrix::<f64, STATE_DIM, 2>::zeros();
    let mut p_yy = Matrix2::zeros();
    for x in members.iter() {
        let dx = x - x_mean;
        let dy = Vector2::new(dx[0], dx[1]);
        p_xy += dx * dy.transpose() * norm;
        p_yy += dy * dy.transpose() * norm;
    }
    p_yy += obs_cov;
    let Some(p_yy_inv) = p_yy.try_inverse() else {
        return obs - y_mean;
    };
    let gain = p_xy * p_yy_inv;

    let eps = centered_perturbations(k, obs_cov, rng);
    for (x, e) in members.iter_mut().zip(eps) {
        let y = Vector2::new(x[0], x[1]);
        *x += gain * (obs + e - y);
    }
    obs - y_mean
}
