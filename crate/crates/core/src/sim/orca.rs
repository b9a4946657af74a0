//! Reciprocal velocity obstacles in the optimal-reciprocal (half-plane) form,
//! solved with the incremental 2D linear program of RVO2.

use crate::geometry::{Segment, Vec2};

const LP_EPSILON: f64 = 1e-10;

/// Half-plane constraint in velocity space. Valid velocities lie to the left
/// of the directed line through `point` along `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Vec2,
    pub direction: Vec2,
}

impl Line {
    /// Signed violation: positive when `v` is on the invalid (right) side.
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.det(self.point - v)
    }

    /// Half-plane `{v : normal·v >= offset}` for a unit `normal`.
    pub fn from_normal(normal: Vec2, offset: f64) -> Self {
        Line {
            point: normal * offset,
            direction: Vec2::new(normal.y, -normal.x),
        }
    }
}

/// Kinematic snapshot of one disc agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// ORCA half-plane for `agent` with respect to `other`, sharing avoidance
/// effort equally. `time_horizon` must be positive.
pub fn agent_line(agent: &Disc, other: &Disc, time_horizon: f64, dt: f64) -> Line {
    let rel_pos = other.position - agent.position;
    let rel_vel = agent.velocity - other.velocity;
    let dist_sq = rel_pos.length_squared();
    let combined = agent.radius + other.radius;
    let combined_sq = combined * combined;

    let (direction, u);
    if dist_sq > combined_sq {
        let inv_tau = 1.0 / time_horizon;
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.length_squared();
        let dot1 = w.dot(rel_pos);
        // Exactly head-on approach: the cutoff circle gives no lateral
        // component, so project on the right leg instead.
        let head_on = rel_pos.det(rel_vel) == 0.0 && rel_vel.dot(rel_pos) > 0.0;

        if dot1 < 0.0 && dot1 * dot1 > combined_sq * w_len_sq && !head_on {
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (combined * inv_tau - w_len);
        } else {
            let leg = (dist_sq - combined_sq).sqrt();
            if rel_pos.det(w) > 0.0 && !head_on {
                direction = Vec2::new(
                    rel_pos.x * leg - rel_pos.y * combined,
                    rel_pos.x * combined + rel_pos.y * leg,
                ) / dist_sq;
            } else {
                direction = -Vec2::new(
                    rel_pos.x * leg + rel_pos.y * combined,
                    -rel_pos.x * combined + rel_pos.y * leg,
                ) / dist_sq;
            }
            u = direction * rel_vel.dot(direction) - rel_vel;
        }
    } else {
        // Already overlapping: resolve within one step.
        let inv_dt = 1.0 / dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.length();
        let unit_w = if w_len > 0.0 { w / w_len } else { Vec2::new(-1.0, 0.0) };
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (combined * inv_dt - w_len);
    }

    Line {
        point: agent.velocity + u * 0.5,
        direction,
    }
}

/// Half-plane keeping a disc agent off a segment. The constraint is tangent
/// to the closest point, so the whole segment stays on the far side.
pub fn obstacle_line(agent: &Disc, segment: &Segment, time_horizon: f64, dt: f64) -> Option<Line> {
    let closest = segment.closest_point(agent.position);
    let away = agent.position - closest;
    let dist = away.length();
    if dist <= 1e-12 {
        return None;
    }
    let normal = away / dist;
    let gap = dist - agent.radius;
    let offset = if gap > 0.0 {
        -gap / time_horizon
    } else {
        -gap / dt
    };
    Some(Line::from_normal(normal, offset))
}

fn lp1(lines: &[Line], line_no: usize, radius: f64, opt: Vec2, direction_opt: bool) -> Option<Vec2> {
    let line = lines[line_no];
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        return None;
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for prior in &lines[..line_no] {
        let denominator = line.direction.det(prior.direction);
        let numerator = prior.direction.det(line.point - prior.point);
        if denominator.abs() <= LP_EPSILON {
            if numerator < 0.0 {
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if opt.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction.dot(opt - line.point).clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

/// Returns the optimum and the index of the first infeasible line
/// (`lines.len()` when all constraints are met).
fn lp2(lines: &[Line], radius: f64, opt: Vec2, direction_opt: bool) -> (Vec2, usize) {
    let mut result = if direction_opt {
        opt * radius
    } else {
        opt.clamp_length(radius)
    };
    for i in 0..lines.len() {
        if lines[i].violation(result) > 0.0 {
            match lp1(lines, i, radius, opt, direction_opt) {
                Some(r) => result = r,
                None => return (result, i),
            }
        }
    }
    (result, lines.len())
}

/// Minimizes the worst violation of the agent lines while keeping the first
/// `num_hard` lines satisfied.
fn lp3(lines: &[Line], num_hard: usize, begin: usize, radius: f64, mut result: Vec2) -> Vec2 {
    let mut distance = 0.0;
    for i in begin..lines.len() {
        if lines[i].violation(result) <= distance {
            continue;
        }
        let mut projected: Vec<Line> = lines[..num_hard].to_vec();
        for j in num_hard..i {
            let determinant = lines[i].direction.det(lines[j].direction);
            let point = if determinant.abs() <= LP_EPSILON {
                if lines[i].direction.dot(lines[j].direction) > 0.0 {
                    continue;
                }
                (lines[i].point + lines[j].point) * 0.5
            } else {
                lines[i].point
                    + lines[i].direction
                        * (lines[j].direction.det(lines[i].point - lines[j].point) / determinant)
            };
            projected.push(Line {
                point,
                direction: (lines[j].direction - lines[i].direction).normalize_or_zero(),
            });
        }
        let previous = result;
        let (candidate, fail) = lp2(&projected, radius, lines[i].direction.perp(), true);
        result = if fail < projected.len() { previous } else { candidate };
        distance = lines[i].violation(result);
    }
    result
}

/// Outcome of the velocity selection for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub velocity: Vec2,
    /// The agent constraints were jointly infeasible and were relaxed.
    pub relaxed: bool,
    /// Even the hard (obstacle) constraints could not be met.
    pub infeasible: bool,
}

/// Velocity closest to `preferred` within the `max_speed` disc satisfying
/// the first `num_hard` lines exactly and the rest as far as possible.
pub fn solve(lines: &[Line], num_hard: usize, max_speed: f64, preferred: Vec2) -> Solution {
    let (velocity, fail) = lp2(lines, max_speed, preferred, false);
    if fail == lines.len() {
        return Solution {
            velocity,
            relaxed: false,
            infeasible: false,
        };
    }
    if fail < num_hard {
        return Solution {
            velocity: Vec2::ZERO,
            relaxed: true,
            infeasible: true,
        };
    }
    let velocity = lp3(lines, num_hard, fail, max_speed, velocity);
    let infeasible = lines[..num_hard]
        .iter()
        .any(|l| l.violation(velocity) > 1e-9);
    Solution {
        velocity: if infeasible { Vec2::ZERO } else { velocity },
        relaxed: true,
        infeasible,
    }
}
