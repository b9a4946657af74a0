//! Visibility-graph roadmap over static obstacles, used for the robot's
//! preferred velocity.

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use crate::geometry::{Segment, Vec2};

/// Waypoints sit this factor beyond the clearance from obstacle endpoints.
const NODE_OFFSET: f64 = 1.2;

#[derive(Debug, Clone)]
pub struct Roadmap {
    obstacles: Vec<Segment>,
    clearance: f64,
    goal: Vec2,
    nodes: Vec<Vec2>,
    /// Shortest roadmap distance from each node to the goal.
    cost_to_goal: Vec<f64>,
}

impl Roadmap {
    pub fn new(obstacles: &[Segment], goal: Vec2, clearance: f64) -> Self {
        let mut map = Self {
            obstacles: obstacles.to_vec(),
            clearance,
            goal,
            nodes: Vec::new(),
            cost_to_goal: Vec::new(),
        };
        let offset = clearance * NODE_OFFSET;
        let mut candidates = Vec::new();
        for s in obstacles {
            let dir = (s.b - s.a).normalize_or_zero();
            let normal = dir.perp();
            for (end, out) in [(s.a, -dir), (s.b, dir)] {
                candidates.push(end + (out + normal) * offset);
                candidates.push(end + (out - normal) * offset);
            }
        }
        map.nodes = candidates.into_iter().filter(|&p| map.is_clear(p)).collect();

        let mut graph: UnGraph<Vec2, f64> = UnGraph::new_undirected();
        let goal_index = graph.add_node(goal);
        let indices: Vec<NodeIndex> = map.nodes.iter().map(|&p| graph.add_node(p)).collect();
        for (i, &a) in map.nodes.iter().enumerate() {
            if map.visible(a, goal) {
                graph.add_edge(indices[i], goal_index, a.distance(goal));
            }
            for (j, &b) in map.nodes.iter().enumerate().skip(i + 1) {
                if map.visible(a, b) {
                    graph.add_edge(indices[i], indices[j], a.distance(b));
                }
            }
        }
        let costs = dijkstra(&graph, goal_index, None, |e| *e.weight());
        map.cost_to_goal = indices
            .iter()
            .map(|i| costs.get(i).copied().unwrap_or(f64::INFINITY))
            .collect();
        map
    }

    fn is_clear(&self, p: Vec2) -> bool {
        self.obstacles.iter().all(|s| s.distance_to_point(p) >= self.clearance)
    }

    /// Whether the straight path keeps the clearance from every obstacle.
    pub fn visible(&self, a: Vec2, b: Vec2) -> bool {
        let path = Segment::new(a, b);
        self.obstacles
            .iter()
            .all(|s| path.distance_to_segment(s) >= self.clearance - 1e-9)
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    /// Next point to head for: the goal when visible, otherwise the visible
    /// waypoint with the shortest total route.
    pub fn next_waypoint(&self, from: Vec2) -> Vec2 {
        if self.visible(from, self.goal) {
            return self.goal;
        }
        let mut best = (f64::INFINITY, self.goal);
        for (&node, &cost) in self.nodes.iter().zip(&self.cost_to_goal) {
            if cost.is_finite() && self.visible(from, node) {
                let total = from.distance(node) + cost;
                if total < best.0 {
                    best = (total, node);
                }
            }
        }
        best.1
    }

    /// Full-speed velocity toward the next waypoint, shortened so the robot
    /// does not overshoot the goal within one step.
    pub fn preferred_velocity(&self, from: Vec2, max_speed: f64, dt: f64) -> Vec2 {
        let target = self.next_waypoint(from);
        let to = target - from;
        let dist = to.length();
        if dist <= 1e-12 {
            return Vec2::ZERO;
        }
        let speed = if target == self.goal {
            max_speed.min(dist / dt)
        } else {
            max_speed
        };
        to * (speed / dist)
    }
}
