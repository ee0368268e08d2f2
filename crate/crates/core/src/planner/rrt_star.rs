use rand::Rng;

use super::{config_collides, edge_collides, Path, PlannerParams};
use crate::error::{Error, Result};
use crate::robot::{joint_distance, ArmModel, Capsule2, JointConfig};

const ROOT: usize = usize::MAX;

/// RRT* search tree in flat storage; node 0 is the start.
#[derive(Debug, Clone)]
pub struct Tree {
    dim: usize,
    coords: Vec<f64>,
    parent: Vec<usize>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
}

impl Tree {
    fn new(start: &[f64]) -> Self {
        Self {
            dim: start.len(),
            coords: start.to_vec(),
            parent: vec![ROOT],
            cost: vec![0.0],
            children: vec![Vec::new()],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        (self.parent[i] != ROOT).then_some(self.parent[i])
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.cost[i]
    }

    fn push(&mut self, q: &[f64], parent: usize, cost: f64) -> usize {
        let id = self.len();
        self.coords.extend_from_slice(q);
        self.parent.push(parent);
        self.cost.push(cost);
        self.children.push(Vec::new());
        self.children[parent].push(id);
        id
    }

    fn dist2(&self, i: usize, q: &[f64]) -> f64 {
        self.node(i)
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    fn nearest(&self, q: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..self.len() {
            let d = self.dist2(i, q);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn within(&self, q: &[f64], radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let r2 = radius * radius;
        for i in 0..self.len() {
            if self.dist2(i, q) <= r2 {
                out.push(i);
            }
        }
    }

    fn reparent(&mut self, node: usize, new_parent: usize, new_cost: f64) {
        let old = self.parent[node];
        if let Some(pos) = self.children[old].iter().position(|&c| c == node) {
            self.children[old].swap_remove(pos);
        }
        self.parent[node] = new_parent;
        self.children[new_parent].push(node);
        let delta = new_cost - self.cost[node];
        self.cost[node] = new_cost;
        let mut stack = self.children[node].clone();
        while let Some(n) = stack.pop() {
            self.cost[n] += delta;
            stack.extend_from_slice(&self.children[n]);
        }
    }

    /// Largest gap between stored cost and parent cost plus edge length.
    pub fn max_cost_inconsistency(&self) -> f64 {
        (1..self.len())
            .map(|i| {
                let p = self.parent[i];
                let expect = self.cost[p] + joint_distance(self.node(p), self.node(i));
                (self.cost[i] - expect).abs()
            })
            .fold(0.0, f64::max)
    }

    fn path_to(&self, mut node: usize) -> Vec<JointConfig> {
        let mut rev = vec![JointConfig::new(self.node(node).to_vec())];
        while let Some(p) = self.parent(node) {
            rev.push(JointConfig::new(self.node(p).to_vec()));
            node = p;
        }
        rev.reverse();
        rev
    }
}

/// Single RRT* query against a static obstacle snapshot. Keeps the tree
/// around so callers can inspect it after `run`.
pub struct RrtStar<'a> {
    model: &'a ArmModel,
    obstacles: &'a [Capsule2],
    params: &'a PlannerParams,
    goal: Vec<f64>,
    tree: Tree,
    /// Nodes with a collision-free edge of length <= steer_step to the goal.
    goal_links: Vec<usize>,
    iterations: usize,
}

impl<'a> RrtStar<'a> {
    pub fn new(
        model: &'a ArmModel,
        start: &JointConfig,
        goal: &JointConfig,
        obstacles: &'a [Capsule2],
        params: &'a PlannerParams,
    ) -> Self {
        Self {
            model,
            obstacles,
            params,
            goal: goal.angles.clone(),
            tree: Tree::new(&start.angles),
            goal_links: Vec::new(),
            iterations: 0,
        }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Runs `iterations` more samples, continuing the same tree.
    pub fn run<R: Rng + ?Sized>(&mut self, iterations: usize, rng: &mut R) {
        let dim = self.goal.len();
        let mut sample = vec![0.0; dim];
        let mut new = vec![0.0; dim];
        let mut near = Vec::new();
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        let gamma = self.params.rewire_radius_const;
        let step = self.params.steer_step;
        let res = self.params.edge_check_resolution;

        for _ in 0..iterations {
            self.iterations += 1;
            if rng.random::<f64>() < self.params.goal_bias {
                sample.copy_from_slice(&self.goal);
            } else {
                for (s, &[lo, hi]) in sample.iter_mut().zip(&self.model.joint_limits) {
                    *s = rng.random_range(lo..hi);
                }
            }

            let nearest = self.tree.nearest(&sample);
            let d = self.tree.dist2(nearest, &sample).sqrt();
            if d < 1e-12 {
                continue;
            }
            let t = (step / d).min(1.0);
            for ((n, s), q) in new.iter_mut().zip(&sample).zip(self.tree.node(nearest)) {
                *n = q + (s - q) * t;
            }
            if t < 1.0 {
                // float drift can leave the step a hair above steer_step
                let over = joint_distance(&new, self.tree.node(nearest)) / step;
                if over > 1.0 {
                    let base = self.tree.node(nearest).to_vec();
                    for (n, q) in new.iter_mut().zip(&base) {
                        *n = q + (*n - q) / over;
                    }
                }
            }
            if config_collides(self.model, &new, self.obstacles) {
                continue;
            }

            let n = (self.tree.len() + 1) as f64;
            let radius = (gamma * (n.ln() / n).powf(1.0 / dim as f64)).min(step);
            self.tree.within(&new, radius, &mut near);

            candidates.clear();
            candidates.extend(
                near.iter()
                    .chain(std::iter::once(&nearest))
                    .map(|&i| (self.tree.cost(i) + joint_distance(self.tree.node(i), &new), i)),
            );
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            candidates.dedup_by_key(|c| c.1);
            let Some(&(new_cost, parent)) = candidates.iter().find(|&&(_, i)| {
                !edge_collides(self.model, self.tree.node(i), &new, self.obstacles, res)
            }) else {
                continue;
            };
            let id = self.tree.push(&new, parent, new_cost);

            for &i in &near {
                if i == parent {
                    continue;
                }
                let via = new_cost + joint_distance(self.tree.node(i), &new);
                if via < self.tree.cost(i) - 1e-12
                    && !edge_collides(self.model, &new, self.tree.node(i), self.obstacles, res)
                {
                    // never rewire an ancestor of the new node under it
                    if !self.is_ancestor(i, id) {
                        self.tree.reparent(i, id, via);
                    }
                }
            }

            let to_goal = joint_distance(&new, &self.goal);
            if to_goal <= step && !edge_collides(self.model, &new, &self.goal, self.obstacles, res) {
                self.goal_links.push(id);
            }
        }
    }

    fn is_ancestor(&self, candidate: usize, mut node: usize) -> bool {
        while let Some(p) = self.tree.parent(node) {
            if p == candidate {
                return true;
            }
            node = p;
        }
        false
    }

    /// Cheapest path found so far, if any.
    pub fn best_path(&self) -> Option<Path> {
        let best = self
            .goal_links
            .iter()
            .map(|&i| (self.tree.cost(i) + joint_distance(self.tree.node(i), &self.goal), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?;
        let mut waypoints = self.tree.path_to(best.1);
        if joint_distance(self.tree.node(best.1), &self.goal) > 0.0 {
            waypoints.push(JointConfig::new(self.goal.clone()));
        }
        Some(Path { waypoints })
    }
}

/// Plans from `start` to `goal` with at most `iterations` RRT* samples.
///
/// Start and goal must be collision-free; otherwise the query fails without
/// sampling.
pub fn plan_rrt_star<R: Rng + ?Sized>(
    model: &ArmModel,
    start: &JointConfig,
    goal: &JointConfig,
    obstacles: &[Capsule2],
    params: &PlannerParams,
    iterations: usize,
    rng: &mut R,
) -> Result<Path> {
    if config_collides(model, &start.angles, obstacles)
        || config_collides(model, &goal.angles, obstacles)
    {
        return Err(Error::PlanFailure { iterations: 0 });
    }
    if start.distance(goal) == 0.0 {
        return Ok(Path {
            waypoints: vec![start.clone()],
        });
    }
    let mut planner = RrtStar::new(model, start, goal, obstacles, params);
    planner.run(iterations, rng);
    planner.best_path().ok_or(Error::PlanFailure { iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::Point2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn goal_equals_start() {
        let arm = ArmModel::default();
        let q = JointConfig::new(vec![0.1, 0.2, 0.3]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = plan_rrt_star(&arm, &q, &q, &[], &PlannerParams::default(), 100, &mut rng).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn blocked_start_fails_fast() {
        let arm = ArmModel::default();
        let q = JointConfig::new(vec![0.0, 0.0, 0.0]);
        let ob = Capsule2::new(Point2::new(0.3, 0.0), Point2::new(0.3, 0.0), 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let goal = JointConfig::new(vec![1.0, 0.0, 0.0]);
        let r = plan_rrt_star(&arm, &q, &goal, &[ob], &PlannerParams::default(), 100, &mut rng);
        assert!(matches!(r, Err(Error::PlanFailure { iterations: 0 })));
    }

    #[test]
    fn clear_world_path_is_valid() {
        let arm = ArmModel::default();
        let params = PlannerParams::default();
        let start = JointConfig::new(vec![0.5, -1.0, 0.5]);
        let goal = JointConfig::new(vec![2.0, 0.5, -0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rrt = RrtStar::new(&arm, &start, &goal, &[], &params);
        rrt.run(1500, &mut rng);
        let path = rrt.best_path().expect("clear world");
        assert_eq!(path.waypoints[0], start);
        assert_eq!(*path.waypoints.last().unwrap(), goal);
        assert!(path.max_step() <= params.steer_step + 1e-12);
        assert!(rrt.tree().max_cost_inconsistency() < 1e-9);
    }
}
