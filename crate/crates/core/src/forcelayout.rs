//! ForceAtlas2 layout for the entity graph.
//!
//! Exact O(n²) forces: degree-scaled repulsion `k_r (deg_u+1)(deg_v+1) / d`,
//! linear edge attraction `w^influence · d` and constant-magnitude gravity
//! `k_g (deg_u+1)` toward the origin. Positions always carry three
//! components; with `dim = 2` the third stays at zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entitygraph::EntityGraph;
use crate::error::{Error, Result};

pub type Point = [f64; 3];

// Adaptive speed constants, as in the reference ForceAtlas2 implementation.
const JITTER_ESTIMATE_FACTOR: f64 = 0.05;
const MAX_JITTER: f64 = 10.0;
const MIN_SPEED_EFFICIENCY: f64 = 0.05;
const SWING_TRACTION_RATIO: f64 = 2.0;
const EFFICIENCY_DROP_OSCILLATING: f64 = 0.5;
const EFFICIENCY_DROP: f64 = 0.7;
const EFFICIENCY_RISE: f64 = 1.3;
const EFFICIENCY_RISE_SPEED_CAP: f64 = 1000.0;
const MAX_RISE: f64 = 0.5;
/// Global speed may shrink by at most this factor per step. Without a floor
/// a lone node that overshoots the origin sees its speed collapse to zero
/// and freezes short of it.
const MAX_SPEED_FALL: f64 = 0.5;

/// Magnitude of the displacement applied to coincident nodes.
pub const COLLISION_JITTER: f64 = 1e-4;
/// Any coordinate beyond this aborts the layout.
pub const EXPLOSION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub scaling: f64,
    pub gravity: f64,
    pub iterations: usize,
    pub dim: usize,
    pub seed: u64,
    pub jitter_tolerance: f64,
    pub edge_weight_influence: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            scaling: 10.0,
            gravity: 1.0,
            iterations: 1000,
            dim: 3,
            seed: 0,
            jitter_tolerance: 1.0,
            edge_weight_influence: 1.0,
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scaling > 0.0 && self.scaling.is_finite()) {
            return Err(Error::config(format!("layout.scaling must be > 0, got {}", self.scaling)));
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(Error::config(format!("layout.gravity must be >= 0, got {}", self.gravity)));
        }
        if self.iterations < 1 {
            return Err(Error::config("layout.iterations must be at least 1"));
        }
        if !matches!(self.dim, 2 | 3) {
            return Err(Error::config(format!("layout.dim must be 2 or 3, got {}", self.dim)));
        }
        if !(self.jitter_tolerance > 0.0 && self.jitter_tolerance.is_finite()) {
            return Err(Error::config("layout.jitter_tolerance must be > 0"));
        }
        if !self.edge_weight_influence.is_finite() {
            return Err(Error::config("layout.edge_weight_influence must be finite"));
        }
        Ok(())
    }
}

/// Index-based view of a weighted undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub degree: Vec<usize>,
}

impl LayoutGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut degree = vec![0; n];
        for &(a, b, _) in &edges {
            assert!(a < n && b < n && a != b, "edge ({a}, {b}) invalid for {n} nodes");
            degree[a] += 1;
            degree[b] += 1;
        }
        Self { n, edges, degree }
    }

    pub fn from_entity_graph(g: &EntityGraph) -> Self {
        let edges = g
            .edges
            .iter()
            .map(|e| {
                let a = g.node_index(&e.entity_a).expect("edge endpoint is a node");
                let b = g.node_index(&e.entity_b).expect("edge endpoint is a node");
                (a, b, e.weight)
            })
            .collect();
        Self::new(g.nodes.len(), edges)
    }

    fn mass(&self, i: usize) -> f64 {
        (self.degree[i] + 1) as f64
    }
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(v: &Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn axpy(acc: &mut Point, s: f64, v: &Point) {
    for k in 0..3 {
        acc[k] += s * v[k];
    }
}

/// Net force on every node. Coincident pairs contribute no repulsion; the
/// stepper separates them before calling this.
pub fn forces(graph: &LayoutGraph, positions: &[Point], config: &LayoutConfig) -> Vec<Point> {
    let n = graph.n;
    let mut f = vec![[0.0; 3]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sub(&positions[i], &positions[j]);
            let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if d2 > 0.0 {
                let s = config.scaling * graph.mass(i) * graph.mass(j) / d2;
                axpy(&mut f[i], s, &d);
                axpy(&mut f[j], -s, &d);
            }
        }
    }
    for &(a, b, w) in &graph.edges {
        let d = sub(&positions[a], &positions[b]);
        let s = -w.powf(config.edge_weight_influence);
        axpy(&mut f[a], s, &d);
        axpy(&mut f[b], -s, &d);
    }
    if config.gravity > 0.0 {
        for (i, p) in positions.iter().enumerate() {
            let r = norm(p);
            if r > 0.0 {
                axpy(&mut f[i], -config.gravity * graph.mass(i) / r, p);
            }
        }
    }
    f
}

/// Mutable simulation state between steps.
#[derive(Debug, Clone)]
pub struct LayoutState {
    pub positions: Vec<Point>,
    prev_forces: Vec<Point>,
    speed: f64,
    speed_efficiency: f64,
    rng: ChaCha8Rng,
}

impl LayoutState {
    /// Starts from explicit positions; `seed` drives collision jitter only.
    pub fn from_positions(positions: Vec<Point>, seed: u64) -> Self {
        let n = positions.len();
        Self {
            positions,
            prev_forces: vec![[0.0; 3]; n],
            speed: 1.0,
            speed_efficiency: 1.0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x6a09_e667_f3bc_c908),
        }
    }

    /// Seeded uniform initialization in `[-1, 1]^dim`.
    pub fn random(n: usize, config: &LayoutConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let positions = (0..n)
            .map(|_| {
                let mut p = [0.0; 3];
                for c in p.iter_mut().take(config.dim) {
                    *c = rng.gen_range(-1.0..=1.0);
                }
                p
            })
            .collect();
        Self::from_positions(positions, config.seed)
    }

    /// The same state with every position shifted by `t`.
    pub fn translated(&self, t: Point) -> Self {
        let mut out = self.clone();
        for p in &mut out.positions {
            axpy(p, 1.0, &t);
        }
        out
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    fn separate_coincident(&mut self, dim: usize) {
        let n = self.positions.len();
        for j in 1..n {
            while (0..j).any(|i| self.positions[i] == self.positions[j]) {
                for c in self.positions[j].iter_mut().take(dim) {
                    *c += self.rng.gen_range(-COLLISION_JITTER..=COLLISION_JITTER);
                }
            }
        }
    }

    /// One ForceAtlas2 iteration. Returns the energy (sum of squared
    /// net-force magnitudes) of the state before the move.
    pub fn step(&mut self, graph: &LayoutGraph, config: &LayoutConfig) -> Result<f64> {
        self.separate_coincident(config.dim);
        let f = forces(graph, &self.positions, config);
        let energy: f64 = f.iter().map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sum();

        let n = graph.n as f64;
        let mut swing = vec![0.0; graph.n];
        let (mut total_swing, mut total_traction) = (0.0, 0.0);
        for i in 0..graph.n {
            let m = graph.mass(i);
            let old = &self.prev_forces[i];
            let diff = sub(&f[i], old);
            let sum = [f[i][0] + old[0], f[i][1] + old[1], f[i][2] + old[2]];
            swing[i] = m * norm(&diff);
            total_swing += swing[i];
            total_traction += m * 0.5 * norm(&sum);
        }

        let estimate = JITTER_ESTIMATE_FACTOR * n.sqrt();
        let min_jitter = estimate.sqrt();
        let mut jitter = config.jitter_tolerance
            * min_jitter.max(MAX_JITTER.min(estimate * total_traction / (n * n)));
        if total_traction > 0.0 && total_swing / total_traction > SWING_TRACTION_RATIO {
            if self.speed_efficiency > MIN_SPEED_EFFICIENCY {
                self.speed_efficiency *= EFFICIENCY_DROP_OSCILLATING;
            }
            jitter = jitter.max(config.jitter_tolerance);
        }
        let target = if total_swing > 0.0 {
            jitter * self.speed_efficiency * total_traction / total_swing
        } else {
            f64::INFINITY
        };
        if total_swing > jitter * total_traction {
            if self.speed_efficiency > MIN_SPEED_EFFICIENCY {
                self.speed_efficiency *= EFFICIENCY_DROP;
            }
        } else if self.speed < EFFICIENCY_RISE_SPEED_CAP {
            self.speed_efficiency *= EFFICIENCY_RISE;
        }
        let change = (target - self.speed)
            .min(MAX_RISE * self.speed)
            .max(-MAX_SPEED_FALL * self.speed);
        self.speed += change;

        for i in 0..graph.n {
            let factor = self.speed / (1.0 + (self.speed * swing[i]).sqrt());
            let p = &mut self.positions[i];
            axpy(p, factor, &f[i]);
            if p.iter().any(|c| !c.is_finite() || c.abs() > EXPLOSION_LIMIT) {
                return Err(Error::invariant(format!(
                    "layout diverged: node {i} reached {p:?}"
                )));
            }
        }
        if !energy.is_finite() {
            return Err(Error::invariant("layout energy is not finite"));
        }
        self.prev_forces = f;
        Ok(energy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    pub positions: Vec<Point>,
    /// Energy before each iteration.
    pub energy: Vec<f64>,
}

pub fn layout(graph: &LayoutGraph, config: &LayoutConfig) -> Result<LayoutResult> {
    if graph.n == 0 {
        return Err(Error::config("layout needs at least one node"));
    }
    let state = LayoutState::random(graph.n, config);
    layout_from(graph, config, state)
}

/// Runs `config.iterations` steps from a given state.
pub fn layout_from(graph: &LayoutGraph, config: &LayoutConfig, mut state: LayoutState) -> Result<LayoutResult> {
    config.validate()?;
    if graph.n != state.positions.len() {
        return Err(Error::invariant("layout state size does not match the graph"));
    }
    let mut energy = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        energy.push(state.step(graph, config)?);
    }
    Ok(LayoutResult {
        positions: state.positions,
        energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(a: &Point, b: &Point) -> f64 {
        norm(&sub(a, b))
    }

    #[test]
    fn gravity_examples() {
        let g = LayoutGraph::new(1, vec![]);
        let c = LayoutConfig::default();
        assert_eq!(forces(&g, &[[0.0; 3]], &c), vec![[0.0; 3]]);
        assert_eq!(forces(&g, &[[1.0, 0.0, 0.0]], &c), vec![[-1.0, 0.0, 0.0]]);
    }

    #[test]
    fn isolated_pair_repulsion() {
        let g = LayoutGraph::new(2, vec![]);
        let c = LayoutConfig { gravity: 0.0, ..Default::default() };
        let f = forces(&g, &[[0.0; 3], [0.0, 2.5, 0.0]], &c);
        assert!((f[0][1] + 4.0).abs() < 1e-12);
        assert!((f[1][1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_force_is_fixpoint() {
        let g = LayoutGraph::new(1, vec![]);
        let c = LayoutConfig::default();
        let mut s = LayoutState::from_positions(vec![[0.0; 3]], 0);
        assert_eq!(s.step(&g, &c).unwrap(), 0.0);
        assert_eq!(s.positions, vec![[0.0; 3]]);
    }

    #[test]
    fn two_node_equilibrium() {
        let g = LayoutGraph::new(2, vec![(0, 1, 1.0)]);
        let c = LayoutConfig { gravity: 0.0, seed: 3, ..Default::default() };
        let r = layout(&g, &c).unwrap();
        let d = dist(&r.positions[0], &r.positions[1]);
        assert!((d / 40f64.sqrt() - 1.0).abs() < 0.05, "d = {d}");
    }

    #[test]
    fn single_node_reaches_origin() {
        let g = LayoutGraph::new(1, vec![]);
        for seed in 0..5 {
            let r = layout(&g, &LayoutConfig { seed, ..Default::default() }).unwrap();
            assert!(norm(&r.positions[0]) < 1e-3);
        }
    }

    #[test]
    fn coincident_nodes_are_separated() {
        let g = LayoutGraph::new(2, vec![]);
        let c = LayoutConfig::default();
        let mut s = LayoutState::from_positions(vec![[0.5, 0.5, 0.0]; 2], 1);
        s.step(&g, &c).unwrap();
        assert_ne!(s.positions[0], s.positions[1]);
        assert!(s.positions.iter().flatten().all(|c| c.is_finite()));
    }

    #[test]
    fn planar_layout_stays_planar() {
        let g = LayoutGraph::new(3, vec![(0, 1, 1.0), (1, 2, 0.5)]);
        let c = LayoutConfig { dim: 2, iterations: 200, ..Default::default() };
        let r = layout(&g, &c).unwrap();
        assert!(r.positions.iter().all(|p| p[2] == 0.0));
    }

    #[test]
    fn empty_graph_and_bad_config() {
        let e = layout(&LayoutGraph::new(0, vec![]), &LayoutConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let c = LayoutConfig { dim: 4, ..Default::default() };
        assert!(c.validate().is_err());
        let c = LayoutConfig { scaling: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn pairwise_forces_cancel(pts in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 2..8)) {
            let n = pts.len();
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 0.3 + i as f64 / 10.0)).collect();
            let g = LayoutGraph::new(n, edges);
            let c = LayoutConfig { gravity: 0.0, ..Default::default() };
            let f = forces(&g, &pts, &c);
            for k in 0..3 {
                let total: f64 = f.iter().map(|v| v[k]).sum();
                let scale: f64 = f.iter().map(|v| v[k].abs()).sum::<f64>().max(1.0);
                prop_assert!(total.abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn same_seed_same_trajectory(seed in 0u64..1000) {
            let g = LayoutGraph::new(4, vec![(0, 1, 1.0), (1, 2, 0.4), (2, 3, 0.9)]);
            let c = LayoutConfig { seed, iterations: 50, ..Default::default() };
            prop_assert_eq!(layout(&g, &c).unwrap(), layout(&g, &c).unwrap());
        }
    }
}
