use std::collections::BTreeMap;

use super::knn::KnnGraph;

const SIGMA_MIN: f64 = 1e-8;
const SIGMA_MAX: f64 = 1e8;
const SIGMA_TOL: f64 = 1e-5;
const SIGMA_MAX_ITER: usize = 64;

/// Symmetric fuzzy membership graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    pub n: usize,
    /// Per point `(neighbor, weight)`, sorted by neighbor index.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    /// Distance to the nearest neighbour.
    pub rho: Vec<f64>,
    /// Calibrated bandwidth.
    pub sigma: Vec<f64>,
}

impl AffinityGraph {
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let row = &self.neighbors[i];
        row.binary_search_by_key(&j, |&(k, _)| k).ok().map(|p| row[p].1)
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }
}

/// `sum_j exp(-max(0, d_j - rho) / sigma)` over one point's neighbour distances.
pub fn membership_sum(distances: &[f64], rho: f64, sigma: f64) -> f64 {
    distances
        .iter()
        .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
        .sum()
}

/// Geometric bisection for the bandwidth whose membership sum hits
/// `log2(k)`, clamped to `[SIGMA_MIN, SIGMA_MAX]`.
fn calibrate_sigma(distances: &[f64], rho: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (SIGMA_MIN, SIGMA_MAX);
    let mut mid = (lo * hi).sqrt();
    for _ in 0..SIGMA_MAX_ITER {
        let s = membership_sum(distances, rho, mid);
        if (s - target).abs() < SIGMA_TOL {
            break;
        }
        if s > target {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = (lo * hi).sqrt();
    }
    mid
}

/// Smooth-kNN memberships symmetrized by fuzzy union `a + b - ab`.
pub fn fuzzy_affinities(knn: &KnnGraph) -> AffinityGraph {
    let n = knn.len();
    let target = (knn.k as f64).log2();
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        let dists = &knn.distances[i];
        let r = dists.first().copied().unwrap_or(0.0);
        let s = calibrate_sigma(dists, r, target);
        for (&j, &d) in knn.indices[i].iter().zip(dists) {
            directed.insert((i, j), (-(d - r).max(0.0) / s).exp());
        }
        rho.push(r);
        sigma.push(s);
    }

    let mut neighbors = vec![Vec::new(); n];
    for (&(i, j), &a) in &directed {
        let b = directed.get(&(j, i)).copied().unwrap_or(0.0);
        // Ordered so that w(i, j) == w(j, i) bitwise and w == 1 when either side is 1.
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let w = hi + lo * (1.0 - hi);
        neighbors[i].push((j, w));
        if !directed.contains_key(&(j, i)) {
            neighbors[j].push((i, w));
        }
    }
    for row in &mut neighbors {
        row.sort_by_key(|&(j, _)| j);
    }
    AffinityGraph {
        n,
        neighbors,
        rho,
        sigma,
    }
}
