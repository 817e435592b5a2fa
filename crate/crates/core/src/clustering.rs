//! Density Peak Clustering over the projected coordinates.
//!
//! Gaussian-kernel densities with a cutoff taken from the pairwise-distance
//! distribution, separation to the nearest denser point, quantile-based
//! center selection and assignment by density order. Density ties count the
//! lower index as denser.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpcConfig {
    pub rho_quantile: f64,
    pub dc_quantile: f64,
    pub delta_quantile: f64,
    pub kernel: Kernel,
}

impl Default for DpcConfig {
    fn default() -> Self {
        Self {
            rho_quantile: 0.65,
            dc_quantile: 0.02,
            delta_quantile: 0.95,
            kernel: Kernel::Gaussian,
        }
    }
}

impl DpcConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, q) in [
            ("rho_quantile", self.rho_quantile),
            ("dc_quantile", self.dc_quantile),
            ("delta_quantile", self.delta_quantile),
        ] {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::config(format!(
                    "clustering.{name} must lie in (0, 1), got {q}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    /// Center point indices; position in this list is the cluster id.
    pub centers: Vec<usize>,
    pub rho: Vec<f64>,
    pub delta: Vec<f64>,
    /// `None` only for the global density maximum.
    pub nearest_higher: Vec<Option<usize>>,
    pub dc: f64,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.centers.len()
    }
}

/// Dense symmetric Euclidean distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn euclidean<P: AsRef<[f64]>>(points: &[P]) -> Self {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = points[i]
                    .as_ref()
                    .iter()
                    .zip(points[j].as_ref())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// All `d(i, j)` with `i < j`.
    pub fn pairwise(&self) -> Vec<f64> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect()
    }
}

/// Linear-interpolation quantile of `values` (the common "type 7" rule).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + (v[hi] - v[lo]) * frac
}

/// Cutoff distance: the `q` quantile of the pairwise distances. Falls back
/// to the smallest positive distance, then to 1, when that quantile is 0.
pub fn cutoff_distance(dist: &DistanceMatrix, q: f64) -> f64 {
    let pairs = dist.pairwise();
    let dc = quantile(&pairs, q);
    if dc > 0.0 {
        return dc;
    }
    let fallback = pairs
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if fallback.is_finite() {
        log::warn!("dc quantile is zero; using smallest positive distance {fallback}");
        fallback
    } else {
        1.0
    }
}

/// `rho_i = sum_{j != i} exp(-(d_ij / dc)^2)`.
pub fn local_density(dist: &DistanceMatrix, dc: f64) -> Vec<f64> {
    assert!(dc > 0.0, "cutoff distance must be positive");
    (0..dist.len())
        .map(|i| {
            dist.row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| (-(d / dc).powi(2)).exp())
                .sum()
        })
        .collect()
}

/// Point indices from densest to sparsest; ties put the lower index first.
pub fn density_order(rho: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    order
}

/// Separation `delta_i` to the nearest denser point and that point's index.
/// The global maximum gets the largest distance from itself and no parent.
/// Distance ties between denser candidates go to the lower index.
pub fn delta_and_parent(rho: &[f64], dist: &DistanceMatrix) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = rho.len();
    let order = density_order(rho);
    let mut delta = vec![0.0; n];
    let mut parent = vec![None; n];
    for (pos, &i) in order.iter().enumerate() {
        if pos == 0 {
            delta[i] = dist.row(i).iter().copied().fold(0.0, f64::max);
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for &j in &order[..pos] {
            let d = dist.get(i, j);
            let better = match best {
                None => true,
                Some((bd, bj)) => match d.total_cmp(&bd) {
                    Ordering::Less => true,
                    Ordering::Equal => j < bj,
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((d, j));
            }
        }
        let (d, j) = best.expect("denser point exists past position 0");
        delta[i] = d;
        parent[i] = Some(j);
    }
    (delta, parent)
}

/// Centers are points whose density exceeds the `rho_quantile` quantile and
/// whose separation exceeds the `delta_quantile` quantile. The global density
/// maximum is always a center: it has no denser parent, and when the rule
/// picks nothing it is also the point maximizing `gamma = rho * delta`.
/// Returned in descending `gamma`, ties in density order.
pub fn select_centers(rho: &[f64], delta: &[f64], config: &DpcConfig) -> Vec<usize> {
    let n = rho.len();
    if n == 0 {
        return Vec::new();
    }
    let rho_t = quantile(rho, config.rho_quantile);
    let delta_t = quantile(delta, config.delta_quantile);
    let order = density_order(rho);
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut centers: Vec<usize> = (0..n)
        .filter(|&i| rho[i] > rho_t && delta[i] > delta_t)
        .collect();
    if !centers.contains(&order[0]) {
        centers.push(order[0]);
    }
    centers.sort_by(|&a, &b| {
        (rho[b] * delta[b])
            .total_cmp(&(rho[a] * delta[a]))
            .then(rank[a].cmp(&rank[b]))
    });
    centers
}

/// Labels every point: centers take their position in `centers`, every other
/// point inherits from its denser parent, visiting points in density order.
pub fn assign(centers: &[usize], nearest_higher: &[Option<usize>], rho: &[f64]) -> Vec<usize> {
    assert!(!centers.is_empty(), "assign needs at least one center");
    let mut labels = vec![usize::MAX; rho.len()];
    for (c, &i) in centers.iter().enumerate() {
        labels[i] = c;
    }
    for i in density_order(rho) {
        if labels[i] == usize::MAX {
            let p = nearest_higher[i].expect("non-center without denser parent");
            labels[i] = labels[p];
        }
    }
    labels
}

/// Full DPC run over points of any dimension.
pub fn cluster<P: AsRef<[f64]>>(points: &[P], config: &DpcConfig) -> Result<ClusterAssignment> {
    config.validate()?;
    if points.is_empty() {
        return Err(Error::NoRetainedSentences);
    }
    let dist = DistanceMatrix::euclidean(points);
    let dc = cutoff_distance(&dist, config.dc_quantile);
    let rho = local_density(&dist, dc);
    let (delta, nearest_higher) = delta_and_parent(&rho, &dist);
    let centers = select_centers(&rho, &delta, config);
    let labels = assign(&centers, &nearest_higher, &rho);
    Ok(ClusterAssignment {
        labels,
        centers,
        rho,
        delta,
        nearest_higher,
        dc,
    })
}
