//! UMAP-style projection of sentence embeddings into 3D.
//!
//! Exact cosine k-NN graph, smooth-kNN fuzzy memberships symmetrized by
//! fuzzy union, and a seeded single-threaded attract/repulse SGD layout.

mod affinity;
mod curve;
mod knn;
mod optimize;
mod trust;

pub use affinity::{fuzzy_affinities, membership_sum, AffinityGraph};
pub use curve::{fit_curve, CurveParams};
pub use knn::{knn_graph, KnnGraph};
pub use optimize::{optimize_layout, optimize_layout_observed, INIT_HALF_WIDTH};
pub use trust::trustworthiness;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const OUT_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub metric: Metric,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub negative_samples: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 15,
            min_dist: 0.1,
            metric: Metric::Cosine,
            epochs: 500,
            seed: 0,
            learning_rate: 1.0,
            negative_samples: 5,
        }
    }
}

impl ProjectionConfig {
    /// Checks parameter ranges against a dataset of `n` points.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.n_neighbors > 1 && self.n_neighbors < n) {
            return Err(Error::config(format!(
                "projection.n_neighbors must satisfy 1 < n_neighbors < n (n_neighbors = {}, n = {n})",
                self.n_neighbors
            )));
        }
        if !(self.min_dist > 0.0 && self.min_dist < 1.0) {
            return Err(Error::config("projection.min_dist must lie in (0, 1)"));
        }
        if self.epochs < 1 {
            return Err(Error::config("projection.epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("projection.learning_rate must be positive"));
        }
        Ok(())
    }
}

/// 3D coordinates, one row per embedding row.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection3D {
    pub coords: Vec<[f64; OUT_DIM]>,
    pub config: ProjectionConfig,
    pub seed: u64,
}

/// Runs k-NN, affinities and layout in sequence.
pub fn project(x: &EmbeddingMatrix, config: &ProjectionConfig) -> Result<Projection3D> {
    config.validate(x.len())?;
    let knn = knn_graph(x, config.n_neighbors)?;
    let graph = fuzzy_affinities(&knn);
    Ok(optimize_layout(&graph, config))
}
