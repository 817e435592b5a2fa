use rayon::prelude::*;

use crate::embedding::{cosine_distance, EmbeddingMatrix};
use crate::error::{Error, Result};

/// Exact k nearest neighbours of every point, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub k: usize,
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl KnnGraph {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Exact cosine k-NN. Self is excluded and ties go to the lower index.
///
/// Rows are processed in parallel; each row's result depends only on the
/// input, so the output is identical to a sequential scan.
pub fn knn_graph(x: &EmbeddingMatrix, k: usize) -> Result<KnnGraph> {
    let n = x.len();
    if n <= k {
        return Err(Error::config(format!(
            "k-NN needs more points than neighbours (n = {n}, k = {k})"
        )));
    }
    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| cosine_distance(x.row(i), x.row(j)).map(|d| (d, j)))
                .collect::<Result<_>>()?;
            let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k, by_key);
                cand.truncate(k);
            }
            cand.sort_by(by_key);
            Ok(cand.into_iter().map(|(d, j)| (j, d)).unzip())
        })
        .collect::<Result<_>>()?;
    let (indices, distances) = rows.into_iter().unzip();
    Ok(KnnGraph {
        k,
        indices,
        distances,
    })
}
