use crate::embedding::{cosine_distance, EmbeddingMatrix};
use crate::error::{Error, Result};

use super::OUT_DIM;

/// Trustworthiness of a projection: penalizes points that are among the `k`
/// nearest in the projection but not in the original space, weighted by how
/// far down the original ranking they sit.
///
/// Original-space ranks use the cosine distance; projected neighbours use the
/// Euclidean distance. Ties go to the lower index in both spaces.
pub fn trustworthiness(x: &EmbeddingMatrix, y: &[[f64; OUT_DIM]], k: usize) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::config(format!(
            "trustworthiness needs equal row counts ({n} vs {})",
            y.len()
        )));
    }
    if k == 0 || 2 * k >= n {
        return Err(Error::config(format!(
            "trustworthiness needs 1 <= k < n/2 (k = {k}, n = {n})"
        )));
    }

    let mut penalty = 0.0f64;
    let mut rank = vec![0usize; n];
    for i in 0..n {
        let mut orig: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| cosine_distance(x.row(i), x.row(j)).map(|d| (d, j)))
            .collect::<Result<_>>()?;
        orig.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (r, &(_, j)) in orig.iter().enumerate() {
            rank[j] = r + 1;
        }

        let mut proj: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d2: f64 = y[i].iter().zip(&y[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, j)
            })
            .collect();
        proj.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in proj.iter().take(k) {
            if rank[j] > k {
                penalty += (rank[j] - k) as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * penalty)
}
