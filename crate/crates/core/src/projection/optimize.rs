use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::affinity::AffinityGraph;
use super::curve::{fit_curve, CurveParams};
use super::{Projection3D, ProjectionConfig, OUT_DIM};

/// Initial coordinates are uniform in `[-INIT_HALF_WIDTH, INIT_HALF_WIDTH]^3`.
pub const INIT_HALF_WIDTH: f64 = 10.0;
const GRAD_CLIP: f64 = 4.0;
const REPULSION_STRENGTH: f64 = 1.0;
const SPREAD: f64 = 1.0;

type Point = [f64; OUT_DIM];

fn clip(x: f64) -> f64 {
    x.clamp(-GRAD_CLIP, GRAD_CLIP)
}

fn dist_sq(p: &Point, q: &Point) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Seeded SGD layout of the affinity graph. See [`optimize_layout_observed`].
pub fn optimize_layout(graph: &AffinityGraph, config: &ProjectionConfig) -> Projection3D {
    optimize_layout_observed(graph, config, |_, _| {})
}

/// Same as [`optimize_layout`], calling `observe(epoch, coords)` after every
/// epoch.
///
/// Edges are sampled every `max_w / w` epochs, so strong memberships are
/// visited more often; edges weaker than `max_w / epochs` are never sampled.
/// Each sampled edge pulls both endpoints together and pushes its head away
/// from `negative_samples`-proportional uniform random points. The learning
/// rate decays linearly to zero. A single generator drives initialization
/// and negative sampling in a fixed order, so output bits depend only on
/// `(graph, config)`.
pub fn optimize_layout_observed<F>(
    graph: &AffinityGraph,
    config: &ProjectionConfig,
    mut observe: F,
) -> Projection3D
where
    F: FnMut(usize, &[Point]),
{
    let n = graph.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y: Vec<Point> = (0..n)
        .map(|_| {
            let mut p = [0.0; OUT_DIM];
            for c in &mut p {
                *c = rng.gen_range(-INIT_HALF_WIDTH..INIT_HALF_WIDTH);
            }
            p
        })
        .collect();

    let CurveParams { a, b } = fit_curve(config.min_dist, SPREAD);

    let mut edges: Vec<(usize, usize, f64)> = graph
        .neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j, w)))
        .collect();
    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let epochs = config.epochs;
    edges.retain(|e| e.2 >= max_w / epochs as f64);

    let per_sample: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let per_negative: Vec<f64> = per_sample
        .iter()
        .map(|s| s / config.negative_samples.max(1) as f64)
        .collect();
    let mut next_sample = per_sample.clone();
    let mut next_negative = per_negative.clone();

    for epoch in 0..epochs {
        let alpha = config.learning_rate * (1.0 - epoch as f64 / epochs as f64);
        let now = epoch as f64;
        for (e, &(i, j, _)) in edges.iter().enumerate() {
            if next_sample[e] > now {
                continue;
            }
            let d2 = dist_sq(&y[i], &y[j]);
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            for d in 0..OUT_DIM {
                let g = clip(coeff * (y[i][d] - y[j][d]));
                y[i][d] += g * alpha;
                y[j][d] -= g * alpha;
            }
            next_sample[e] += per_sample[e];

            if config.negative_samples == 0 {
                continue;
            }
            let n_neg = ((now - next_negative[e]) / per_negative[e]).max(0.0) as usize;
            for _ in 0..n_neg {
                let k = rng.gen_range(0..n);
                let d2 = dist_sq(&y[i], &y[k]);
                let coeff = if d2 > 0.0 {
                    2.0 * REPULSION_STRENGTH * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0))
                } else if i == k {
                    continue;
                } else {
                    0.0
                };
                if coeff > 0.0 {
                    for d in 0..OUT_DIM {
                        let g = clip(coeff * (y[i][d] - y[k][d]));
                        y[i][d] += g * alpha;
                    }
                }
            }
            next_negative[e] += n_neg as f64 * per_negative[e];
        }
        observe(epoch, &y);
    }

    Projection3D {
        coords: y,
        config: config.clone(),
        seed: config.seed,
    }
}
