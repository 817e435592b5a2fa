//! Fixture loaders, data generators and brute-force oracles shared by the
//! integration tests. Nothing here calls into the algorithms it checks.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Non-comment, tab-separated rows of a fixture table.
pub fn tsv(name: &str) -> Vec<Vec<String>> {
    read_fixture(name)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedEdge {
    pub count: usize,
    pub timestamps: Vec<usize>,
    pub proxy: f64,
    pub weight: f64,
}

pub fn expected_edges() -> BTreeMap<(String, String), ExpectedEdge> {
    tsv("expected_cooccurrence.tsv")
        .into_iter()
        .map(|r| {
            let edge = ExpectedEdge {
                count: r[2].parse().unwrap(),
                timestamps: r[3].split(',').map(|t| t.parse().unwrap()).collect(),
                proxy: r[4].parse().unwrap(),
                weight: r[5].parse().unwrap(),
            };
            ((r[0].clone(), r[1].clone()), edge)
        })
        .collect()
}

/// `(entity, sentence, position, length)` rows.
pub fn expected_mentions() -> Vec<(String, usize, usize, usize)> {
    tsv("expected_mentions.tsv")
        .into_iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect()
}

pub fn expected_saliency() -> BTreeMap<String, (usize, f64)> {
    tsv("expected_saliency.tsv")
        .into_iter()
        .map(|r| (r[0].clone(), (r[1].parse().unwrap(), r[2].parse().unwrap())))
        .collect()
}

pub fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect()).collect()
}

/// Three clusters in `d` dimensions around `sqrt(2) * e_k` (pairwise center
/// distance 2) with per-coordinate standard deviation `std`.
pub fn three_cluster_rows(n: usize, d: usize, std: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % 3;
        let mut v: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
        v[k] += 2f64.sqrt();
        rows.push(v);
        labels.push(k);
    }
    (rows, labels)
}

/// Radially peaked 2D blobs: exponential radius, uniform angle.
pub fn peaked_blobs(centers: &[[f64; 2]], per_blob: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = Exp::new(1.0).unwrap();
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            let r: f64 = radius.sample(&mut rng);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            pts.push([c[0] + r * t.cos(), c[1] + r * t.sin()]);
            labels.push(k);
        }
    }
    (pts, labels)
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let uu: f64 = u.iter().map(|a| a * a).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    (1.0 - dot / (uu * vv).sqrt()).clamp(0.0, 2.0)
}

/// Exhaustive k-NN: full sort of every other point by `(distance, index)`.
pub fn brute_knn(rows: &[Vec<f64>], k: usize) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let mut idx = Vec::new();
    let mut dist = Vec::new();
    for (i, u) in rows.iter().enumerate() {
        let mut all: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, v)| (cosine(u, v), j))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        idx.push(all[..k].iter().map(|p| p.1).collect());
        dist.push(all[..k].iter().map(|p| p.0).collect());
    }
    (idx, dist)
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Gaussian-kernel density by direct summation.
pub fn brute_density<P: AsRef<[f64]>>(pts: &[P], dc: f64) -> Vec<f64> {
    (0..pts.len())
        .map(|i| {
            (0..pts.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let d = euclid(pts[i].as_ref(), pts[j].as_ref()) / dc;
                    (-d * d).exp()
                })
                .sum()
        })
        .collect()
}

/// Adjusted Rand Index from the contingency table.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mut table: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut ra: BTreeMap<usize, f64> = BTreeMap::new();
    let mut rb: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *ra.entry(x).or_default() += 1.0;
        *rb.entry(y).or_default() += 1.0;
    }
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let index: f64 = table.values().map(|&v| c2(v)).sum();
    let sa: f64 = ra.values().map(|&v| c2(v)).sum();
    let sb: f64 = rb.values().map(|&v| c2(v)).sum();
    let expected = sa * sb / c2(n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Random simple graph with `m` distinct edges and weights in `[0.2, 1)`.
pub fn random_graph(n: usize, m: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = BTreeMap::new();
    while edges.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            let key = (a.min(b), a.max(b));
            let w = rng.gen_range(0.2..1.0);
            edges.entry(key).or_insert(w);
        }
    }
    edges.into_iter().map(|((a, b), w)| (a, b, w)).collect()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}
