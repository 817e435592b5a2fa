//! Sentence vectors: loading precomputed embeddings, a deterministic
//! bag-of-hashed-tokens fallback, and the cosine distance.
//!
//! Vector file format (UTF-8, one record per line):
//!
//! ```text
//! dim=<d> count=<n> normalized=<0|1>
//! <sentence_index> <v1> ... <vd>
//! ```
//!
//! Values are decimal reals. `count` must equal the number of data lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{read_to_string, Error, Result};

pub const DEFAULT_DIM: usize = 384;
const UNIT_NORM_TOL: f64 = 1e-6;

/// Row-major `n x dim` matrix of sentence vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
    row_index: Vec<usize>,
    normalized: bool,
}

impl EmbeddingMatrix {
    /// Builds a matrix from `(sentence_index, vector)` rows, checking
    /// dimensions and finiteness.
    pub fn from_rows(dim: usize, rows: Vec<(usize, Vec<f64>)>, normalized: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("embedding dimension must be positive"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        let mut row_index = Vec::with_capacity(rows.len());
        for (r, (idx, v)) in rows.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    found: v.len(),
                    expected: dim,
                });
            }
            if let Some(col) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row: r, col });
            }
            data.extend_from_slice(&v);
            row_index.push(idx);
        }
        let m = Self {
            dim,
            data,
            row_index,
            normalized,
        };
        if normalized {
            for r in 0..m.len() {
                let n = norm(m.row(r));
                if (n - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::invariant(format!(
                        "row {r} flagged normalized but has norm {n}"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.row_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_index.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Matrix row -> sentence index.
    pub fn row_index(&self) -> &[usize] {
        &self.row_index
    }

    /// Scales every non-zero row to unit length.
    pub fn normalize(mut self) -> Self {
        for row in self.data.chunks_exact_mut(self.dim) {
            let n = norm(row);
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
        self.normalized = true;
        self
    }

    /// Serializes in the vector file format. Reals are written in shortest
    /// round-trip form, so [`parse_embeddings`] restores them exactly.
    pub fn to_vector_file(&self) -> String {
        let mut out = format!(
            "dim={} count={} normalized={}\n",
            self.dim,
            self.len(),
            u8::from(self.normalized)
        );
        for (r, idx) in self.row_index.iter().enumerate() {
            write!(out, "{idx}").unwrap();
            for x in self.row(r) {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Loads a vector file and aligns it with the retained sentences.
///
/// The returned matrix has one row per entry of `retained`, in that order.
/// Rows for sentences that are not retained are ignored with a warning.
pub fn load_embeddings(path: &Path, expected_dim: usize, retained: &[usize]) -> Result<EmbeddingMatrix> {
    let text = read_to_string(path)?;
    parse_embeddings(&text, &path.display().to_string(), expected_dim, retained)
}

pub fn parse_embeddings(
    text: &str,
    origin: &str,
    expected_dim: usize,
    retained: &[usize],
) -> Result<EmbeddingMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "missing header line"))?;
    let header = parse_header(header).map_err(|reason| Error::parse(origin, 1, reason))?;
    if header.dim != expected_dim {
        return Err(Error::DimensionMismatch {
            found: header.dim,
            expected: expected_dim,
        });
    }

    let mut by_index: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut data_rows = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = data_rows;
        data_rows += 1;
        let mut fields = line.split_ascii_whitespace();
        let idx: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::parse(origin, lineno + 1, "expected a sentence index"))?;
        let mut v = Vec::with_capacity(header.dim);
        for (col, f) in fields.enumerate() {
            let x: f64 = f.parse().map_err(|_| {
                Error::parse(origin, lineno + 1, format!("column {col}: `{f}` is not a number"))
            })?;
            if !x.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            v.push(x);
        }
        if v.len() != header.dim {
            return Err(Error::DimensionMismatch {
                found: v.len(),
                expected: header.dim,
            });
        }
        if by_index.insert(idx, v).is_some() {
            return Err(Error::parse(
                origin,
                lineno + 1,
                format!("duplicate row for sentence {idx}"),
            ));
        }
    }
    if data_rows != header.count {
        return Err(Error::parse(
            origin,
            text.lines().count(),
            format!("header declares {} rows, found {}", header.count, data_rows),
        ));
    }

    let wanted: BTreeSet<usize> = retained.iter().copied().collect();
    let missing: Vec<usize> = retained
        .iter()
        .copied()
        .filter(|i| !by_index.contains_key(i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingRows { indices: missing });
    }
    let extra: Vec<usize> = by_index.keys().copied().filter(|i| !wanted.contains(i)).collect();
    if !extra.is_empty() {
        log::warn!("{origin}: ignoring rows for non-retained sentences {extra:?}");
    }
    let rows = retained
        .iter()
        .map(|i| (*i, by_index.remove(i).expect("checked above")))
        .collect();
    EmbeddingMatrix::from_rows(header.dim, rows, header.normalized)
}

struct Header {
    dim: usize,
    count: usize,
    normalized: bool,
}

fn parse_header(line: &str) -> std::result::Result<Header, String> {
    let mut dim = None;
    let mut count = None;
    let mut normalized = None;
    for field in line.split_ascii_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{field}`"))?;
        let bad = || format!("bad value in header field `{field}`");
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|_| bad())?),
            "count" => count = Some(v.parse::<usize>().map_err(|_| bad())?),
            "normalized" => {
                normalized = Some(match v {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                })
            }
            _ => return Err(format!("unknown header field `{k}`")),
        }
    }
    match (dim, count, normalized) {
        (Some(dim), Some(count), Some(normalized)) if dim > 0 => Ok(Header {
            dim,
            count,
            normalized,
        }),
        _ => Err("header must be `dim=<d> count=<n> normalized=<0|1>`".into()),
    }
}

/// Output of [`fallback_embed`].
#[derive(Debug, Clone, PartialEq)]
pub struct FallbackVector {
    pub vector: Vec<f64>,
    /// Set when the token list was empty and the vector is all zeros.
    pub empty: bool,
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn token_direction(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()) ^ seed.rotate_left(32));
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Deterministic bag-of-hashed-tokens embedding.
///
/// Each token maps to a seeded pseudo-random unit direction; the directions
/// are summed and the sum is L2-normalized.
pub fn fallback_embed<S: AsRef<str>>(tokens: &[S], dim: usize, seed: u64) -> FallbackVector {
    assert!(dim >= 1, "embedding dimension must be positive");
    let mut acc = vec![0.0; dim];
    for t in tokens {
        for (a, d) in acc.iter_mut().zip(token_direction(t.as_ref(), dim, seed)) {
            *a += d;
        }
    }
    let n = norm(&acc);
    if tokens.is_empty() || n == 0.0 {
        return FallbackVector {
            vector: vec![0.0; dim],
            empty: true,
        };
    }
    acc.iter_mut().for_each(|x| *x /= n);
    FallbackVector {
        vector: acc,
        empty: false,
    }
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    assert_eq!(u.len(), v.len(), "cosine_distance on vectors of different dimension");
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    // sqrt(uu*vv) rather than sqrt(uu)*sqrt(vv): exact for u == v.
    Ok((1.0 - dot / (uu * vv).sqrt()).clamp(0.0, 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture_text(rows: usize, dim: usize) -> String {
        let mut s = format!("dim={dim} count={rows} normalized=0\n");
        for r in 0..rows {
            s.push_str(&r.to_string());
            for c in 0..dim {
                s.push_str(&format!(" {}", (r * dim + c) as f64 * 0.25 + 1.0));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn cosine_basics() {
        let u = [0.3, -1.2, 4.0];
        assert_eq!(cosine_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert_eq!(cosine_distance(&u, &neg).unwrap(), 2.0);
        assert!(matches!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn fallback_is_deterministic_and_scale_free() {
        let a = fallback_embed(&["butler", "silver"], 16, 7);
        let b = fallback_embed(&["butler", "silver"], 16, 7);
        assert_eq!(a, b);
        let one = fallback_embed(&["a"], 8, 1);
        let two = fallback_embed(&["a", "a"], 8, 1);
        assert!(cosine_distance(&one.vector, &two.vector).unwrap() < 1e-12);
    }

    #[test]
    fn fallback_empty_tokens_flagged() {
        let v = fallback_embed::<&str>(&[], 4, 1);
        assert!(v.empty);
        assert_eq!(v.vector, vec![0.0; 4]);
    }

    #[test]
    fn missing_row_is_named() {
        let text = fixture_text(3, 2);
        let err = parse_embeddings(&text, "t", 2, &[0, 1, 2, 3]).unwrap_err();
        match err {
            Error::MissingRows { indices } => assert_eq!(indices, vec![3]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_reports_both() {
        let err = parse_embeddings(&fixture_text(2, 3), "t", 384, &[0, 1]).unwrap_err();
        match err {
            Error::DimensionMismatch { found, expected } => {
                assert_eq!((found, expected), (3, 384))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_reports_position() {
        let mut lines: Vec<String> = fixture_text(6, 20).lines().map(String::from).collect();
        let mut fields: Vec<String> = lines[5].split(' ').map(String::from).collect();
        fields[18] = "NaN".into();
        lines[5] = fields.join(" ");
        let err = parse_embeddings(&lines.join("\n"), "t", 20, &[0, 1, 2, 3, 4, 5]).unwrap_err();
        match err {
            Error::NonFinite { row, col } => assert_eq!((row, col), (4, 17)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_or_malformed_files_fail() {
        let text = fixture_text(3, 2);
        let truncated: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            parse_embeddings(&truncated, "t", 2, &[0, 1]),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_embeddings("dim=2 count=x normalized=0\n", "t", 2, &[]),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn non_retained_rows_are_ignored() {
        let m = parse_embeddings(&fixture_text(3, 2), "t", 2, &[0, 2]).unwrap();
        assert_eq!(m.row_index(), &[0, 2]);
        assert_eq!(m.row(1), &[4.0 * 0.25 + 1.0, 5.0 * 0.25 + 1.0]);
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in prop::collection::vec(-5.0f64..5.0, 6),
            v in prop::collection::vec(-5.0f64..5.0, 6),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            prop_assume!(norm(&u) > 1e-3 && norm(&v) > 1e-3);
            let d = cosine_distance(&u, &v).unwrap();
            prop_assert_eq!(d, cosine_distance(&v, &u).unwrap());
            let su: Vec<f64> = u.iter().map(|x| x * a).collect();
            let sv: Vec<f64> = v.iter().map(|x| x * b).collect();
            prop_assert!((d - cosine_distance(&su, &sv).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn fallback_has_unit_norm(tokens in prop::collection::vec("[a-z]{1,6}", 1..12), seed in any::<u64>()) {
            let v = fallback_embed(&tokens, 32, seed);
            prop_assume!(!v.empty);
            prop_assert!((norm(&v.vector) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn vector_file_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..8)) {
            let indexed: Vec<(usize, Vec<f64>)> = rows.into_iter().enumerate().collect();
            let retained: Vec<usize> = indexed.iter().map(|(i, _)| *i).collect();
            let m = EmbeddingMatrix::from_rows(4, indexed, false).unwrap();
            let back = parse_embeddings(&m.to_vector_file(), "rt", 4, &retained).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
