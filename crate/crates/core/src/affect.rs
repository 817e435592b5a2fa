//! Binary sentiment per retained sentence.
//!
//! Labels come either from an external classifier output file
//! (`<sentence_index> <label> [score]` per line) or from a valence lexicon.
//! Label 1 is positive, 0 negative, and `label == 1` exactly when
//! `score >= 0`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentSource {
    External,
    Lexicon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sentiment {
    pub label: u8,
    pub score: f64,
}

impl Sentiment {
    pub fn from_score(score: f64) -> Self {
        Self {
            label: u8::from(score >= 0.0),
            score,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLabels {
    pub by_sentence: BTreeMap<usize, Sentiment>,
    pub source: SentimentSource,
}

impl SentimentLabels {
    pub fn get(&self, sentence: usize) -> Option<Sentiment> {
        self.by_sentence.get(&sentence).copied()
    }
}

pub fn load_sentiment(path: &Path, retained: &[usize]) -> Result<SentimentLabels> {
    let text = read_to_string(path)?;
    parse_sentiment(&text, &path.display().to_string(), retained)
}

/// Parses classifier output. A missing score defaults to `+1` / `-1` by
/// label. Lines for sentences outside `retained` are ignored with a warning.
pub fn parse_sentiment(text: &str, origin: &str, retained: &[usize]) -> Result<SentimentLabels> {
    let wanted: BTreeSet<usize> = retained.iter().copied().collect();
    let mut by_sentence = BTreeMap::new();
    let mut ignored = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |reason: String| Error::parse(origin, lineno + 1, reason);
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(at("expected `<sentence_index> <label> [score]`".into()));
        }
        let idx: usize = fields[0]
            .parse()
            .map_err(|_| at(format!("`{}` is not a sentence index", fields[0])))?;
        let label: u8 = match fields[1] {
            "0" => 0,
            "1" => 1,
            other => return Err(at(format!("label `{other}` is not 0 or 1"))),
        };
        let score = match fields.get(2) {
            None => {
                if label == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            Some(s) => {
                let v: f64 = s.parse().map_err(|_| at(format!("`{s}` is not a score")))?;
                if !(-1.0..=1.0).contains(&v) {
                    return Err(at(format!("score {v} outside [-1, 1]")));
                }
                if (v >= 0.0) != (label == 1) {
                    return Err(at(format!("score {v} contradicts label {label}")));
                }
                v
            }
        };
        if !wanted.contains(&idx) {
            ignored.push(idx);
            continue;
        }
        if by_sentence.insert(idx, Sentiment { label, score }).is_some() {
            return Err(at(format!("duplicate label for sentence {idx}")));
        }
    }
    if !ignored.is_empty() {
        log::warn!("{origin}: ignoring labels for non-retained sentences {ignored:?}");
    }
    if let Some(missing) = retained.iter().find(|i| !by_sentence.contains_key(i)) {
        return Err(Error::parse(
            origin,
            text.lines().count(),
            format!("no label for retained sentence {missing}"),
        ));
    }
    Ok(SentimentLabels {
        by_sentence,
        source: SentimentSource::External,
    })
}

/// Token valences in `[-1, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    valence: HashMap<String, f64>,
}

impl Lexicon {
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            valence: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.valence.get(token).copied()
    }

    pub fn negated(&self) -> Self {
        Self {
            valence: self.valence.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `<token> <valence>` per line; `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut valence = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_ascii_whitespace();
            let (Some(tok), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::parse(origin, lineno + 1, "expected `<token> <valence>`"));
            };
            let v: f64 = v
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(origin, lineno + 1, format!("bad valence `{v}`")))?;
            valence.insert(tok.to_lowercase(), v);
        }
        Ok(Self { valence })
    }
}

/// Mean valence of the matched tokens, clamped to `[-1, 1]`. No matches
/// score 0, which labels positive.
pub fn lexicon_sentiment<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Sentiment {
    let (sum, hits) = tokens
        .iter()
        .filter_map(|t| lexicon.get(t.as_ref()))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    Sentiment::from_score((sum / hits.max(1) as f64).clamp(-1.0, 1.0))
}
