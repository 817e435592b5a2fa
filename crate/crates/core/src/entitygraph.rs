//! Lexical layer: entity mentions, windowed co-occurrence, TF-IDF node
//! saliency and mixed edge weights.
//!
//! Sentences are the unit of everything here. Two entities co-occur once per
//! unordered pair of sentence indices `{s_e, s_f}` with `|s_e - s_f| < window`
//! where each is mentioned; the event's timestamp is the earlier sentence.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, SentenceRecord};
use crate::error::{read_to_string, Error, Result};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_ALPHA: f64 = 0.7;

/// Lowercase and collapse whitespace to single spaces.
pub fn canonical_entity(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityMention {
    pub entity: String,
    pub sentence_index: usize,
    /// Index of the first token of the mention in the sentence's token list.
    pub token_position: usize,
    /// Number of tokens the mention spans.
    pub token_len: usize,
}

impl EntityMention {
    fn token_end(&self) -> usize {
        self.token_position + self.token_len
    }
}

/// Known entity surface forms, stored as token sequences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    entries: BTreeMap<Vec<String>, String>,
    longest: usize,
}

impl Gazetteer {
    pub fn new<S: AsRef<str>>(forms: &[S]) -> Self {
        let mut g = Self::default();
        for f in forms {
            let toks = corpus::tokenize(f.as_ref());
            if toks.is_empty() {
                continue;
            }
            g.longest = g.longest.max(toks.len());
            let canonical = toks.join(" ");
            g.entries.insert(toks, canonical);
        }
        g
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let forms: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        Ok(Self::new(&forms))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical forms whose tokens include a stopword and so can never match
    /// a filtered token stream.
    pub fn unreachable(&self, stopwords: &BTreeSet<String>) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(toks, _)| toks.iter().any(|t| stopwords.contains(t)))
            .map(|(_, c)| c.as_str())
            .collect()
    }

    fn longest_match(&self, tokens: &[String], at: usize) -> Option<(usize, &str)> {
        let max = self.longest.min(tokens.len() - at);
        (1..=max).rev().find_map(|len| {
            self.entries
                .get(&tokens[at..at + len])
                .map(|c| (len, c.as_str()))
        })
    }
}

/// Dictionary mentions (longest match wins, no overlaps) over the filtered
/// tokens of retained sentences. With `heuristic`, any other capitalized
/// token that is not the first word of its sentence is also a mention.
pub fn extract_entities(
    records: &[SentenceRecord],
    gazetteer: &Gazetteer,
    heuristic: bool,
) -> Vec<EntityMention> {
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.retained) {
        let mut i = 0;
        while i < r.tokens.len() {
            if let Some((len, canonical)) = gazetteer.longest_match(&r.tokens, i) {
                out.push(EntityMention {
                    entity: canonical.to_string(),
                    sentence_index: r.index,
                    token_position: i,
                    token_len: len,
                });
                i += len;
                continue;
            }
            let capitalized = r.surface[i].chars().next().is_some_and(char::is_uppercase);
            if heuristic && capitalized && r.source_positions[i] != 0 {
                out.push(EntityMention {
                    entity: r.tokens[i].clone(),
                    sentence_index: r.index,
                    token_position: i,
                    token_len: 1,
                });
            }
            i += 1;
        }
    }
    out
}

pub fn load_entity_annotations(path: &Path) -> Result<Vec<EntityMention>> {
    let text = read_to_string(path)?;
    parse_entity_annotations(&text, &path.display().to_string())
}

/// Reads `<token> <sentence_index> <tag>` lines with BIO tags (`O`, `B-X`,
/// `I-X`). A token's position is its ordinal among the lines of its
/// sentence. Blank lines and `#` comments are skipped.
pub fn parse_entity_annotations(text: &str, origin: &str) -> Result<Vec<EntityMention>> {
    struct Open {
        kind: String,
        sentence: usize,
        start: usize,
        tokens: Vec<String>,
    }
    let mut out = Vec::new();
    let mut positions: HashMap<usize, usize> = HashMap::new();
    let mut open: Option<Open> = None;
    // (sentence, position) of the previous token line, for I- continuity.
    let mut prev: Option<(usize, usize)> = None;

    let close = |o: Open, out: &mut Vec<EntityMention>| {
        out.push(EntityMention {
            entity: canonical_entity(&o.tokens.join(" ")),
            sentence_index: o.sentence,
            token_position: o.start,
            token_len: o.tokens.len(),
        });
    };

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |reason: String| Error::parse(origin, lineno + 1, reason);
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let [token, sentence, tag] = fields[..] else {
            return Err(at("expected `<token> <sentence_index> <tag>`".into()));
        };
        let sentence: usize = sentence
            .parse()
            .map_err(|_| at(format!("`{sentence}` is not a sentence index")))?;
        let pos_slot = positions.entry(sentence).or_insert(0);
        let pos = *pos_slot;
        *pos_slot += 1;
        let contiguous = prev == Some((sentence, pos.wrapping_sub(1)));
        prev = Some((sentence, pos));

        if tag == "O" {
            if let Some(o) = open.take() {
                close(o, &mut out);
            }
        } else if let Some(kind) = tag.strip_prefix("B-") {
            if let Some(o) = open.take() {
                close(o, &mut out);
            }
            open = Some(Open {
                kind: kind.to_string(),
                sentence,
                start: pos,
                tokens: vec![token.to_string()],
            });
        } else if let Some(kind) = tag.strip_prefix("I-") {
            match open.as_mut() {
                Some(o) if o.kind == kind && contiguous => o.tokens.push(token.to_string()),
                _ => return Err(at(format!("`{tag}` does not continue a `{kind}` span"))),
            }
        } else {
            return Err(at(format!("unknown tag `{tag}`")));
        }
    }
    if let Some(o) = open.take() {
        close(o, &mut out);
    }
    out.sort();
    Ok(out)
}

/// Co-occurrence record of one entity pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cooccurrence {
    /// Unordered sentence pairs `(min, max)`, ascending.
    pub events: Vec<(usize, usize)>,
}

impl Cooccurrence {
    pub fn count(&self) -> usize {
        self.events.len()
    }

    /// Event timestamps (earlier sentence of each pair), ascending.
    pub fn timestamps(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.events.iter().map(|e| e.0).collect();
        t.sort_unstable();
        t
    }
}

fn sentences_by_entity(mentions: &[EntityMention]) -> BTreeMap<&str, BTreeSet<usize>> {
    let mut map: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for m in mentions {
        map.entry(m.entity.as_str()).or_default().insert(m.sentence_index);
    }
    map
}

/// Windowed sentence co-occurrence of every entity pair, keyed `(a, b)` with
/// `a < b`. Pairs without events are absent.
pub fn cooccurrence(
    mentions: &[EntityMention],
    window: usize,
) -> BTreeMap<(String, String), Cooccurrence> {
    assert!(window >= 1, "co-occurrence window must be at least 1");
    let by_entity = sentences_by_entity(mentions);
    let entities: Vec<(&str, &BTreeSet<usize>)> = by_entity.iter().map(|(k, v)| (*k, v)).collect();
    let mut out = BTreeMap::new();
    for (x, &(a, sa)) in entities.iter().enumerate() {
        for &(b, sb) in &entities[x + 1..] {
            let mut events = BTreeSet::new();
            for &s in sa {
                let lo = s.saturating_sub(window - 1);
                for &t in sb.range(lo..s + window) {
                    events.insert((s.min(t), s.max(t)));
                }
            }
            if !events.is_empty() {
                out.insert(
                    (a.to_string(), b.to_string()),
                    Cooccurrence {
                        events: events.into_iter().collect(),
                    },
                );
            }
        }
    }
    out
}

/// TF-IDF with sentences as documents: `tf = mentions(e) / all mentions`,
/// `idf = ln(n_sentences / sentences containing e)`.
pub fn tfidf_saliency(mentions: &[EntityMention], n_sentences: usize) -> BTreeMap<String, f64> {
    assert!(n_sentences >= 1, "tf-idf needs at least one sentence");
    let total = mentions.len() as f64;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in mentions {
        *counts.entry(m.entity.as_str()).or_default() += 1;
    }
    sentences_by_entity(mentions)
        .into_iter()
        .map(|(e, sentences)| {
            let tf = counts[e] as f64 / total;
            let idf = (n_sentences as f64 / sentences.len() as f64).ln();
            (e.to_string(), tf * idf)
        })
        .collect()
}

/// Token gap between two spans in one sentence, shifted so adjacent spans
/// give 0.
fn span_gap(x: &EntityMention, y: &EntityMention) -> usize {
    let gap = if y.token_position >= x.token_end() {
        y.token_position + 1 - x.token_end()
    } else if x.token_position >= y.token_end() {
        x.token_position + 1 - y.token_end()
    } else {
        0
    };
    gap.saturating_sub(1)
}

/// Closeness proxy standing in for syntactic dependency distance.
///
/// Over sentences mentioning both entities: the mean of the smallest token
/// gap between their mentions (adjacent = 0). With no shared sentence: the
/// mean sentence-index gap over the pair's co-occurrence events.
pub fn dependency_proxy(
    a: &str,
    b: &str,
    mentions: &[EntityMention],
    cooc: &Cooccurrence,
) -> Result<f64> {
    if cooc.events.is_empty() {
        return Err(Error::invariant(format!(
            "dependency proxy requested for non-co-occurring pair ({a}, {b})"
        )));
    }
    let mut by_sentence: BTreeMap<usize, (Vec<&EntityMention>, Vec<&EntityMention>)> = BTreeMap::new();
    for m in mentions {
        if m.entity == a {
            by_sentence.entry(m.sentence_index).or_default().0.push(m);
        } else if m.entity == b {
            by_sentence.entry(m.sentence_index).or_default().1.push(m);
        }
    }
    let shared: Vec<usize> = by_sentence
        .values()
        .filter(|(xs, ys)| !xs.is_empty() && !ys.is_empty())
        .map(|(xs, ys)| {
            xs.iter()
                .flat_map(|x| ys.iter().map(move |y| span_gap(x, y)))
                .min()
                .expect("both sides non-empty")
        })
        .collect();
    if !shared.is_empty() {
        return Ok(shared.iter().sum::<usize>() as f64 / shared.len() as f64);
    }
    let gaps: usize = cooc.events.iter().map(|(s, t)| t - s).sum();
    Ok(gaps as f64 / cooc.events.len() as f64)
}

/// `alpha * (cooc / max_cooc) + (1 - alpha) * (1 - proxy / max_proxy)`; the
/// closeness term is `1 - alpha` when `max_proxy == 0`.
pub fn edge_weight(cooc: usize, max_cooc: usize, proxy: f64, max_proxy: f64, alpha: f64) -> f64 {
    let freq = cooc as f64 / max_cooc as f64;
    let closeness = if max_proxy == 0.0 {
        1.0
    } else {
        1.0 - proxy / max_proxy
    };
    (alpha * freq + (1.0 - alpha) * closeness).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityNode {
    pub entity: String,
    pub saliency: f64,
    pub mention_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityEdge {
    pub entity_a: String,
    pub entity_b: String,
    pub cooc_count: usize,
    pub dep_proxy: f64,
    pub weight: f64,
    pub event_timestamps: Vec<usize>,
}

/// Undirected entity graph; nodes sorted by name, edges by `(a, b)`, `a < b`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntityGraph {
    pub nodes: Vec<EntityNode>,
    pub edges: Vec<EntityEdge>,
}

impl EntityGraph {
    /// Builds the graph from mentions in a corpus of `n_sentences`
    /// documents.
    pub fn build(mentions: &[EntityMention], n_sentences: usize, window: usize, alpha: f64) -> Result<Self> {
        if window < 1 {
            return Err(Error::config("entity.window must be at least 1"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config("entity.alpha must lie in [0, 1]"));
        }
        if mentions.is_empty() {
            return Ok(Self::default());
        }
        let saliency = tfidf_saliency(mentions, n_sentences.max(1));
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for m in mentions {
            *counts.entry(m.entity.as_str()).or_default() += 1;
        }
        let nodes = saliency
            .into_iter()
            .map(|(entity, saliency)| EntityNode {
                mention_count: counts[entity.as_str()],
                entity,
                saliency,
            })
            .collect();

        let cooc = cooccurrence(mentions, window);
        let mut raw = Vec::with_capacity(cooc.len());
        for ((a, b), c) in &cooc {
            let proxy = dependency_proxy(a, b, mentions, c)?;
            raw.push((a, b, c, proxy));
        }
        let max_cooc = raw.iter().map(|r| r.2.count()).max().unwrap_or(1);
        let max_proxy = raw.iter().map(|r| r.3).fold(0.0, f64::max);
        let edges = raw
            .into_iter()
            .map(|(a, b, c, proxy)| EntityEdge {
                entity_a: a.clone(),
                entity_b: b.clone(),
                cooc_count: c.count(),
                dep_proxy: proxy,
                weight: edge_weight(c.count(), max_cooc, proxy, max_proxy, alpha),
                event_timestamps: c.timestamps(),
            })
            .collect();
        Ok(Self { nodes, edges })
    }

    pub fn node_index(&self, entity: &str) -> Option<usize> {
        self.nodes
            .binary_search_by(|n| n.entity.as_str().cmp(entity))
            .ok()
    }

    /// Edge lookup in either argument order.
    pub fn edge(&self, a: &str, b: &str) -> Option<&EntityEdge> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.entity_a.as_str(), e.entity_b.as_str()).cmp(&(a, b)))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn total_events(&self) -> usize {
        self.edges.iter().map(|e| e.event_timestamps.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{segment, PreprocessConfig};
    use proptest::prelude::*;

    fn mention(e: &str, s: usize, p: usize) -> EntityMention {
        EntityMention {
            entity: e.into(),
            sentence_index: s,
            token_position: p,
            token_len: 1,
        }
    }

    #[test]
    fn longest_gazetteer_match() {
        let recs = segment("the butler saw Mr Gray", &PreprocessConfig::default());
        let g = Gazetteer::new(&["mr gray", "gray"]);
        let m = extract_entities(&recs, &g, false);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].entity, "mr gray");
        assert_eq!((m[0].token_position, m[0].token_len), (3, 2));
    }

    #[test]
    fn empty_gazetteer_without_heuristic() {
        let recs = segment("Nora met Hale.", &PreprocessConfig::default());
        assert!(extract_entities(&recs, &Gazetteer::default(), false).is_empty());
    }

    #[test]
    fn heuristic_skips_sentence_initial() {
        let cfg = PreprocessConfig {
            stopwords: ["the"].iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        };
        let recs = segment("Nora met Hale. The Butler left.", &cfg);
        let m = extract_entities(&recs, &Gazetteer::default(), true);
        let names: Vec<&str> = m.iter().map(|m| m.entity.as_str()).collect();
        assert_eq!(names, vec!["hale", "butler"]);
    }

    #[test]
    fn bio_merge_and_errors() {
        let m = parse_entity_annotations("saw 0 O\nMr 0 B-PER\nGray 0 I-PER\n", "t").unwrap();
        assert_eq!(m, vec![EntityMention {
            entity: "mr gray".into(),
            sentence_index: 0,
            token_position: 1,
            token_len: 2
        }]);
        match parse_entity_annotations("x 0 O\nGray 0 I-PER\n", "t").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        assert!(parse_entity_annotations("Mr 0 B-PER\nGray 1 I-PER\n", "t").is_err());
        assert!(parse_entity_annotations("Mr 0 B-LOC\nGray 0 I-PER\n", "t").is_err());
    }

    #[test]
    fn window_boundary_is_strict() {
        let c = cooccurrence(&[mention("e", 0, 0), mention("f", 5, 0)], 5);
        assert!(c.is_empty());
        let c = cooccurrence(&[mention("e", 0, 0), mention("f", 4, 0)], 5);
        assert_eq!(c[&("e".into(), "f".into())].events, vec![(0, 4)]);
    }

    #[test]
    fn same_sentence_counts_once() {
        let ms = [mention("e", 3, 0), mention("e", 3, 4), mention("f", 3, 2)];
        let c = cooccurrence(&ms, 5);
        let r = &c[&("e".into(), "f".into())];
        assert_eq!(r.count(), 1);
        assert_eq!(r.timestamps(), vec![3]);
    }

    #[test]
    fn tfidf_examples() {
        let everywhere = [mention("a", 0, 0), mention("a", 1, 0)];
        assert_eq!(tfidf_saliency(&everywhere, 2)["a"], 0.0);
        let ms = [mention("e", 1, 0), mention("e", 4, 0), mention("x", 2, 0), mention("y", 3, 0)];
        let s = tfidf_saliency(&ms, 10);
        assert!((s["e"] - 0.5 * 5f64.ln()).abs() < 1e-12);
        assert!((s["e"] - 0.8047).abs() < 1e-4);
        assert_eq!(tfidf_saliency(&[mention("solo", 0, 0)], 1)["solo"], 0.0);
    }

    #[test]
    fn proxy_examples() {
        let ms = [mention("a", 0, 2), mention("b", 0, 3)];
        let c = &cooccurrence(&ms, 5)[&("a".into(), "b".into())];
        assert_eq!(dependency_proxy("a", "b", &ms, c).unwrap(), 0.0);

        let ms = [mention("a", 1, 0), mention("b", 3, 0)];
        let c = &cooccurrence(&ms, 5)[&("a".into(), "b".into())];
        assert_eq!(dependency_proxy("a", "b", &ms, c).unwrap(), 2.0);

        let err = dependency_proxy("a", "b", &ms, &Cooccurrence::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn multi_token_spans_measure_edge_to_edge() {
        let mut gray = mention("mr gray", 0, 0);
        gray.token_len = 2;
        let butler = mention("butler", 0, 2);
        assert_eq!(span_gap(&gray, &butler), 0);
        assert_eq!(span_gap(&butler, &gray), 0);
    }

    #[test]
    fn edge_weight_examples() {
        assert_eq!(edge_weight(4, 4, 0.0, 3.0, 0.7), 1.0);
        assert!((edge_weight(4, 4, 3.0, 3.0, 0.7) - 0.7).abs() < 1e-12);
        assert!((edge_weight(2, 4, 1.5, 3.0, 0.7) - 0.5).abs() < 1e-12);
        assert!((edge_weight(4, 4, 0.0, 0.0, 0.7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graph_lookup_is_symmetric() {
        let ms = [mention("b", 0, 0), mention("a", 0, 3), mention("c", 9, 0)];
        let g = EntityGraph::build(&ms, 10, 5, 0.7).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edge("a", "b"), g.edge("b", "a"));
        assert!(g.edge("a", "c").is_none());
    }

    proptest! {
        #[test]
        fn tf_sums_to_one(raw in prop::collection::vec((0usize..4, 0usize..12), 1..40)) {
            let ms: Vec<EntityMention> = raw.iter().map(|&(e, s)| mention(&format!("e{e}"), s, 0)).collect();
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for m in &ms { *counts.entry(m.entity.clone()).or_default() += 1; }
            let tf: f64 = counts.values().map(|&c| c as f64 / ms.len() as f64).sum();
            prop_assert!((tf - 1.0).abs() < 1e-12);
            for v in tfidf_saliency(&ms, 12).values() {
                prop_assert!(*v >= 0.0);
            }
        }

        #[test]
        fn edge_weights_in_unit_interval(raw in prop::collection::vec((0usize..5, 0usize..20, 0usize..8), 2..40)) {
            let ms: Vec<EntityMention> = raw.iter().map(|&(e, s, p)| mention(&format!("e{e}"), s, p)).collect();
            let g = EntityGraph::build(&ms, 20, 5, 0.7).unwrap();
            for e in &g.edges {
                prop_assert!(e.entity_a < e.entity_b);
                prop_assert!((0.0..=1.0).contains(&e.weight));
                prop_assert!(!e.event_timestamps.is_empty());
                prop_assert!(e.event_timestamps.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(g.node_index(&e.entity_a).is_some() && g.node_index(&e.entity_b).is_some());
            }
        }
    }
}
