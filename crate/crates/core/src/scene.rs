//! The scene document: both layers, their cross-links and provenance, with
//! canonical JSON serialization.
//!
//! Serialization is canonical because every map is a `BTreeMap` and struct
//! fields serialize in declaration order; floats use the shortest decimal
//! that round-trips.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entitygraph::{EntityEdge, EntityGraph};
use crate::error::{Error, Result};
use crate::forcelayout::Point;

pub const SCENE_VERSION: &str = "semtopo/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticNode {
    pub sentence_index: usize,
    pub position: [f64; 3],
    pub cluster: usize,
    pub sentiment_label: u8,
    pub sentiment_score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityNodeDoc {
    pub entity: String,
    pub saliency: f64,
    pub mention_count: usize,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityLayer {
    /// Layout dimensionality; with 2 every `z` is 0.
    pub dim: usize,
    pub nodes: Vec<EntityNodeDoc>,
    pub edges: Vec<EntityEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossLink {
    pub edge_ref: (String, String),
    pub timestamp: usize,
    pub semantic_node_ref: usize,
}

/// Sentiment-to-color mapping shipped with the scene: linear RGB
/// interpolation from `cool` at `score_min` to `warm` at `score_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Palette {
    pub name: String,
    pub score_min: f64,
    pub score_max: f64,
    pub cool: [u8; 3],
    pub warm: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            name: "cool-warm".into(),
            score_min: -1.0,
            score_max: 1.0,
            cool: [59, 76, 192],
            warm: [180, 4, 38],
        }
    }
}

impl Palette {
    pub fn color(&self, score: f64) -> [u8; 3] {
        let t = ((score - self.score_min) / (self.score_max - self.score_min)).clamp(0.0, 1.0);
        let mut out = [0u8; 3];
        for k in 0..3 {
            let (c, w) = (f64::from(self.cool[k]), f64::from(self.warm[k]));
            out[k] = (c + t * (w - c)).round() as u8;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkStats {
    pub accepted: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub generator: String,
    /// Full effective configuration.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Input files keyed by role (`corpus`, `embeddings`, ...).
    pub inputs: BTreeMap<String, InputDigest>,
    pub link_stats: LinkStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub version: String,
    pub provenance: Provenance,
    pub palette: Palette,
    pub semantic_layer: Vec<SemanticNode>,
    pub entity_layer: EntityLayer,
    pub links: Vec<CrossLink>,
}

/// One link per `(edge, event timestamp)` whose sentence has a semantic
/// node. Events pointing at a dropped sentence are skipped with a warning
/// and counted.
pub fn link_layers(semantic: &[SemanticNode], graph: &EntityGraph) -> (Vec<CrossLink>, LinkStats) {
    let present: BTreeSet<usize> = semantic.iter().map(|n| n.sentence_index).collect();
    let mut links = Vec::new();
    let mut stats = LinkStats::default();
    let mut skipped = Vec::new();
    for e in &graph.edges {
        for &t in &e.event_timestamps {
            if present.contains(&t) {
                links.push(CrossLink {
                    edge_ref: (e.entity_a.clone(), e.entity_b.clone()),
                    timestamp: t,
                    semantic_node_ref: t,
                });
                stats.accepted += 1;
            } else {
                skipped.push(format!("({}, {})@{t}", e.entity_a, e.entity_b));
            }
        }
    }
    stats.skipped = skipped.len();
    if !skipped.is_empty() {
        log::warn!(
            "skipped {} links to non-retained sentences: {}",
            skipped.len(),
            skipped.join(" ")
        );
    }
    (links, stats)
}

/// Assembles and validates a document. `positions` follows the order of
/// `graph.nodes`.
pub fn build_scene(
    semantic_layer: Vec<SemanticNode>,
    graph: &EntityGraph,
    positions: &[Point],
    dim: usize,
    mut provenance: Provenance,
) -> Result<SceneDocument> {
    if semantic_layer.is_empty() {
        return Err(Error::NoRetainedSentences);
    }
    if positions.len() != graph.nodes.len() {
        return Err(Error::invariant(format!(
            "{} entity positions for {} entities",
            positions.len(),
            graph.nodes.len()
        )));
    }
    let (links, stats) = link_layers(&semantic_layer, graph);
    provenance.link_stats = stats;
    let nodes = graph
        .nodes
        .iter()
        .zip(positions)
        .map(|(n, p)| EntityNodeDoc {
            entity: n.entity.clone(),
            saliency: n.saliency,
            mention_count: n.mention_count,
            position: *p,
        })
        .collect();
    let doc = SceneDocument {
        version: SCENE_VERSION.into(),
        provenance,
        palette: Palette::default(),
        semantic_layer,
        entity_layer: EntityLayer {
            dim,
            nodes,
            edges: graph.edges.clone(),
        },
        links,
    };
    validate(&doc)?;
    Ok(doc)
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        reason: reason.into(),
    }
}

fn check_finite(path: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(schema(path, "non-finite coordinate"))
    }
}

/// Value domains, referential integrity across layers and link
/// conservation.
pub fn validate(doc: &SceneDocument) -> Result<()> {
    if doc.version != SCENE_VERSION {
        return Err(Error::Version {
            found: doc.version.clone(),
        });
    }
    let p = &doc.palette;
    if !(p.score_min.is_finite() && p.score_max.is_finite() && p.score_min < p.score_max) {
        return Err(schema("palette", "score range must be finite and increasing"));
    }

    let mut sentences = BTreeSet::new();
    for (i, n) in doc.semantic_layer.iter().enumerate() {
        let at = |field: &str| format!("semantic_layer[{i}].{field}");
        if !sentences.insert(n.sentence_index) {
            return Err(schema(at("sentence_index"), format!("duplicate sentence {}", n.sentence_index)));
        }
        check_finite(&at("position"), &n.position)?;
        if n.sentiment_label > 1 {
            return Err(schema(at("sentiment_label"), "label must be 0 or 1"));
        }
        if !(-1.0..=1.0).contains(&n.sentiment_score) {
            return Err(schema(at("sentiment_score"), "score outside [-1, 1]"));
        }
        if (n.sentiment_score >= 0.0) != (n.sentiment_label == 1) {
            return Err(schema(at("sentiment_label"), "label disagrees with score sign"));
        }
    }

    let layer = &doc.entity_layer;
    if !matches!(layer.dim, 2 | 3) {
        return Err(schema("entity_layer.dim", "must be 2 or 3"));
    }
    let mut entities = BTreeSet::new();
    for (i, n) in layer.nodes.iter().enumerate() {
        let at = |field: &str| format!("entity_layer.nodes[{i}].{field}");
        if !entities.insert(n.entity.as_str()) {
            return Err(schema(at("entity"), format!("duplicate entity `{}`", n.entity)));
        }
        if !(n.saliency >= 0.0 && n.saliency.is_finite()) {
            return Err(schema(at("saliency"), "saliency must be finite and >= 0"));
        }
        check_finite(&at("position"), &n.position)?;
        if layer.dim == 2 && n.position[2] != 0.0 {
            return Err(schema(at("position"), "planar layout with non-zero z"));
        }
    }

    let mut edges: BTreeMap<(&str, &str), &EntityEdge> = BTreeMap::new();
    let mut total_events = 0;
    for (i, e) in layer.edges.iter().enumerate() {
        let at = |field: &str| format!("entity_layer.edges[{i}].{field}");
        if e.entity_a >= e.entity_b {
            return Err(schema(at("entity_b"), "endpoints must satisfy entity_a < entity_b"));
        }
        for end in [&e.entity_a, &e.entity_b] {
            if !entities.contains(end.as_str()) {
                return Err(Error::DanglingReference(format!("{} names unknown entity `{end}`", at("entity"))));
            }
        }
        if edges.insert((&e.entity_a, &e.entity_b), e).is_some() {
            return Err(schema(at("entity_a"), "duplicate edge"));
        }
        if e.event_timestamps.is_empty() || e.event_timestamps.len() != e.cooc_count {
            return Err(schema(at("event_timestamps"), "must hold cooc_count >= 1 timestamps"));
        }
        if e.event_timestamps.windows(2).any(|w| w[0] > w[1]) {
            return Err(schema(at("event_timestamps"), "timestamps must be ascending"));
        }
        if !(0.0..=1.0).contains(&e.weight) {
            return Err(schema(at("weight"), "weight outside [0, 1]"));
        }
        if !(e.dep_proxy >= 0.0 && e.dep_proxy.is_finite()) {
            return Err(schema(at("dep_proxy"), "proxy must be finite and >= 0"));
        }
        total_events += e.event_timestamps.len();
    }

    let mut linked: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, l) in doc.links.iter().enumerate() {
        let key = (l.edge_ref.0.as_str(), l.edge_ref.1.as_str());
        if !edges.contains_key(&key) {
            return Err(Error::DanglingReference(format!(
                "links[{i}].edge_ref ({}, {}) is not an edge",
                key.0, key.1
            )));
        }
        if !sentences.contains(&l.semantic_node_ref) {
            return Err(Error::DanglingReference(format!(
                "links[{i}].semantic_node_ref {} is not a semantic node",
                l.semantic_node_ref
            )));
        }
        if l.semantic_node_ref != l.timestamp {
            return Err(Error::DanglingReference(format!(
                "links[{i}].semantic_node_ref {} differs from its timestamp {}",
                l.semantic_node_ref, l.timestamp
            )));
        }
        linked.entry(key).or_default().push(l.timestamp);
    }
    for (key, e) in &edges {
        let expected: Vec<usize> = e
            .event_timestamps
            .iter()
            .copied()
            .filter(|t| sentences.contains(t))
            .collect();
        let mut actual = linked.remove(key).unwrap_or_default();
        actual.sort_unstable();
        if actual != expected {
            return Err(Error::invariant(format!(
                "links for edge ({}, {}) are {actual:?}, events imply {expected:?}",
                key.0, key.1
            )));
        }
    }
    let stats = doc.provenance.link_stats;
    if stats.accepted != doc.links.len() || stats.accepted + stats.skipped != total_events {
        return Err(Error::invariant(format!(
            "link stats {stats:?} do not account for {} links and {total_events} events",
            doc.links.len()
        )));
    }
    Ok(())
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn serialize(doc: &SceneDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("scene documents always serialize");
    s.push('\n');
    s
}

/// Parses and validates. The version is checked before the schema so that
/// a future format reports as a version error.
pub fn parse(bytes: &[u8]) -> Result<SceneDocument> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::parse("scene", e.line(), e.to_string()))?;
    match value.get("version") {
        Some(serde_json::Value::String(v)) if v == SCENE_VERSION => {}
        Some(serde_json::Value::String(v)) => return Err(Error::Version { found: v.clone() }),
        _ => return Err(schema("version", "missing or not a string")),
    }
    let doc: SceneDocument = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    validate(&doc)?;
    Ok(doc)
}

pub fn read_scene(path: &Path) -> Result<SceneDocument> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(&bytes)
}

pub fn write_scene(path: &Path, doc: &SceneDocument) -> Result<()> {
    std::fs::write(path, serialize(doc)).map_err(|e| Error::io(path, e))
}

/// Re-hashes every recorded input file and compares against the document.
pub fn verify_inputs(doc: &SceneDocument) -> Result<()> {
    for (role, recorded) in &doc.provenance.inputs {
        let now = InputDigest::of_file(Path::new(&recorded.path))?;
        if now.sha256 != recorded.sha256 {
            return Err(Error::DigestMismatch {
                role: role.clone(),
                path: recorded.path.clone(),
            });
        }
    }
    Ok(())
}

/// Headline counts of a scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub version: String,
    pub semantic_nodes: usize,
    pub clusters: usize,
    pub entities: usize,
    pub edges: usize,
    pub links: usize,
    pub skipped_links: usize,
    pub positive_sentences: usize,
}

pub fn summarize(doc: &SceneDocument) -> SceneSummary {
    let clusters: BTreeSet<usize> = doc.semantic_layer.iter().map(|n| n.cluster).collect();
    SceneSummary {
        version: doc.version.clone(),
        semantic_nodes: doc.semantic_layer.len(),
        clusters: clusters.len(),
        entities: doc.entity_layer.nodes.len(),
        edges: doc.entity_layer.edges.len(),
        links: doc.links.len(),
        skipped_links: doc.provenance.link_stats.skipped,
        positive_sentences: doc.semantic_layer.iter().filter(|n| n.sentiment_label == 1).count(),
    }
}
