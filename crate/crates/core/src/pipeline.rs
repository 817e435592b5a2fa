//! End-to-end run from config to scene document.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::affect::{self, lexicon_sentiment, Lexicon, SentimentLabels, SentimentSource};
use crate::clustering::{self, ClusterAssignment};
use crate::config::PipelineConfig;
use crate::corpus::{self, CorpusStats, SentenceRecord};
use crate::embedding::{self, EmbeddingMatrix};
use crate::entitygraph::{self, EntityGraph, EntityMention, Gazetteer};
use crate::error::{read_to_string, Error, Result};
use crate::forcelayout::{self, LayoutGraph, Point};
use crate::projection::{self, Projection3D};
use crate::scene::{self, InputDigest, LinkStats, Provenance, SceneDocument, SemanticNode};

fn timed<T>(stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage));
    log::info!("stage {stage}: {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
    out
}

/// Segmented corpus with the clause filter applied.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub records: Vec<SentenceRecord>,
    pub retained: Vec<usize>,
}

impl Ingested {
    pub fn stats(&self) -> CorpusStats {
        corpus::stats(&self.records)
    }

    pub fn retained_records(&self) -> impl Iterator<Item = &SentenceRecord> {
        self.records.iter().filter(|r| r.retained)
    }
}

pub fn ingest(config: &PipelineConfig) -> Result<Ingested> {
    let path = config
        .corpus
        .path
        .as_ref()
        .ok_or_else(|| Error::config("corpus.path is required"))?;
    let pc = config.preprocess()?;
    let patterns = pc.validate()?;
    let text = read_to_string(path)?;
    let records = corpus::retain_clauses(corpus::segment(&text, &pc), &patterns);
    let retained = corpus::retained_indices(&records);
    Ok(Ingested { records, retained })
}

fn embed(config: &PipelineConfig, ingested: &Ingested) -> Result<EmbeddingMatrix> {
    let e = &config.embedding;
    if let Some(path) = &e.path {
        return embedding::load_embeddings(path, e.dim, &ingested.retained);
    }
    if !e.fallback {
        return Err(Error::NoEmbeddingSource);
    }
    let rows = ingested
        .retained_records()
        .map(|r| {
            let v = embedding::fallback_embed(&r.tokens, e.dim, e.seed);
            let v = if v.empty {
                embedding::fallback_embed(&corpus::tokenize(&r.raw), e.dim, e.seed)
            } else {
                v
            };
            if v.empty {
                return Err(Error::ZeroVector);
            }
            Ok((r.index, v.vector))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingMatrix::from_rows(e.dim, rows, true)
}

fn sentiment(config: &PipelineConfig, ingested: &Ingested) -> Result<SentimentLabels> {
    if let Some(path) = &config.affect.sentiment {
        return affect::load_sentiment(path, &ingested.retained);
    }
    let path = config
        .affect
        .lexicon
        .as_ref()
        .ok_or_else(|| Error::config("no sentiment source: set affect.sentiment or affect.lexicon"))?;
    let lexicon = Lexicon::load(path)?;
    let by_sentence = ingested
        .retained_records()
        .map(|r| (r.index, lexicon_sentiment(&r.tokens, &lexicon)))
        .collect();
    Ok(SentimentLabels {
        by_sentence,
        source: SentimentSource::Lexicon,
    })
}

fn mentions(config: &PipelineConfig, ingested: &Ingested) -> Result<Vec<EntityMention>> {
    let ent = &config.entity;
    if let Some(path) = &ent.annotations {
        let ms = entitygraph::load_entity_annotations(path)?;
        let kept: BTreeSet<usize> = ingested.retained.iter().copied().collect();
        let outside: BTreeSet<usize> = ms
            .iter()
            .map(|m| m.sentence_index)
            .filter(|s| !kept.contains(s))
            .collect();
        if !outside.is_empty() {
            log::warn!("annotations mention entities in non-retained sentences {outside:?}");
        }
        return Ok(ms);
    }
    let gazetteer = match &ent.gazetteer {
        Some(p) => Gazetteer::load(p)?,
        None => Gazetteer::default(),
    };
    let stopwords = config.preprocess()?.stopwords;
    for form in gazetteer.unreachable(&stopwords) {
        log::warn!("gazetteer entry `{form}` contains a stopword and can never match");
    }
    Ok(entitygraph::extract_entities(&ingested.records, &gazetteer, ent.heuristic))
}

/// Every intermediate product of a run, for callers that need more than
/// the scene.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub ingested: Ingested,
    pub embeddings: EmbeddingMatrix,
    pub projection: Projection3D,
    pub clusters: ClusterAssignment,
    pub sentiment: SentimentLabels,
    pub mentions: Vec<EntityMention>,
    pub graph: EntityGraph,
    pub entity_positions: Vec<Point>,
    pub scene: SceneDocument,
}

fn provenance(config: &PipelineConfig) -> Result<Provenance> {
    let mut inputs = BTreeMap::new();
    let roles = [
        ("corpus", &config.corpus.path),
        ("stopwords", &config.corpus.stopwords),
        ("embeddings", &config.embedding.path),
        ("sentiment", &config.affect.sentiment),
        ("lexicon", &config.affect.lexicon),
        ("gazetteer", &config.entity.gazetteer),
        ("annotations", &config.entity.annotations),
    ];
    for (role, path) in roles {
        if let Some(p) = path {
            inputs.insert(role.to_string(), InputDigest::of_file(p)?);
        }
    }
    let mut seeds = BTreeMap::from([
        ("projection".to_string(), config.projection.seed),
        ("layout".to_string(), config.layout.seed),
    ]);
    if config.embedding.path.is_none() {
        seeds.insert("embedding".into(), config.embedding.seed);
    }
    Ok(Provenance {
        generator: format!("semtopo {}", env!("CARGO_PKG_VERSION")),
        config: serde_json::to_value(config).map_err(|e| Error::invariant(e.to_string()))?,
        seeds,
        inputs,
        link_stats: LinkStats::default(),
    })
}

/// Runs every stage in order. The first failure aborts and names its stage.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    timed("config", || config.validate())?;
    let ingested = timed("corpus", || {
        let ing = ingest(config)?;
        if ing.retained.is_empty() {
            return Err(Error::NoRetainedSentences);
        }
        Ok(ing)
    })?;
    let embeddings = timed("embedding", || embed(config, &ingested))?;
    let projection = timed("projection", || projection::project(&embeddings, &config.projection))?;
    let clusters = timed("clustering", || clustering::cluster(&projection.coords, &config.clustering))?;
    let sentiment = timed("affect", || sentiment(config, &ingested))?;
    let (mentions, graph) = timed("entitygraph", || {
        let ms = mentions(config, &ingested)?;
        let mut documents: BTreeSet<usize> = ingested.retained.iter().copied().collect();
        documents.extend(ms.iter().map(|m| m.sentence_index));
        let g = EntityGraph::build(&ms, documents.len(), config.entity.window, config.entity.alpha)?;
        Ok((ms, g))
    })?;
    let entity_positions = timed("forcelayout", || {
        if graph.nodes.is_empty() {
            return Ok(Vec::new());
        }
        let lg = LayoutGraph::from_entity_graph(&graph);
        Ok(forcelayout::layout(&lg, &config.layout)?.positions)
    })?;
    let semantic = timed("link", || {
        embeddings
            .row_index()
            .iter()
            .enumerate()
            .map(|(row, &idx)| {
                let s = sentiment
                    .get(idx)
                    .ok_or_else(|| Error::invariant(format!("no sentiment for sentence {idx}")))?;
                Ok(SemanticNode {
                    sentence_index: idx,
                    position: projection.coords[row],
                    cluster: clusters.labels[row],
                    sentiment_label: s.label,
                    sentiment_score: s.score,
                    text: ingested.records[idx].raw.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let scene = timed("build", || {
        scene::build_scene(semantic, &graph, &entity_positions, config.layout.dim, provenance(config)?)
    })?;
    Ok(PipelineOutput {
        ingested,
        embeddings,
        projection,
        clusters,
        sentiment,
        mentions,
        graph,
        entity_positions,
        scene,
    })
}
