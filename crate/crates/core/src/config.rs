//! Pipeline configuration, read from TOML.
//!
//! Relative paths in a config file resolve against the file's directory.
//! A top-level `seed` overrides every per-stage seed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::DpcConfig;
use crate::corpus::{self, PreprocessConfig};
use crate::entitygraph::{DEFAULT_ALPHA, DEFAULT_WINDOW};
use crate::error::{read_to_string, Error, Result};
use crate::forcelayout::LayoutConfig;
use crate::projection::ProjectionConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub path: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub clause_patterns: Vec<String>,
    /// Replaces the default sentence delimiters when set.
    pub delimiters: Option<String>,
    /// Replaces the default abbreviation list when set.
    pub abbreviations: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub path: Option<PathBuf>,
    pub dim: usize,
    /// Hash-based embedder used when no file is given.
    pub fallback: bool,
    pub seed: u64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            path: None,
            dim: crate::embedding::DEFAULT_DIM,
            fallback: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AffectSection {
    /// External classifier labels; take precedence over the lexicon.
    pub sentiment: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntitySection {
    pub gazetteer: Option<PathBuf>,
    /// BIO annotation file; replaces gazetteer extraction when set.
    pub annotations: Option<PathBuf>,
    pub heuristic: bool,
    pub window: usize,
    pub alpha: f64,
}

impl Default for EntitySection {
    fn default() -> Self {
        Self {
            gazetteer: None,
            annotations: None,
            heuristic: false,
            window: DEFAULT_WINDOW,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub corpus: CorpusSection,
    pub embedding: EmbeddingSection,
    pub projection: ProjectionConfig,
    pub clustering: DpcConfig,
    pub affect: AffectSection,
    pub entity: EntitySection,
    pub layout: LayoutConfig,
}

/// Command-line values that win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub embeddings: Option<PathBuf>,
    pub fallback_embed: bool,
    pub sentiment: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn absolutize(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string().trim_end().to_string()))?;
        for p in [
            &mut cfg.corpus.path,
            &mut cfg.corpus.stopwords,
            &mut cfg.embedding.path,
            &mut cfg.affect.sentiment,
            &mut cfg.affect.lexicon,
            &mut cfg.entity.gazetteer,
            &mut cfg.entity.annotations,
        ] {
            absolutize(base, p);
        }
        if let Some(seed) = cfg.seed {
            cfg.apply_seed(seed);
        }
        Ok(cfg)
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.embedding.seed = seed;
        self.projection.seed = seed;
        self.layout.seed = seed;
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.embeddings {
            self.embedding.path = Some(p.clone());
        }
        if o.fallback_embed {
            self.embedding.fallback = true;
        }
        if let Some(p) = &o.sentiment {
            self.affect.sentiment = Some(p.clone());
        }
        if let Some(p) = &o.lexicon {
            self.affect.lexicon = Some(p.clone());
        }
        if let Some(p) = &o.gazetteer {
            self.entity.gazetteer = Some(p.clone());
        }
        if let Some(p) = &o.annotations {
            self.entity.annotations = Some(p.clone());
        }
        if let Some(s) = o.seed {
            self.apply_seed(s);
        }
    }

    /// Checks everything that can be checked without reading inputs.
    pub fn validate(&self) -> Result<()> {
        if self.corpus.path.is_none() {
            return Err(Error::config("corpus.path is required"));
        }
        if self.embedding.path.is_none() && !self.embedding.fallback {
            return Err(Error::NoEmbeddingSource);
        }
        if self.embedding.dim == 0 {
            return Err(Error::config("embedding.dim must be positive"));
        }
        if self.affect.sentiment.is_none() && self.affect.lexicon.is_none() {
            return Err(Error::config("no sentiment source: set affect.sentiment or affect.lexicon"));
        }
        if self.entity.window < 1 {
            return Err(Error::config("entity.window must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.entity.alpha) {
            return Err(Error::config("entity.alpha must lie in [0, 1]"));
        }
        self.clustering.validate()?;
        self.layout.validate()?;
        Ok(())
    }

    /// Builds the preprocessing settings, reading the stopword file.
    pub fn preprocess(&self) -> Result<PreprocessConfig> {
        let mut pc = PreprocessConfig {
            clause_patterns: self.corpus.clause_patterns.clone(),
            ..Default::default()
        };
        if let Some(p) = &self.corpus.stopwords {
            pc.stopwords = corpus::load_stopwords(p)?;
        }
        if let Some(d) = &self.corpus.delimiters {
            pc.sentence_delimiters = d.chars().filter(|c| !c.is_whitespace()).collect();
        }
        if let Some(a) = &self.corpus.abbreviations {
            pc.abbreviations = a.iter().map(|s| s.to_lowercase()).collect::<BTreeSet<_>>();
        }
        Ok(pc)
    }
}
