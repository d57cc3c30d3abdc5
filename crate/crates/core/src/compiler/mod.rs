//! Compile phase: seed keywords -> evidence-tagged label expansion -> embedded
//! application package.

mod package;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::affinity::DEFAULT_TEMPERATURE;
use crate::embedding_store::{normalize, Embedding, EmbeddingError, LabelEmbeddingSet};
use crate::ontology::{neighbors, ExpansionTerm, OntologyGraph, Polarity, Relation};
use crate::provider::{EmbeddingProvider, ProviderError};
use crate::text::canonical_label;

pub use package::{
    decode_app, encode_app, load_app, save_app, AnalyticsApp, ClassExpansion, ClassSeeds,
    APP_FORMAT_VERSION, EAP1_MAGIC,
};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("provider error on label {label:?}: {source}")]
    Provider {
        label: String,
        #[source]
        source: ProviderError,
    },
    #[error("embedding error: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported package version {0}")]
    VersionUnsupported(u32),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CompileError>;

/// Class name -> seed keywords. Ordered by class name.
pub type SeedsByClass = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileConfig {
    pub relations_positive: BTreeSet<Relation>,
    pub relations_negative: BTreeSet<Relation>,
    pub max_depth: u32,
    pub max_terms_per_seed: usize,
    pub temperature: f64,
    pub grid: Option<GridShape>,
    pub reasoner_endpoint: Option<String>,
}

impl Default for CompileConfig {
    fn default() -> Self {
        Self {
            relations_positive: [Relation::Synonym, Relation::Hyponym, Relation::Related]
                .into_iter()
                .collect(),
            relations_negative: [Relation::Antonym].into_iter().collect(),
            max_depth: 2,
            max_terms_per_seed: 32,
            temperature: DEFAULT_TEMPERATURE,
            grid: None,
            reasoner_endpoint: None,
        }
    }
}

impl CompileConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(CompileError::Config("max_depth must be >= 1".into()));
        }
        if self.max_terms_per_seed < 1 {
            return Err(CompileError::Config(
                "max_terms_per_seed must be >= 1".into(),
            ));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(CompileError::Config(format!(
                "temperature must be finite and positive, got {}",
                self.temperature
            )));
        }
        if let Some(g) = self.grid {
            if g.rows == 0 || g.cols == 0 {
                return Err(CompileError::Config(format!("grid {}x{}", g.rows, g.cols)));
            }
        }
        Ok(())
    }
}

/// Canonicalized, de-duplicated seeds; rejects empty input and seedless classes.
fn canonical_seeds(seeds_by_class: &SeedsByClass) -> Result<Vec<ClassSeeds>> {
    let mut merged: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (class, seeds) in seeds_by_class {
        let name = canonical_label(class);
        if name.is_empty() {
            return Err(CompileError::EmptyInput("empty class name".into()));
        }
        let slot = merged.entry(name).or_default();
        for seed in seeds.iter().map(|s| canonical_label(s)) {
            if !seed.is_empty() && !slot.contains(&seed) {
                slot.push(seed);
            }
        }
    }
    if merged.is_empty() {
        return Err(CompileError::EmptyInput("no classes".into()));
    }
    if let Some((name, _)) = merged.iter().find(|(_, s)| s.is_empty()) {
        return Err(CompileError::EmptyInput(format!(
            "class {name:?} has no seeds"
        )));
    }
    Ok(merged
        .into_iter()
        .map(|(name, seeds)| ClassSeeds { name, seeds })
        .collect())
}

/// Expands every class's seeds over the ontology.
///
/// Per class, in order: the seeds themselves (positive, depth 0), then terms
/// reached over `relations_positive` up to `max_depth`, then depth-1 terms
/// reached over `relations_negative` (negative). Each search is capped at
/// `max_terms_per_seed`. A term keeps its first tag within a class. Seeds of
/// other classes are not taken as positive evidence. Finally any non-seed
/// positive term shared by two or more classes becomes discriminative in all
/// of them.
pub fn semantic_expand(
    seeds_by_class: &SeedsByClass,
    g: &OntologyGraph,
    cfg: &CompileConfig,
) -> Result<Vec<ClassExpansion>> {
    cfg.validate()?;
    let classes = canonical_seeds(seeds_by_class)?;
    let all_seeds: HashSet<&str> = classes
        .iter()
        .flat_map(|c| c.seeds.iter().map(String::as_str))
        .collect();

    let mut out = Vec::with_capacity(classes.len());
    for class in &classes {
        let mut seen: HashSet<String> = HashSet::new();
        let mut terms = Vec::new();
        for seed in &class.seeds {
            seen.insert(seed.clone());
            terms.push(ExpansionTerm::seed(seed));
        }
        for seed in class.seeds.iter().filter(|s| g.contains(s)) {
            let reached = neighbors(
                g,
                seed,
                &cfg.relations_positive,
                cfg.max_depth,
                cfg.max_terms_per_seed,
            )
            .expect("seed presence checked");
            for t in reached {
                if !all_seeds.contains(t.term.as_str()) && seen.insert(t.term.clone()) {
                    terms.push(t);
                }
            }
        }
        if !cfg.relations_negative.is_empty() {
            for seed in class.seeds.iter().filter(|s| g.contains(s)) {
                let reached =
                    neighbors(g, seed, &cfg.relations_negative, 1, cfg.max_terms_per_seed)
                        .expect("seed presence checked");
                for mut t in reached {
                    if seen.insert(t.term.clone()) {
                        t.polarity = Polarity::Negative;
                        terms.push(t);
                    }
                }
            }
        }
        out.push(ClassExpansion {
            class: class.name.clone(),
            terms,
        });
    }

    let mut positive_classes: HashMap<String, usize> = HashMap::new();
    for ce in &out {
        for t in ce
            .terms
            .iter()
            .filter(|t| t.depth > 0 && t.polarity == Polarity::Positive)
        {
            *positive_classes.entry(t.term.clone()).or_default() += 1;
        }
    }
    for ce in &mut out {
        for t in ce.terms.iter_mut() {
            if t.depth > 0
                && t.polarity == Polarity::Positive
                && positive_classes.get(&t.term).copied().unwrap_or(0) >= 2
            {
                t.polarity = Polarity::Discriminative;
            }
        }
    }
    Ok(out)
}

/// Embeds one label. Labels containing underscores are embedded both verbatim
/// and with spaces, and the normalized sum of the two is kept.
pub fn embed_label<P: EmbeddingProvider + ?Sized>(provider: &P, label: &str) -> Result<Embedding> {
    let wrap = |source: ProviderError| CompileError::Provider {
        label: label.to_string(),
        source,
    };
    let check_dim = |e: &Embedding| {
        if e.dim() == provider.dim() {
            Ok(())
        } else {
            Err(wrap(ProviderError::DimensionMismatch {
                label: label.to_string(),
                expected: provider.dim(),
                actual: e.dim(),
            }))
        }
    };
    let verbatim = provider.embed_text(label).map_err(wrap)?;
    check_dim(&verbatim)?;
    if !label.contains('_') {
        return Ok(normalize(&verbatim)?);
    }
    let spaced = provider
        .embed_text(&label.replace('_', " "))
        .map_err(wrap)?;
    check_dim(&spaced)?;
    let sum: Vec<f32> = verbatim
        .values()
        .iter()
        .zip(spaced.values())
        .map(|(a, b)| a + b)
        .collect();
    match Embedding::unit(sum) {
        Ok(e) => Ok(e),
        // antipodal variants cancel; fall back to the verbatim vector
        Err(EmbeddingError::ZeroVector) => Ok(normalize(&verbatim)?),
        Err(e) => Err(e.into()),
    }
}

/// Hex SHA-256 of the graph's canonical TSV form.
pub fn ontology_digest(g: &OntologyGraph) -> String {
    hex::encode(Sha256::digest(g.to_tsv().as_bytes()))
}

pub fn compile_app<P: EmbeddingProvider + ?Sized>(
    seeds_by_class: &SeedsByClass,
    g: &OntologyGraph,
    provider: &P,
    cfg: &CompileConfig,
) -> Result<AnalyticsApp> {
    let expansion = semantic_expand(seeds_by_class, g, cfg)?;
    let classes = canonical_seeds(seeds_by_class)?;

    let mut labels: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for t in expansion.iter().flat_map(|ce| ce.terms.iter()) {
        if seen.insert(t.term.as_str()) {
            labels.push(&t.term);
        }
    }
    let mut set = LabelEmbeddingSet::new(provider.dim());
    for label in labels {
        set.insert(label, embed_label(provider, label)?)?;
    }
    let app = AnalyticsApp {
        version: APP_FORMAT_VERSION,
        classes,
        expansion,
        label_embeddings: set,
        config: cfg.clone(),
        provenance: format!(
            "ontology_sha256={}; provider={}",
            ontology_digest(g),
            provider.id()
        ),
    };
    app.validate()?;
    Ok(app)
}
