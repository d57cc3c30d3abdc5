//! Inference loop: initial affinity over the compiled labels, optional
//! reasoner-driven refinement with top-X convergence detection, and
//! evidence-aware class scoring.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Duration;

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affinity::{compute_affinity, rank, AffinityError, AffinityResult, LabelScore};
use crate::compiler::{embed_label, AnalyticsApp, CompileConfig, CompileError};
use crate::embedding_store::Embedding;
use crate::ontology::{neighbors, ExpansionTerm, OntologyGraph, Polarity, Relation};
use crate::provider::{EmbeddingProvider, ProviderError};
use crate::remote::{JsonClient, RemoteError};
use crate::text::canonical_label;

#[derive(Debug, Error)]
pub enum ReasonerError {
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("reasoner failed: {0}")]
    Failed(String),
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("dimension mismatch: app dim {expected}, embedding dim {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid loop config: {0}")]
    Config(String),
    #[error("affinity label {0:?} is not part of the app")]
    UnknownLabelInAffinity(String),
    #[error(transparent)]
    Affinity(#[from] AffinityError),
    #[error("reasoner error after {} cycle(s): {source}", partial.cycles_run)]
    Reasoner {
        #[source]
        source: ReasonerError,
        partial: Box<InferenceReport>,
    },
    #[error("provider error on {label:?} after {} cycle(s): {source}", partial.cycles_run)]
    Provider {
        label: String,
        #[source]
        source: ProviderError,
        partial: Box<InferenceReport>,
    },
    #[error("could not extend app: {0}")]
    App(#[from] CompileError),
}

/// Weights of the class score `max(0, p*pos + d*disc - n*neg)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyWeights {
    pub positive: f64,
    pub discriminative: f64,
    pub negative: f64,
}

impl Default for ClassifyWeights {
    fn default() -> Self {
        Self {
            positive: 1.0,
            discriminative: 0.5,
            negative: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub max_cycles: usize,
    pub top_x: usize,
    pub convergence_jaccard: f64,
    pub temperature: f64,
    pub reasoning_enabled: bool,
    pub weights: ClassifyWeights,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_cycles: 10,
            top_x: 5,
            convergence_jaccard: 1.0,
            temperature: 1.0,
            reasoning_enabled: false,
            weights: ClassifyWeights::default(),
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let err = |m: String| Err(InferenceError::Config(m));
        if self.max_cycles < 1 {
            return err("max_cycles must be >= 1".into());
        }
        if self.top_x < 1 {
            return err("top_x must be >= 1".into());
        }
        if !(self.convergence_jaccard > 0.0 && self.convergence_jaccard <= 1.0) {
            return err(format!(
                "convergence_jaccard {} outside (0, 1]",
                self.convergence_jaccard
            ));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return err(format!(
                "temperature {} must be finite and positive",
                self.temperature
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub labels_added: Vec<String>,
    pub affinity: AffinityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub cycles_run: usize,
    pub converged: bool,
    pub per_cycle: Vec<CycleRecord>,
    pub final_affinity: AffinityResult,
    pub class_scores: Vec<ClassScore>,
}

impl InferenceReport {
    pub fn predicted_class(&self) -> Option<&str> {
        self.class_scores.first().map(|c| c.class.as_str())
    }

    /// Copy with every affinity listing cut to its first `k` entries.
    pub fn truncated(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.final_affinity = out.final_affinity.truncated(k);
        for c in &mut out.per_cycle {
            c.affinity = c.affinity.truncated(k);
        }
        out
    }
}

/// Proposes new labels from the current ranking.
pub trait Reasoner {
    fn propose(
        &self,
        context: &str,
        ranked: &[LabelScore],
        known: &BTreeSet<String>,
    ) -> Result<Vec<String>, ReasonerError>;
}

/// Never proposes anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmptyReasoner;

impl Reasoner for EmptyReasoner {
    fn propose(
        &self,
        _: &str,
        _: &[LabelScore],
        _: &BTreeSet<String>,
    ) -> Result<Vec<String>, ReasonerError> {
        Ok(Vec::new())
    }
}

/// Deterministic stand-in for an LLM: proposes the unknown depth-1 neighbors
/// of the current top-1 label, sorted, capped at `max_terms`.
#[derive(Debug, Clone)]
pub struct OntologyWalkReasoner {
    graph: OntologyGraph,
    relations: BTreeSet<Relation>,
    max_terms: usize,
}

pub fn ontology_walk_reasoner(g: &OntologyGraph, cfg: &CompileConfig) -> OntologyWalkReasoner {
    OntologyWalkReasoner {
        graph: g.clone(),
        relations: cfg.relations_positive.clone(),
        max_terms: cfg.max_terms_per_seed,
    }
}

impl Reasoner for OntologyWalkReasoner {
    fn propose(
        &self,
        _context: &str,
        ranked: &[LabelScore],
        known: &BTreeSet<String>,
    ) -> Result<Vec<String>, ReasonerError> {
        let Some(top) = ranked.first() else {
            return Ok(Vec::new());
        };
        let Ok(reached) = neighbors(&self.graph, &top.label, &self.relations, 1, usize::MAX) else {
            return Ok(Vec::new());
        };
        let mut fresh: Vec<String> = reached
            .into_iter()
            .map(|t| t.term)
            .filter(|t| !known.contains(t))
            .collect();
        fresh.sort();
        fresh.truncate(self.max_terms);
        Ok(fresh)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReasonerRequest {
    pub context: String,
    pub ranked: Vec<LabelScore>,
    pub known: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReasonerResponse {
    pub proposals: Vec<String>,
}

/// Client for an HTTP reasoner speaking the JSON proposal protocol.
#[derive(Debug, Clone)]
pub struct RemoteReasoner {
    client: JsonClient,
}

pub fn remote_reasoner(endpoint: &str, timeout: Duration) -> RemoteReasoner {
    RemoteReasoner {
        client: JsonClient::new(endpoint, timeout),
    }
}

impl Reasoner for RemoteReasoner {
    fn propose(
        &self,
        context: &str,
        ranked: &[LabelScore],
        known: &BTreeSet<String>,
    ) -> Result<Vec<String>, ReasonerError> {
        let resp: ReasonerResponse = self.client.post(&ReasonerRequest {
            context: context.to_string(),
            ranked: ranked.to_vec(),
            known: known.iter().cloned().collect(),
        })?;
        if resp.proposals.iter().any(|p| p.trim().is_empty()) {
            return Err(RemoteError::Schema {
                url: self.client.url().to_string(),
                msg: "empty proposal string".into(),
            }
            .into());
        }
        Ok(resp.proposals)
    }
}

/// Canonicalizes proposals and drops empties, duplicates and known labels.
pub fn filter_proposals(proposals: Vec<String>, known: &BTreeSet<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    proposals
        .into_iter()
        .map(|p| canonical_label(&p))
        .filter(|p| !p.is_empty() && !known.contains(p) && seen.insert(p.clone()))
        .collect()
}

pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: HashSet<&str> = a.iter().map(String::as_str).collect();
    let b: HashSet<&str> = b.iter().map(String::as_str).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

pub fn check_convergence(prev_top: &[String], curr_top: &[String], cfg: &LoopConfig) -> bool {
    jaccard(prev_top, curr_top) >= cfg.convergence_jaccard
}

pub fn classify(
    app: &AnalyticsApp,
    affinity: &AffinityResult,
) -> Result<Vec<ClassScore>, InferenceError> {
    classify_with(app, affinity, &ClassifyWeights::default())
}

/// Per class: `pos` is the best score among its positive labels (seeds
/// included), `disc` and `neg` the best among its discriminative and negative
/// labels (0 when absent). Scores are clamped at 0 and not renormalized.
pub fn classify_with(
    app: &AnalyticsApp,
    affinity: &AffinityResult,
    weights: &ClassifyWeights,
) -> Result<Vec<ClassScore>, InferenceError> {
    let mut scores: HashMap<&str, f64> = HashMap::with_capacity(affinity.len());
    for e in &affinity.entries {
        if !app.label_embeddings.contains(&e.label) {
            return Err(InferenceError::UnknownLabelInAffinity(e.label.clone()));
        }
        scores.insert(e.label.as_str(), e.score);
    }
    let mut out: Vec<ClassScore> = app
        .expansion
        .iter()
        .map(|ce| {
            let best = |polarity: Polarity| {
                ce.terms
                    .iter()
                    .filter(|t| t.polarity == polarity)
                    .filter_map(|t| scores.get(t.term.as_str()).copied())
                    .fold(0.0, f64::max)
            };
            let score = weights.positive * best(Polarity::Positive)
                + weights.discriminative * best(Polarity::Discriminative)
                - weights.negative * best(Polarity::Negative);
            ClassScore {
                class: ce.class.clone(),
                score: score.max(0.0),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.class.cmp(&b.class))
    });
    Ok(out)
}

/// Class and tagging that new labels proposed from `label` inherit.
fn attribution(app: &AnalyticsApp, label: &str) -> (String, ExpansionTerm) {
    let (class, t) = app
        .taggings(label)
        .next()
        .map(|(c, t)| (c.to_string(), t.clone()))
        .unwrap_or_else(|| {
            let first = &app.classes[0];
            (first.name.clone(), ExpansionTerm::seed(&first.seeds[0]))
        });
    (class, t)
}

pub fn run_inference(
    app: &AnalyticsApp,
    v: &Embedding,
    reasoner: Option<&dyn Reasoner>,
    provider: Option<&dyn EmbeddingProvider>,
    cfg: &LoopConfig,
) -> Result<InferenceReport, InferenceError> {
    cfg.validate()?;
    if v.dim() != app.dim() {
        return Err(InferenceError::DimensionMismatch {
            expected: app.dim(),
            actual: v.dim(),
        });
    }
    let tools = if cfg.reasoning_enabled {
        match (reasoner, provider) {
            (Some(r), Some(p)) => {
                if p.dim() != app.dim() {
                    return Err(InferenceError::Config(format!(
                        "provider dim {} does not match app dim {}",
                        p.dim(),
                        app.dim()
                    )));
                }
                Some((r, p))
            }
            _ => {
                return Err(InferenceError::Config(
                    "reasoning requires both a reasoner and a provider".into(),
                ))
            }
        }
    } else {
        None
    };

    let mut work = app.clone();
    let mut affinity = compute_affinity(v, &work.label_embeddings, cfg.temperature)?;
    let mut per_cycle = vec![CycleRecord {
        labels_added: Vec::new(),
        affinity: affinity.clone(),
    }];
    let Some((reasoner, provider)) = tools else {
        let class_scores = classify_with(&work, &affinity, &cfg.weights)?;
        return Ok(InferenceReport {
            cycles_run: 1,
            converged: true,
            per_cycle,
            final_affinity: affinity,
            class_scores,
        });
    };

    let context = format!(
        "classes: {}",
        work.class_names().collect::<Vec<_>>().join(", ")
    );
    let mut converged = false;
    let partial = |work: &AnalyticsApp, per_cycle: &[CycleRecord], affinity: &AffinityResult| {
        Box::new(InferenceReport {
            cycles_run: per_cycle.len(),
            converged: false,
            per_cycle: per_cycle.to_vec(),
            final_affinity: affinity.clone(),
            class_scores: classify_with(work, affinity, &cfg.weights).unwrap_or_default(),
        })
    };

    while per_cycle.len() < cfg.max_cycles {
        let ranked = rank(&affinity, cfg.top_x);
        let prev_top: Vec<String> = ranked.iter().map(|e| e.label.clone()).collect();
        let known: BTreeSet<String> = work.label_embeddings.labels().iter().cloned().collect();
        let proposals = match reasoner.propose(&context, &ranked, &known) {
            Ok(p) => filter_proposals(p, &known),
            Err(source) => {
                return Err(InferenceError::Reasoner {
                    source,
                    partial: partial(&work, &per_cycle, &affinity),
                })
            }
        };
        let (class, origin) = attribution(&work, &prev_top[0]);
        for label in &proposals {
            let embedding = match embed_label(provider, label) {
                Ok(e) => e,
                Err(CompileError::Provider { label, source }) => {
                    return Err(InferenceError::Provider {
                        label,
                        source,
                        partial: partial(&work, &per_cycle, &affinity),
                    })
                }
                Err(other) => return Err(other.into()),
            };
            let term = ExpansionTerm {
                term: label.clone(),
                polarity: Polarity::Positive,
                source_seed: origin.source_seed.clone(),
                depth: origin.depth + 1,
                weight: origin.weight,
            };
            work.add_term(&class, term, embedding)?;
        }
        affinity = compute_affinity(v, &work.label_embeddings, cfg.temperature)?;
        debug!(
            "cycle {}: +{} label(s), top-1 {:?}",
            per_cycle.len() + 1,
            proposals.len(),
            affinity.top().map(|e| &e.label)
        );
        per_cycle.push(CycleRecord {
            labels_added: proposals,
            affinity: affinity.clone(),
        });
        if check_convergence(&prev_top, &affinity.top_labels(cfg.top_x), cfg) {
            converged = true;
            break;
        }
    }

    let class_scores = classify_with(&work, &affinity, &cfg.weights)?;
    Ok(InferenceReport {
        cycles_run: per_cycle.len(),
        converged,
        per_cycle,
        final_affinity: affinity,
        class_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn convergence_thresholds() {
        let cfg = |t| LoopConfig {
            convergence_jaccard: t,
            ..LoopConfig::default()
        };
        let a = labels(&["a", "b", "c", "d", "e"]);
        assert!(check_convergence(
            &a,
            &labels(&["e", "d", "c", "b", "a"]),
            &cfg(1.0)
        ));
        assert!(!check_convergence(
            &a,
            &labels(&["v", "w", "x", "y", "z"]),
            &cfg(0.01)
        ));
        // |{a,b,c}| / |{a,b,c,d,e}| = 0.6
        let p = labels(&["a", "b", "c", "d"]);
        let q = labels(&["a", "b", "c", "e"]);
        assert_eq!(jaccard(&p, &q), 0.6);
        assert!(!check_convergence(&p, &q, &cfg(0.8)));
        assert!(check_convergence(&p, &q, &cfg(0.5)));
        assert!(check_convergence(&[], &[], &cfg(1.0)));
    }

    #[test]
    fn proposal_filtering() {
        let known: BTreeSet<String> = ["fire".to_string()].into_iter().collect();
        let got = filter_proposals(labels(&["x", "x", "fire", " ", " x "]), &known);
        assert_eq!(got, ["x"]);
    }

    #[test]
    fn walk_reasoner_proposals() {
        let g = OntologyGraph::parse_tsv(
            "fire\trelated\tsmoke\nfire\tsynonym\tflame\nsmoke\trelated\tfire\n",
        )
        .unwrap();
        let r = ontology_walk_reasoner(&g, &CompileConfig::default());
        let top = |l: &str| {
            vec![LabelScore {
                label: l.into(),
                score: 1.0,
            }]
        };
        let none = BTreeSet::new();
        assert_eq!(
            r.propose("", &top("fire"), &none).unwrap(),
            ["flame", "smoke"]
        );
        assert!(r.propose("", &top("zebra"), &none).unwrap().is_empty());
        let all: BTreeSet<String> = ["flame", "smoke"].iter().map(|s| s.to_string()).collect();
        assert!(r.propose("", &top("fire"), &all).unwrap().is_empty());
        assert!(r.propose("", &[], &none).unwrap().is_empty());
    }

    #[test]
    fn loop_config_validation() {
        for bad in [
            LoopConfig {
                max_cycles: 0,
                ..LoopConfig::default()
            },
            LoopConfig {
                top_x: 0,
                ..LoopConfig::default()
            },
            LoopConfig {
                convergence_jaccard: 0.0,
                ..LoopConfig::default()
            },
            LoopConfig {
                temperature: -1.0,
                ..LoopConfig::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(InferenceError::Config(_))));
        }
    }
}
