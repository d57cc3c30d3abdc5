//! Prior-knowledge graph (WordNet / ConceptNet style edges) and its traversal.
//!
//! Graphs are read from a tab-separated edge list:
//!
//! ```text
//! # comment
//! source<TAB>relation<TAB>target[<TAB>weight]
//! ```
//!
//! `weight` defaults to 1.0 and must lie in (0, 1].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::canonical_label;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("invalid edge: {0}")]
    InvalidEdge(String),
    #[error("unknown term {0:?}")]
    UnknownTerm(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OntologyError>;

/// Edge relation. Variant order is the lexicographic order of the names,
/// which fixes the traversal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Antonym,
    Hypernym,
    Hyponym,
    PartOf,
    Related,
    Synonym,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::Antonym,
        Relation::Hypernym,
        Relation::Hyponym,
        Relation::PartOf,
        Relation::Related,
        Relation::Synonym,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Antonym => "antonym",
            Relation::Hypernym => "hypernym",
            Relation::Hyponym => "hyponym",
            Relation::PartOf => "part_of",
            Relation::Related => "related",
            Relation::Synonym => "synonym",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown relation {s:?}"))
    }
}

/// Evidence polarity of an expanded label with respect to one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    Discriminative,
}

/// A term reached from a seed. `depth == 0` iff `term == source_seed`;
/// `weight` is the product of edge weights along the derivation path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub term: String,
    pub polarity: Polarity,
    pub source_seed: String,
    pub depth: u32,
    pub weight: f64,
}

impl ExpansionTerm {
    pub fn seed(term: &str) -> Self {
        Self {
            term: term.to_string(),
            polarity: Polarity::Positive,
            source_seed: term.to_string(),
            depth: 0,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: String,
    pub relation: Relation,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OntologyGraph {
    nodes: BTreeSet<String>,
    adjacency: BTreeMap<String, BTreeMap<(Relation, String), f64>>,
}

impl OntologyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an edge. Endpoints are canonicalized; a repeated triple keeps the
    /// larger weight.
    pub fn add_edge(
        &mut self,
        source: &str,
        relation: Relation,
        target: &str,
        weight: f64,
    ) -> Result<()> {
        let source = canonical_label(source);
        let target = canonical_label(target);
        if source.is_empty() || target.is_empty() {
            return Err(OntologyError::InvalidEdge("empty term".into()));
        }
        if source == target {
            return Err(OntologyError::InvalidEdge(format!(
                "self-loop on {source:?}"
            )));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(OntologyError::InvalidEdge(format!(
                "weight {weight} outside (0, 1]"
            )));
        }
        self.nodes.insert(source.clone());
        self.nodes.insert(target.clone());
        let slot = self
            .adjacency
            .entry(source)
            .or_default()
            .entry((relation, target))
            .or_insert(weight);
        *slot = slot.max(weight);
        Ok(())
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut g = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |msg: String| OntologyError::Format { line: line_no, msg };
            if !(3..=4).contains(&fields.len()) {
                return Err(err(format!(
                    "expected 3 or 4 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let relation: Relation = fields[1].trim().parse().map_err(err)?;
            let weight = match fields.get(3) {
                Some(w) => w
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad weight {w:?}: {e}")))?,
                None => 1.0,
            };
            g.add_edge(fields[0], relation, fields[2], weight)
                .map_err(|e| err(e.to_string()))?;
        }
        Ok(g)
    }

    /// Deterministic TSV serialization (sorted by source, relation, target).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in self.edges() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.source, e.relation, e.target, e.weight
            ));
        }
        out
    }

    pub fn contains(&self, term: &str) -> bool {
        self.nodes.contains(&canonical_label(term))
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeMap::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency.iter().flat_map(|(source, out)| {
            out.iter().map(move |((relation, target), &weight)| Edge {
                source: source.clone(),
                relation: *relation,
                target: target.clone(),
                weight,
            })
        })
    }

    pub fn edge_weight(&self, source: &str, relation: Relation, target: &str) -> Option<f64> {
        self.adjacency
            .get(&canonical_label(source))?
            .get(&(relation, canonical_label(target)))
            .copied()
    }

    fn out_edges<'a>(
        &'a self,
        term: &str,
        relations: &'a BTreeSet<Relation>,
    ) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.adjacency
            .get(term)
            .into_iter()
            .flatten()
            .filter(move |((rel, _), _)| relations.contains(rel))
            .map(|((_, target), &w)| (target.as_str(), w))
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<OntologyGraph> {
    OntologyGraph::parse_tsv(&fs::read_to_string(path)?)
}

/// Breadth-first expansion of `term` along `relations`.
///
/// Each reachable term is reported once, at its minimum depth, weighted by the
/// first shortest path found (neighbors are expanded in `(relation, target)`
/// order). Results are sorted by depth, then weight descending, then term, and
/// truncated to `max_terms`. The returned terms carry positive polarity.
pub fn neighbors(
    g: &OntologyGraph,
    term: &str,
    relations: &BTreeSet<Relation>,
    max_depth: u32,
    max_terms: usize,
) -> Result<Vec<ExpansionTerm>> {
    let start = canonical_label(term);
    if !g.nodes.contains(&start) {
        return Err(OntologyError::UnknownTerm(start));
    }
    let mut visited: HashSet<&str> = HashSet::from([start.as_str()]);
    let mut frontier: Vec<(&str, f64)> = vec![(start.as_str(), 1.0)];
    let mut out = Vec::new();
    for depth in 1..=max_depth {
        let mut next = Vec::new();
        for &(node, path_weight) in &frontier {
            for (target, w) in g.out_edges(node, relations) {
                if visited.insert(target) {
                    let weight = path_weight * w;
                    next.push((target, weight));
                    out.push(ExpansionTerm {
                        term: target.to_string(),
                        polarity: Polarity::Positive,
                        source_seed: start.clone(),
                        depth,
                        weight,
                    });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out.sort_by(|a, b| {
        a.depth
            .cmp(&b.depth)
            .then_with(|| b.weight.total_cmp(&a.weight))
            .then_with(|| a.term.cmp(&b.term))
    });
    out.truncate(max_terms);
    Ok(out)
}
