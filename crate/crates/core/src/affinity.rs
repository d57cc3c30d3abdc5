//! Softmax affinity between an image embedding and a label table, ranking, and
//! grid-localized heatmaps.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding_store::{Embedding, LabelEmbeddingSet};
use crate::scalar::{softmax, Scalar};

pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum AffinityError {
    #[error("dimension mismatch: embedding dim {embedding}, label set dim {labels}")]
    DimensionMismatch { embedding: usize, labels: usize },
    #[error("label set is empty")]
    EmptyLabelSet,
    #[error("temperature must be finite and positive, got {0}")]
    InvalidTemperature(f64),
    #[error("query embedding is not unit-normalized")]
    NotNormalized,
    #[error("label {0:?} is not scored in every grid cell")]
    UnknownLabel(String),
    #[error("invalid grid bundle: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, AffinityError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: String,
    pub score: f64,
}

/// Score descending, then label ascending by code point.
fn ranking_order(a: &LabelScore, b: &LabelScore) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.label.cmp(&b.label))
}

/// A probability distribution over labels, kept in ranking order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityResult {
    pub temperature: f64,
    pub entries: Vec<LabelScore>,
}

impl AffinityResult {
    /// Wraps externally supplied scores, sorting them into ranking order.
    pub fn from_scores<S: Into<String>>(
        temperature: f64,
        scores: impl IntoIterator<Item = (S, f64)>,
    ) -> Self {
        let mut entries: Vec<LabelScore> = scores
            .into_iter()
            .map(|(label, score)| LabelScore {
                label: label.into(),
                score,
            })
            .collect();
        entries.sort_by(ranking_order);
        Self {
            temperature,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self) -> Option<&LabelScore> {
        self.entries.first()
    }

    pub fn score_of(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.score)
    }

    /// Labels of the first `k` entries.
    pub fn top_labels(&self, k: usize) -> Vec<String> {
        self.entries
            .iter()
            .take(k)
            .map(|e| e.label.clone())
            .collect()
    }

    /// Copy restricted to the first `k` entries (for display).
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            temperature: self.temperature,
            entries: rank(self, k),
        }
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(AffinityError::InvalidTemperature(t))
    }
}

/// `softmax(temperature * V . E^T)` for a single query row.
pub fn compute_affinity<T: Scalar>(
    v: &Embedding<T>,
    labels: &LabelEmbeddingSet<T>,
    temperature: f64,
) -> Result<AffinityResult> {
    check_temperature(temperature)?;
    if v.dim() != labels.dim() {
        return Err(AffinityError::DimensionMismatch {
            embedding: v.dim(),
            labels: labels.dim(),
        });
    }
    if labels.is_empty() {
        return Err(AffinityError::EmptyLabelSet);
    }
    if !v.is_normalized() {
        return Err(AffinityError::NotNormalized);
    }
    let logits: Vec<f64> = labels
        .embeddings()
        .iter()
        .map(|e| temperature * v.dot(e))
        .collect();
    let probs = softmax(&logits);
    Ok(AffinityResult::from_scores(
        temperature,
        labels.labels().iter().cloned().zip(probs),
    ))
}

/// First `min(k, len)` entries in ranking order.
pub fn rank(result: &AffinityResult, k: usize) -> Vec<LabelScore> {
    result.entries.iter().take(k).cloned().collect()
}

/// Label names reserved for grid bundles stored as label tables.
pub fn cell_label(row: usize, col: usize) -> String {
    format!("cell_{row}_{col}")
}

pub const GLOBAL_LABEL: &str = "global";

/// Per-cell embeddings for an image partitioned into `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEmbeddingBundle<T: Scalar = f32> {
    rows: usize,
    cols: usize,
    cells: Vec<Embedding<T>>,
    global: Option<Embedding<T>>,
}

impl<T: Scalar> GridEmbeddingBundle<T> {
    /// `cells` are row-major.
    pub fn new(
        rows: usize,
        cols: usize,
        cells: Vec<Embedding<T>>,
        global: Option<Embedding<T>>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(AffinityError::InvalidGrid(format!("{rows}x{cols} grid")));
        }
        if cells.len() != rows * cols {
            return Err(AffinityError::InvalidGrid(format!(
                "{rows}x{cols} grid needs {} cells, got {}",
                rows * cols,
                cells.len()
            )));
        }
        let dim = cells[0].dim();
        for e in cells.iter().chain(global.iter()) {
            if e.dim() != dim {
                return Err(AffinityError::InvalidGrid(format!(
                    "mixed dimensions {dim} and {}",
                    e.dim()
                )));
            }
            if !e.is_normalized() {
                return Err(AffinityError::NotNormalized);
            }
        }
        Ok(Self {
            rows,
            cols,
            cells,
            global,
        })
    }

    /// Reads a bundle from a label table using the `cell_r_c` / `global` labels.
    pub fn from_label_set(set: &LabelEmbeddingSet<T>) -> Result<Self> {
        let mut coords = Vec::new();
        let mut global = None;
        for (label, e) in set.iter() {
            if label == GLOBAL_LABEL {
                global = Some(e.clone());
                continue;
            }
            let (r, c) = parse_cell_label(label).ok_or_else(|| {
                AffinityError::InvalidGrid(format!("unexpected label {label:?} in grid bundle"))
            })?;
            coords.push((r, c, e.clone()));
        }
        let rows = coords.iter().map(|&(r, _, _)| r + 1).max().unwrap_or(0);
        let cols = coords.iter().map(|&(_, c, _)| c + 1).max().unwrap_or(0);
        let mut cells: Vec<Option<Embedding<T>>> = vec![None; rows * cols];
        for (r, c, e) in coords {
            cells[r * cols + c] = Some(e);
        }
        let cells = cells
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                e.ok_or_else(|| {
                    AffinityError::InvalidGrid(format!(
                        "missing {}",
                        cell_label(i / cols, i % cols)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, cells, global)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.cells[0].dim()
    }

    pub fn cells(&self) -> &[Embedding<T>] {
        &self.cells
    }

    pub fn global(&self) -> Option<&Embedding<T>> {
        self.global.as_ref()
    }
}

fn parse_cell_label(label: &str) -> Option<(usize, usize)> {
    let rest = label.strip_prefix("cell_")?;
    let (r, c) = rest.split_once('_')?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAffinityMap {
    pub rows: usize,
    pub cols: usize,
    pub cell_results: Vec<AffinityResult>,
    pub global_result: Option<AffinityResult>,
}

impl GridAffinityMap {
    pub fn cell(&self, row: usize, col: usize) -> &AffinityResult {
        &self.cell_results[row * self.cols + col]
    }
}

pub fn compute_grid_affinities<T: Scalar>(
    bundle: &GridEmbeddingBundle<T>,
    labels: &LabelEmbeddingSet<T>,
    temperature: f64,
) -> Result<GridAffinityMap> {
    let cell_results = bundle
        .cells
        .iter()
        .map(|cell| compute_affinity(cell, labels, temperature))
        .collect::<Result<Vec<_>>>()?;
    let global_result = bundle
        .global
        .as_ref()
        .map(|g| compute_affinity(g, labels, temperature))
        .transpose()?;
    Ok(GridAffinityMap {
        rows: bundle.rows,
        cols: bundle.cols,
        cell_results,
        global_result,
    })
}

/// Per-label score matrix over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub label: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    /// Cell with the highest score; the first in row-major order wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (r, row) in self.values.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > self.values[best.0][best.1] {
                    best = (r, c);
                }
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.values {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn heatmap(map: &GridAffinityMap, label: &str) -> Result<Heatmap> {
    let values = (0..map.rows)
        .map(|r| {
            (0..map.cols)
                .map(|c| {
                    map.cell(r, c)
                        .score_of(label)
                        .ok_or_else(|| AffinityError::UnknownLabel(label.to_string()))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap {
        label: label.to_string(),
        rows: map.rows,
        cols: map.cols,
        values,
    })
}
