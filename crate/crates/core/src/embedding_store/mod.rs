//! Embedding vectors, ordered label tables and their on-disk formats.
//!
//! A [`LabelEmbeddingSet`] is the label matrix that images are scored against.
//! Every vector stored in a set is unit-normalized so that a plain dot product
//! is the cosine similarity.

mod format;

use std::collections::HashMap;

use thiserror::Error;

use crate::scalar::{l2_norm, Scalar};
use crate::text::canonical_label;

pub use format::{
    decode_eef1, decode_json_mirror, encode_eef1, encode_json_mirror, load_embeddings,
    save_embeddings, LoadedEmbeddings, EEF1_HEADER_LEN, EEF1_MAGIC, EEF1_VERSION,
};

/// Tolerance on the unit norm of a stored vector.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;
/// `normalize` leaves vectors this close to unit length untouched.
const IDEMPOTENCE_TOLERANCE: f64 = 1e-6;
const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("embedding has no components")]
    EmptyVector,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("empty label")]
    EmptyLabel,
    #[error("embedding for {0:?} is not unit-normalized")]
    NotNormalized(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EmbeddingError>;

/// A fixed-dimension real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T: Scalar = f32> {
    values: Vec<T>,
    normalized: bool,
}

impl<T: Scalar> Embedding<T> {
    /// Wraps raw values. The result is flagged as normalized only if its norm is
    /// already within [`UNIT_NORM_TOLERANCE`] of one.
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_values(&values)?;
        let normalized = (l2_norm(&values) - 1.0).abs() <= UNIT_NORM_TOLERANCE;
        Ok(Self { values, normalized })
    }

    /// Wraps raw values and normalizes them.
    pub fn unit(values: Vec<T>) -> Result<Self> {
        normalize(&Self::new(values)?)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        crate::scalar::dot(&self.values, &other.values)
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Converts the storage scalar.
    pub fn cast<U: Scalar>(&self) -> Embedding<U> {
        Embedding {
            values: self.values.iter().map(|&x| U::narrow(x.widen())).collect(),
            normalized: self.normalized,
        }
    }
}

fn check_values<T: Scalar>(values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(EmbeddingError::EmptyVector);
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(EmbeddingError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Scales `e` to unit L2 norm. Idempotent bit-for-bit: vectors already within
/// 1e-6 of unit length are returned unchanged.
pub fn normalize<T: Scalar>(e: &Embedding<T>) -> Result<Embedding<T>> {
    check_values(&e.values)?;
    let norm = l2_norm(&e.values);
    if norm < ZERO_NORM {
        return Err(EmbeddingError::ZeroVector);
    }
    if (norm - 1.0).abs() <= IDEMPOTENCE_TOLERANCE {
        return Ok(Embedding {
            values: e.values.clone(),
            normalized: true,
        });
    }
    let values = e
        .values
        .iter()
        .map(|&x| T::narrow(x.widen() / norm))
        .collect();
    Ok(Embedding {
        values,
        normalized: true,
    })
}

/// Ordered label to embedding table. Labels are unique after canonicalization
/// and every vector is unit-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEmbeddingSet<T: Scalar = f32> {
    dim: usize,
    labels: Vec<String>,
    embeddings: Vec<Embedding<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> LabelEmbeddingSet<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            labels: Vec::new(),
            embeddings: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a set from `(label, embedding)` pairs, preserving order.
    pub fn from_entries<S, I>(dim: usize, entries: I) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, Embedding<T>)>,
    {
        let mut set = Self::new(dim);
        for (label, e) in entries {
            set.insert(label.as_ref(), e)?;
        }
        Ok(set)
    }

    /// Appends an entry. The embedding must already be normalized.
    pub fn insert(&mut self, label: &str, embedding: Embedding<T>) -> Result<()> {
        let label = canonical_label(label);
        if label.is_empty() {
            return Err(EmbeddingError::EmptyLabel);
        }
        if embedding.dim() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                actual: embedding.dim(),
            });
        }
        if !embedding.is_normalized() {
            return Err(EmbeddingError::NotNormalized(label));
        }
        if self.index.contains_key(&label) {
            return Err(EmbeddingError::DuplicateLabel(label));
        }
        self.index.insert(label.clone(), self.labels.len());
        self.labels.push(label);
        self.embeddings.push(embedding);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn embeddings(&self) -> &[Embedding<T>] {
        &self.embeddings
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Embedding<T>)> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.embeddings.iter())
    }

    /// Exact match after canonicalization. `None` is the "missing" value.
    pub fn lookup(&self, label: &str) -> Option<&Embedding<T>> {
        self.index
            .get(&canonical_label(label))
            .map(|&i| &self.embeddings[i])
    }

    pub fn contains(&self, label: &str) -> bool {
        self.lookup(label).is_some()
    }
}
