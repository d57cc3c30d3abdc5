//! Text/image embedding providers.
//!
//! A provider must be deterministic for a fixed `id` and return unit vectors.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embedding_store::{load_embeddings, Embedding, EmbeddingError, LabelEmbeddingSet};
use crate::remote::{endpoint_url, JsonClient, RemoteError};
use crate::text::canonical_label;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("no embedding available for {0:?}")]
    MissingLabel(String),
    #[error("{0} does not support image inputs")]
    Unsupported(String),
    #[error("invalid embedding for {label:?}: {source}")]
    InvalidEmbedding {
        label: String,
        #[source]
        source: EmbeddingError,
    },
    #[error("embedding for {label:?} has dim {actual}, provider dim is {expected}")]
    DimensionMismatch {
        label: String,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("provider failed on {label:?}: {reason}")]
    Failed { label: String, reason: String },
}

impl ProviderError {
    pub fn is_remote(&self) -> bool {
        matches!(self, ProviderError::Remote(_))
    }
}

/// Opaque reference to an image handed to a provider.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageRef {
    Path(PathBuf),
    Bytes(Vec<u8>),
}

pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier; identical ids imply identical outputs.
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    fn embed_text(&self, label: &str) -> Result<Embedding, ProviderError>;

    fn embed_image(&self, _image: &ImageRef) -> Result<Embedding, ProviderError> {
        Err(ProviderError::Unsupported(self.id().to_string()))
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_text(&self, label: &str) -> Result<Embedding, ProviderError> {
        (**self).embed_text(label)
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding, ProviderError> {
        (**self).embed_image(image)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_text(&self, label: &str) -> Result<Embedding, ProviderError> {
        (**self).embed_text(label)
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding, ProviderError> {
        (**self).embed_image(image)
    }
}

/// Deterministic test double: each label maps to a Gaussian direction drawn
/// from a ChaCha stream keyed by `sha256(seed || label)`.
#[derive(Debug, Clone)]
pub struct SyntheticProvider {
    seed: u64,
    dim: usize,
    id: String,
}

impl SyntheticProvider {
    /// # Panics
    /// If `dim < 2`.
    pub fn new(seed: u64, dim: usize) -> Self {
        assert!(dim >= 2, "synthetic provider needs dim >= 2, got {dim}");
        Self {
            seed,
            dim,
            id: format!("synthetic:{seed}:{dim}"),
        }
    }

    fn vector_for(&self, domain: &[u8], key: &[u8]) -> Embedding {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(domain);
        hasher.update(key);
        let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
        loop {
            let values: Vec<f32> = (0..self.dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
                .collect();
            // A Gaussian draw is zero with probability 0; retry keeps this total.
            if let Ok(e) = Embedding::unit(values) {
                return e;
            }
        }
    }
}

pub fn synthetic_provider(seed: u64, dim: usize) -> SyntheticProvider {
    SyntheticProvider::new(seed, dim)
}

impl EmbeddingProvider for SyntheticProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, label: &str) -> Result<Embedding, ProviderError> {
        Ok(self.vector_for(b"text:", canonical_label(label).as_bytes()))
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding, ProviderError> {
        Ok(match image {
            ImageRef::Path(p) => self.vector_for(b"image-path:", p.to_string_lossy().as_bytes()),
            ImageRef::Bytes(b) => self.vector_for(b"image-bytes:", b),
        })
    }
}

/// Serves precomputed label embeddings from an EEF1 (or JSON mirror) file.
///
/// A label with spaces that is absent from the table falls back to the
/// underscore-joined spelling (`"fire prevention"` -> `"fire_prevention"`).
#[derive(Debug, Clone)]
pub struct FileProvider {
    set: LabelEmbeddingSet,
    id: String,
}

impl FileProvider {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let bytes = std::fs::read(path.as_ref())?;
        let loaded = load_embeddings(path.as_ref())?;
        let digest = hex::encode(Sha256::digest(&bytes));
        Ok(Self {
            set: loaded.set,
            id: format!("file:{}", &digest[..16]),
        })
    }

    pub fn from_set(set: LabelEmbeddingSet, id: impl Into<String>) -> Self {
        Self { set, id: id.into() }
    }
}

impl EmbeddingProvider for FileProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn embed_text(&self, label: &str) -> Result<Embedding, ProviderError> {
        self.set
            .lookup(label)
            .or_else(|| self.set.lookup(&label.replace(' ', "_")))
            .cloned()
            .ok_or_else(|| ProviderError::MissingLabel(canonical_label(label)))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub kind: String,
    pub input: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub values: Vec<f32>,
}

/// Client for the `POST /embed` provider contract.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    client: JsonClient,
    dim: usize,
    id: String,
}

impl HttpProvider {
    /// Connects to `base` and learns the embedding dimension with one probe
    /// request.
    pub fn connect(base: &str, timeout: Duration) -> Result<Self, ProviderError> {
        let url = endpoint_url(base, "/embed");
        let client = JsonClient::new(url.clone(), timeout);
        let mut provider = Self {
            client,
            dim: 0,
            id: format!("http:{url}"),
        };
        provider.dim = provider.request("text", "probe")?.dim();
        Ok(provider)
    }

    fn request(&self, kind: &str, input: &str) -> Result<Embedding, ProviderError> {
        let resp: EmbedResponse = self.client.post(&EmbedRequest {
            kind: kind.to_string(),
            input: input.to_string(),
        })?;
        if resp.dim != resp.values.len() {
            return Err(RemoteError::Schema {
                url: self.client.url().to_string(),
                msg: format!("dim {} but {} values", resp.dim, resp.values.len()),
            }
            .into());
        }
        if self.dim != 0 && resp.dim != self.dim {
            return Err(ProviderError::DimensionMismatch {
                label: input.to_string(),
                expected: self.dim,
                actual: resp.dim,
            });
        }
        Embedding::unit(resp.values).map_err(|source| ProviderError::InvalidEmbedding {
            label: input.to_string(),
            source,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, label: &str) -> Result<Embedding, ProviderError> {
        self.request("text", &canonical_label(label))
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding, ProviderError> {
        match image {
            ImageRef::Path(p) => self.request("image", &p.to_string_lossy()),
            ImageRef::Bytes(_) => Err(ProviderError::Unsupported(self.id.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic_and_unit() {
        let p = synthetic_provider(1, 16);
        let a1 = p.embed_text("a").unwrap();
        let a2 = synthetic_provider(1, 16).embed_text("a").unwrap();
        assert_eq!(a1, a2);
        assert_eq!(a1.dim(), 16);
        assert!((a1.norm() - 1.0).abs() < 1e-6);
        assert_eq!(p.id(), "synthetic:1:16");
    }

    #[test]
    fn synthetic_distinguishes_labels_and_seeds() {
        let p = synthetic_provider(1, 8);
        assert_ne!(p.embed_text("a").unwrap(), p.embed_text("b").unwrap());
        assert_ne!(
            p.embed_text("a").unwrap(),
            synthetic_provider(2, 8).embed_text("a").unwrap()
        );
        assert_eq!(p.embed_text(" a ").unwrap(), p.embed_text("a").unwrap());
    }

    #[test]
    fn synthetic_images_differ_from_text() {
        let p = synthetic_provider(3, 8);
        let img = p.embed_image(&ImageRef::Path("a".into())).unwrap();
        assert_ne!(img, p.embed_text("a").unwrap());
        assert!(img.is_normalized());
    }

    #[test]
    #[should_panic]
    fn synthetic_rejects_dim_one() {
        synthetic_provider(0, 1);
    }

    #[test]
    fn file_provider_lookup() {
        let syn = synthetic_provider(9, 4);
        let set =
            LabelEmbeddingSet::from_entries(4, [("fire_prevention", syn.embed_text("x").unwrap())])
                .unwrap();
        let p = FileProvider::from_set(set, "file:test");
        assert_eq!(
            p.embed_text("fire prevention").unwrap(),
            p.embed_text("fire_prevention").unwrap()
        );
        assert!(
            matches!(p.embed_text("smoke"), Err(ProviderError::MissingLabel(l)) if l == "smoke")
        );
        assert!(matches!(
            p.embed_image(&ImageRef::Bytes(vec![])),
            Err(ProviderError::Unsupported(_))
        ));
    }
}
