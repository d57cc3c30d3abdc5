//! Zero-shot analytics over joint image/text embeddings.
//!
//! Seed keywords are compiled into an evidence-tagged label package
//! ([`compiler`]); images, supplied as precomputed embeddings, are scored
//! against it with a softmax over dot products ([`affinity`]), optionally
//! refined by a reasoner loop ([`inference`]), and measured with
//! [`evaluation`].
//!
//! The vector kernels are generic over the storage scalar ([`Scalar`]); the
//! on-disk formats and the compiled package use `f32`.

pub mod affinity;
pub mod compiler;
pub mod embedding_store;
pub mod evaluation;
pub mod fixtures;
pub mod inference;
pub mod ontology;
pub mod provider;
pub mod remote;
pub mod scalar;
pub mod text;

pub use affinity::{
    compute_affinity, compute_grid_affinities, heatmap, rank, AffinityResult, GridAffinityMap,
    Heatmap, LabelScore,
};
pub use compiler::{compile_app, semantic_expand, AnalyticsApp, CompileConfig, SeedsByClass};
pub use embedding_store::{load_embeddings, normalize, save_embeddings};
pub use inference::{
    check_convergence, classify, run_inference, InferenceReport, LoopConfig, Reasoner,
};
pub use ontology::{load_ontology, neighbors, OntologyGraph, Polarity, Relation};
pub use provider::{synthetic_provider, EmbeddingProvider};
pub use scalar::Scalar;

/// Single-precision embedding (the storage type of every file format).
pub type Embedding = embedding_store::Embedding<f32>;
/// Double-precision embedding.
pub type Embedding64 = embedding_store::Embedding<f64>;
pub type LabelEmbeddingSet = embedding_store::LabelEmbeddingSet<f32>;
pub type LabelEmbeddingSet64 = embedding_store::LabelEmbeddingSet<f64>;
pub type GridEmbeddingBundle = affinity::GridEmbeddingBundle<f32>;
pub type GridEmbeddingBundle64 = affinity::GridEmbeddingBundle<f64>;
