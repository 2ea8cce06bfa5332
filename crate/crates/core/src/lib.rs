//! Circle prediction in ego-networks from global (skip-gram over random
//! walks) and local (PV-DM over ego-walks) node embeddings.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the common instantiations.

pub mod classifier;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod synthetic;
pub mod walks;

pub use error::{Error, Result};
pub use graph::{Dataset, DatasetKind, Graph, NodeId};
pub use pipeline::{run_pipeline, PipelineConfig, Stage};
pub use scalar::Scalar;

pub type EmbeddingTableF32 = embedding::EmbeddingTable<f32>;
pub type EmbeddingTableF64 = embedding::EmbeddingTable<f64>;
pub type InstanceSetF32 = features::InstanceSet<f32>;
pub type InstanceSetF64 = features::InstanceSet<f64>;
pub type MlpF32 = classifier::Mlp<f32>;
pub type MlpF64 = classifier::Mlp<f64>;
