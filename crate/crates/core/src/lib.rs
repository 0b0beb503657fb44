//! Measures how well hidden-layer embeddings cluster into unobserved
//! subclasses.
//!
//! The crate reads per-layer embedding exports (`EMB1` files) together with
//! superclass/subclass label tables, clusters each superclass separately,
//! and scores the clusters against the withheld subclass labels with purity
//! and adjusted mutual information. Around that core it provides hierarchy
//! shuffling, external-dataset evaluation, layer sweeps, cross-run adjusted
//! Rand index, a linear probe baseline, a synthetic hierarchical data
//! generator and SVG line charts.
//!
//! Runnable walkthroughs live in this crate's `examples/` directory:
//!
//! ```bash
//! cargo run -p clusterlens --example quickstart
//! ```

pub mod chart;
pub mod cli;
pub mod cluster;
pub mod embedding;
pub mod error;
mod fsio;
pub mod labels;
pub mod manifest;
pub mod metrics;
pub mod probe;
pub mod protocol;
pub mod rng;
pub mod synth;

pub use cluster::{agglomerative, build_dendrogram, cut, kmeans, ClusterAssignment, Engine, LinkageKind, MergeTree};
pub use embedding::{l2_normalize, load_embeddings, save_embeddings, Dtype, EmbeddingMatrix};
pub use error::{Error, Result};
pub use fsio::write_atomic;
pub use labels::{load_labels, save_labels, LabelTable, LabeledDataset};
pub use protocol::{ClusterabilityReport, HierarchySpec, ProtocolConfig};
