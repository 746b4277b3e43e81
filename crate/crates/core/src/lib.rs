//! Socially-informed sentiment classification.
//!
//! A mixture of bigram CNN basis classifiers whose mixing weights come from an
//! attention layer over social-network node embeddings, together with the
//! tooling around it: corpus and graph I/O, LINE node embeddings, a
//! linguistic-homophily analysis based on degree-preserving rewiring,
//! instance-weighted pretraining, Adam training with early stopping, and the
//! evaluation protocol (average F1 of the polar classes, paired bootstrap
//! significance, per-basis word specificity).

pub mod checkpoint;
pub mod cnn;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod graph;
pub mod homophily;
pub mod line;
pub mod math;
pub mod model;
pub mod optim;
pub mod seed;
pub mod synth;
pub mod training;

pub use corpus::{Document, Label, LabeledCorpus, SentimentLexicon};
pub use embeddings::{EmbeddingTable, NodeEmbeddingTable, WordEmbeddingTable};
pub use error::{Error, Result};
pub use graph::SocialGraph;
pub use model::{Mode, ModelShape, SocialAttentionModel};
