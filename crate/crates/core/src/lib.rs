//! Self-supervised image embeddings learned from text topics.
//!
//! Articles and image captions are projected into a shared LDA topic space.
//! A two-headed network learns to predict, from an image's features alone,
//! the topic distribution of the article the image appears in (global
//! context) and of the image's own caption (local context). Because the
//! predictions live in the same space as the text topics, image↔text
//! retrieval reduces to ranking by KL divergence.
//!
//! Modules follow the pipeline:
//!
//! - [`corpus`]: document ingestion, filtering, tokenization, vocabulary.
//! - [`lda`]: collapsed Gibbs topic model and fixed-topic inference.
//! - [`synth`]: corpora drawn from the generative model, with known truth.
//! - [`nnet`]: dual-head network, loss, backprop and momentum SGD.
//! - [`trainer`]: triple construction, training loop, image embedding.
//! - [`retrieval`]: KL-divergence ranking across modalities.
//! - [`eval`]: average precision, MAP and linear probes.
//! - [`config`]: defaults and the TOML configuration file.
//!
//! Runnable walkthroughs of each stage live in `examples/`.

pub mod config;
pub mod corpus;
pub mod distribution;
pub mod error;
pub mod eval;
pub mod lda;
pub mod linalg;
pub mod nnet;
pub mod retrieval;
pub mod sampling;
pub mod synth;
pub mod trainer;

pub use distribution::TopicDistribution;
pub use error::{Error, Result};
pub use linalg::Matrix;
