//! Attention-based misinformation identification over microblog events.
//!
//! An event is a time-ordered list of microblogs with feature vectors. Each
//! microblog gets a content-attention value (from its features and the
//! event's first microblog) and a dynamic-attention value (from the time
//! since the event started). Their sum is softmax-normalized into weights
//! that pool the features into one event representation, which a logistic
//! classifier scores. Higher scores mean misinformation.
//!
//! Modules:
//! - [`data`]: events, JSONL I/O, splits, deadline truncation
//! - [`featurize`]: precomputed embeddings or hashed text features
//! - [`attention`], [`model`]: the forward pass
//! - [`train`]: loss, analytic gradients, alternating SGD
//! - [`eval`], [`explain`]: metrics, early detection, attention inspection
//! - [`synth`]: planted-signal benchmark data and reference oracles
//! - [`gradcheck`]: finite-difference verification of gradients

pub mod attention;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod explain;
pub mod featurize;
pub mod gradcheck;
pub mod matrix;
pub mod model;
pub mod synth;
pub mod train;

pub use checkpoint::Checkpoint;
pub use data::{Dataset, Event, Label, Microblog, SplitSpec};
pub use error::{AimError, Result};
pub use model::{forward, predict, AttentionBreakdown, ModelParams, ModelShape};
pub use train::{train, TrainConfig};
