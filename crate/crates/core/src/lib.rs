//! Streaming hashtag-diffusion analytics over a directed follower graph:
//! event ingestion, incremental conductance/component tracking, a 29-feature
//! early-prediction snapshot, virality labeling, and a random-forest
//! classifier with imbalanced-class evaluation. A synthetic-corpus generator
//! makes the whole pipeline testable at desk scale.

pub mod error;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod labeling;
pub mod ml;
pub mod pipeline;
pub mod simgen;
pub mod tracker;

pub use error::{Error, Result};
