//! Emotion-cause clause classification.
//!
//! Clauses are encoded by a word-level BiLSTM with attention over
//! position-augmented embeddings. Cause decisions are made in order of
//! distance from the emotion clause, each conditioned on a vector of the
//! labels already decided.

pub mod corpus;
pub mod dgl;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod model;
pub mod numerics;
pub mod pae;
pub mod training;

pub use error::{Error, Result};
