//! Compositional event embeddings with a linear ranker for predicting the
//! prototypical temporal order of events.
//!
//! Events (a predicate lemma plus argument-head lemmas) are embedded through
//! a small two-layer composition network, scored by a ranking vector, and
//! ordered by score comparison. Training fits all parameters jointly from
//! event sequence descriptions with an online large-margin update. The crate
//! also ships the verb-frequency baseline, a synthetic-corpus generator, the
//! text formats for corpora, embeddings, pairs, and models, and the CLI that
//! wires them together.

pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
