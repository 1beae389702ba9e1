//! Scoring and selection of noisy parallel corpora.
//!
//! Pairs are scored by a language-identification filter, an acceptability
//! classifier and a perplexity-ratio domain filter; the normalized partial
//! scores are multiplied and the corpus is ranked and cut to a word budget.

pub mod accept;
pub mod align;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod eval;
pub mod langid;
pub mod lm;
pub mod pipeline;
pub mod synth;
pub mod tokenize;
pub mod toy;
pub mod types;

pub use error::{Error, Result};
