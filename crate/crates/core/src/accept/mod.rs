//! Acceptability filtering: the probability that a pair consists of mutual
//! translations, from the built-in lexical classifier or an external scorer.

pub mod classifier;
pub mod features;
pub mod lexicon;
pub mod mining;
pub mod protocol;

pub use classifier::{train_builtin, AcceptabilityModel, BuiltinModel, TrainConfig};
pub use features::{extract, FeatureConfig, FeatureVector, FEATURE_NAMES};
pub use lexicon::Lexicon;
pub use mining::{mine_unsupervised_positives, Combination, MiningRecord};
pub use protocol::{external_score_batch, ScorerCommand, ScorerError, ScorerSession, Semantics};

use crate::error::Result;
use crate::types::SentencePair;

/// Scores a single pair; see [`AcceptabilityModel::score_pairs`] for batches.
pub fn acceptability_score(model: &AcceptabilityModel, pair: &SentencePair) -> Result<f64> {
    Ok(model.score_pairs(std::slice::from_ref(pair))?[0])
}
