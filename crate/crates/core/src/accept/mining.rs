//! Unsupervised positive mining: when no clean parallel data exists, rank
//! the noisy corpus by alignment and domain evidence and keep the best pairs
//! up to a word budget.

use crate::error::{Error, Result};
use crate::pipeline::{minmax_normalize, select_by_budget, Candidate, Selection};
use crate::tokenize::{token_count, Scheme};
use crate::types::{SentencePair, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct MiningRecord {
    pub pair: SentencePair,
    pub alignment: f64,
    pub domain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combination {
    /// Product of the min-max normalized alignment and domain scores.
    #[default]
    Product,
    /// Rank by alignment alone after dropping pairs whose domain score is 0.
    Sequential,
}

/// Returns the mined positives in input order, plus the selection summary.
pub fn mine_unsupervised_positives(
    records: &[MiningRecord],
    budget: u64,
    side: Side,
    scheme: Scheme,
    combination: Combination,
) -> Result<(Vec<SentencePair>, Selection)> {
    if records.is_empty() {
        return Err(Error::data("nothing to mine from an empty corpus"));
    }
    if records.iter().any(|r| !r.alignment.is_finite() || !r.domain.is_finite()) {
        return Err(Error::data("alignment and domain scores must be finite"));
    }
    let candidates: Vec<Candidate> = match combination {
        Combination::Product => {
            let align = minmax_normalize(&records.iter().map(|r| r.alignment).collect::<Vec<_>>())?;
            let dom = minmax_normalize(&records.iter().map(|r| r.domain).collect::<Vec<_>>())?;
            records
                .iter()
                .zip(align.iter().zip(&dom))
                .map(|(r, (a, d))| Candidate {
                    id: r.pair.id,
                    score: a * d,
                    words: token_count(r.pair.side(side), scheme) as u64,
                })
                .collect()
        }
        Combination::Sequential => records
            .iter()
            .filter(|r| r.domain > 0.0)
            .map(|r| Candidate { id: r.pair.id, score: r.alignment, words: token_count(r.pair.side(side), scheme) as u64 })
            .collect(),
    };
    let selection = select_by_budget(&candidates, budget)?;
    if selection.saturated {
        log::warn!("mining budget of {budget} words exceeds the {} available; keeping everything", selection.words);
    }
    let mut keep: Vec<u64> = selection.ids.clone();
    keep.sort_unstable();
    let positives = records
        .iter()
        .filter(|r| keep.binary_search(&r.pair.id).is_ok())
        .map(|r| r.pair.clone())
        .collect();
    Ok((positives, selection))
}
