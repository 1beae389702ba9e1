//! Score normalization, product composition and subset selection.
//!
//! Scoring runs in two passes: the first computes raw per-filter scores and
//! their min/max, the second normalizes the domain column and multiplies the
//! partials into the final score.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accept::AcceptabilityModel;
use crate::domain::DomainFilter;
use crate::error::{Error, Result};
use crate::langid::{language_filter_score, LangIdModel};
use crate::types::{ScoreVector, SentencePair};

pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>> {
    let range = MinMax::of(values).ok_or_else(|| Error::data("cannot normalize an empty list"))?;
    Ok(values.iter().map(|v| range.normalize(*v)).collect())
}

/// Product of the partial scores.
pub fn combine(language: f64, acceptability: f64, domain: f64) -> f64 {
    language * acceptability * domain
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn of(values: &[f64]) -> Option<MinMax> {
        values.iter().map(|v| MinMax { min: *v, max: *v }).reduce(MinMax::merge)
    }

    pub fn merge(self, other: MinMax) -> MinMax {
        MinMax { min: self.min.min(other.min), max: self.max.max(other.max) }
    }

    /// `(y - min) / (max - min)`; a degenerate range maps everything to 1.
    pub fn normalize(&self, y: f64) -> f64 {
        if self.max > self.min {
            (y - self.min) / (self.max - self.min)
        } else {
            1.0
        }
    }
}

/// Per-filter ranges used to normalize one scored corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    /// Identifies the scored input, e.g. a content digest.
    pub corpus: String,
    pub records: u64,
    pub filters: BTreeMap<String, MinMax>,
}

pub struct Filters<'a> {
    pub langid: Option<LanguageFilter<'a>>,
    pub acceptability: Option<&'a AcceptabilityModel>,
    pub domain: Option<&'a DomainFilter>,
}

pub struct LanguageFilter<'a> {
    pub model: &'a LangIdModel,
    pub want_src: String,
    pub want_tgt: String,
}

#[derive(Debug, Clone)]
pub struct ScoredCorpus {
    /// `domain` holds the clipped, unnormalized domain score.
    pub scores: Vec<ScoreVector>,
    pub stats: NormalizationStats,
}

/// Scores a corpus with whichever filters are configured; missing filters
/// contribute a constant 1.
pub fn score_corpus(pairs: &[SentencePair], filters: &Filters<'_>, corpus_id: &str) -> Result<ScoredCorpus> {
    let n = pairs.len();
    let language: Vec<f64> = match &filters.langid {
        Some(f) => pairs.par_iter().map(|p| language_filter_score(f.model, p, &f.want_src, &f.want_tgt)).collect(),
        None => vec![1.0; n],
    };
    let acceptability = match filters.acceptability {
        Some(m) => m.score_pairs(pairs)?,
        None => vec![1.0; n],
    };
    let domain = match filters.domain {
        Some(d) => d.score_pairs(pairs)?,
        None => vec![1.0; n],
    };

    let range = |v: &[f64]| v.par_iter().map(|x| MinMax { min: *x, max: *x }).reduce_with(MinMax::merge);
    let mut ranges = BTreeMap::new();
    for (name, col) in [("language", &language), ("acceptability", &acceptability), ("domain", &domain)] {
        if let Some(r) = range(col) {
            ranges.insert(name.to_owned(), r);
        }
    }
    let dom_range = ranges.get("domain").copied().unwrap_or(MinMax { min: 1.0, max: 1.0 });

    let scores = (0..n)
        .into_par_iter()
        .map(|i| ScoreVector {
            language: language[i],
            acceptability: acceptability[i],
            domain: domain[i],
            final_score: combine(language[i], acceptability[i], dom_range.normalize(domain[i])),
        })
        .collect();
    Ok(ScoredCorpus {
        scores,
        stats: NormalizationStats { corpus: corpus_id.to_owned(), records: n as u64, filters: ranges },
    })
}

/// One rankable item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: u64,
    pub score: f64,
    /// Words on the budgeted side.
    pub words: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Selection {
    /// Selected ids in rank order.
    pub ids: Vec<u64>,
    pub words: u64,
    /// The budget was never reached.
    pub saturated: bool,
}

/// Score descending, then id ascending.
fn rank_cmp(a: &Candidate, b: &Candidate) -> Ordering {
    b.score.total_cmp(&a.score).then(a.id.cmp(&b.id))
}

pub fn rank(candidates: &[Candidate]) -> Result<Vec<Candidate>> {
    if candidates.iter().any(|c| c.score.is_nan()) {
        return Err(Error::data("cannot rank NaN scores"));
    }
    let mut ranked = candidates.to_vec();
    ranked.par_sort_by(rank_cmp);
    Ok(ranked)
}

/// Greedy selection in rank order until the word budget is reached; the
/// pair that crosses the budget is kept.
pub fn select_by_budget(candidates: &[Candidate], budget: u64) -> Result<Selection> {
    if budget == 0 {
        return Err(Error::config("word budget must be positive"));
    }
    let mut sel = Selection::default();
    for c in rank(candidates)? {
        if sel.words >= budget {
            break;
        }
        sel.ids.push(c.id);
        sel.words += c.words;
    }
    sel.saturated = sel.words < budget;
    Ok(sel)
}

/// The `ceil(percent / 100 * n)` best candidates, in rank order.
pub fn select_top_percent(candidates: &[Candidate], percent: f64) -> Result<Selection> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::config(format!("top percentage must be in (0, 100], got {percent}")));
    }
    let n = candidates.len();
    let exact = percent * n as f64 / 100.0;
    // absorb representation error so that e.g. 33.3% of 1000 keeps 333
    let keep = if (exact - exact.round()).abs() < 1e-9 { exact.round() } else { exact.ceil() };
    let keep = (keep as usize).min(n);
    let ranked = rank(candidates)?;
    let chosen = &ranked[..keep];
    Ok(Selection { ids: chosen.iter().map(|c| c.id).collect(), words: chosen.iter().map(|c| c.words).sum(), saturated: false })
}
