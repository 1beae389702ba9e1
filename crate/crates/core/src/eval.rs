//! Precision/recall evaluation and corpus statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ScoreVector;

pub const HISTOGRAM_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub predicted: u64,
    pub true_positives: u64,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<u64> {
    if scores.len() != labels.len() {
        return Err(Error::data(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    if positives == 0 {
        return Err(Error::data("no positive labels"));
    }
    Ok(positives)
}

fn point(scores: &[f64], labels: &[bool], positives: u64, threshold: f64) -> PrPoint {
    let (mut predicted, mut tp) = (0u64, 0u64);
    for (&s, &l) in scores.iter().zip(labels) {
        if s >= threshold {
            predicted += 1;
            tp += u64::from(l);
        }
    }
    let precision = if predicted == 0 { 1.0 } else { tp as f64 / predicted as f64 };
    PrPoint { threshold, precision, recall: tp as f64 / positives as f64, predicted, true_positives: tp }
}

/// A pair is predicted positive iff its score is at least `threshold`.
/// Precision with no predictions is 1.0.
pub fn precision_recall_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<(f64, f64)> {
    let positives = check(scores, labels)?;
    let p = point(scores, labels, positives, threshold);
    Ok((p.precision, p.recall))
}

pub fn pr_curve(scores: &[f64], labels: &[bool], grid: &[f64]) -> Result<Vec<PrPoint>> {
    let positives = check(scores, labels)?;
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::config("threshold grid must be sorted ascending"));
    }
    Ok(grid.iter().map(|&t| point(scores, labels, positives, t)).collect())
}

/// Area under the ROC curve: the probability that a random positive
/// outscores a random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let positives = check(scores, labels)?;
    let negatives = labels.len() as u64 - positives;
    if negatives == 0 {
        return Err(Error::data("no negative labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over tie groups
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// Parses `start:end:step` into an inclusive ascending grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, s] = parts[..] else {
        return Err(Error::config(format!("grid `{spec}` is not start:end:step")));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::config(format!("grid `{spec}`: bad number `{x}`")));
    let (start, end, step) = (num(a)?, num(b)?, num(s)?);
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::config(format!("grid `{spec}` needs start <= end and a positive step")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| (start + i as f64 * step).min(end)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64) -> Self {
        Histogram { lo, hi, counts: vec![0; HISTOGRAM_BINS] }
    }

    /// Values outside `[lo, hi]` land in the edge bins.
    pub fn add(&mut self, x: f64) {
        let span = self.hi - self.lo;
        let bin = if span > 0.0 { ((x - self.lo) / span * HISTOGRAM_BINS as f64).floor() } else { 0.0 };
        let bin = if bin.is_nan() { 0 } else { (bin.max(0.0) as usize).min(HISTOGRAM_BINS - 1) };
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub histogram: Histogram,
    pub zeroed: u64,
    pub zeroed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub records: u64,
    pub filters: BTreeMap<String, FilterStats>,
    pub total_words: u64,
    pub selected_words: u64,
    pub selected_records: u64,
}

/// One scored record as seen by [`CorpusStats`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsRecord {
    pub scores: ScoreVector,
    pub words: u64,
    pub selected: bool,
}

/// Single-pass accumulator; partial accumulators combine with `merge`.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    records: u64,
    hist: [Histogram; 4],
    zeroed: [u64; 4],
    total_words: u64,
    selected_words: u64,
    selected_records: u64,
}

const FILTERS: [&str; 4] = ["language", "acceptability", "domain", "final"];

impl CorpusStats {
    /// `domain_clip` is the upper edge of the domain histogram.
    pub fn new(domain_clip: f64) -> Self {
        CorpusStats {
            records: 0,
            hist: [Histogram::new(0.0, 1.0), Histogram::new(0.0, 1.0), Histogram::new(0.0, domain_clip), Histogram::new(0.0, 1.0)],
            zeroed: [0; 4],
            total_words: 0,
            selected_words: 0,
            selected_records: 0,
        }
    }

    pub fn push(&mut self, r: &StatsRecord) {
        let s = &r.scores;
        self.records += 1;
        for (k, v) in [s.language, s.acceptability, s.domain, s.final_score].into_iter().enumerate() {
            self.hist[k].add(v);
            self.zeroed[k] += u64::from(v == 0.0);
        }
        self.total_words += r.words;
        if r.selected {
            self.selected_words += r.words;
            self.selected_records += 1;
        }
    }

    pub fn merge(&mut self, other: &CorpusStats) {
        self.records += other.records;
        for k in 0..4 {
            self.hist[k].merge(&other.hist[k]);
            self.zeroed[k] += other.zeroed[k];
        }
        self.total_words += other.total_words;
        self.selected_words += other.selected_words;
        self.selected_records += other.selected_records;
    }

    pub fn finish(self) -> StatsReport {
        let records = self.records;
        let filters = FILTERS
            .iter()
            .zip(self.hist)
            .zip(self.zeroed)
            .map(|((name, histogram), zeroed)| {
                let zeroed_fraction = if records == 0 { 0.0 } else { zeroed as f64 / records as f64 };
                (name.to_string(), FilterStats { histogram, zeroed, zeroed_fraction })
            })
            .collect();
        StatsReport {
            records,
            filters,
            total_words: self.total_words,
            selected_words: self.selected_words,
            selected_records: self.selected_records,
        }
    }
}

pub fn corpus_stats<'a, I>(records: I, domain_clip: f64) -> StatsReport
where
    I: IntoIterator<Item = &'a StatsRecord>,
{
    let mut acc = CorpusStats::new(domain_clip);
    for r in records {
        acc.push(r);
    }
    acc.finish()
}
