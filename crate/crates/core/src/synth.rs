//! Synthetic training data for the acceptability classifier.
//!
//! Every clean pair yields one negative by one of three corruptions chosen
//! uniformly: a target taken from a neighbouring record, a truncated side, or
//! a side with part of its words reordered. Each record draws from its own
//! RNG stream keyed by `(seed, id)`, so output does not depend on scheduling.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::write_columns;
use crate::error::{Error, Result};
use crate::tokenize::{tokenize, Scheme};
use crate::types::{SentencePair, Side};

const SWAP_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corruption {
    None,
    Adjacent,
    Truncate,
    Swap,
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corruption::None => "none",
            Corruption::Adjacent => "adjacent",
            Corruption::Truncate => "truncate",
            Corruption::Swap => "swap",
        })
    }
}

impl FromStr for Corruption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Corruption::None,
            "adjacent" => Corruption::Adjacent,
            "truncate" => Corruption::Truncate,
            "swap" => Corruption::Swap,
            other => return Err(Error::data(format!("unknown corruption tag `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionPolicy {
    /// Neighbourhood size for adjacent-target negatives.
    pub window: usize,
    pub truncate_range: (f64, f64),
    pub swap_range: (f64, f64),
    pub seed: u64,
    pub src_scheme: Scheme,
    pub tgt_scheme: Scheme,
}

impl Default for CorruptionPolicy {
    fn default() -> Self {
        CorruptionPolicy {
            window: 2,
            truncate_range: (0.3, 0.7),
            swap_range: (0.3, 0.7),
            seed: 0,
            src_scheme: Scheme::Whitespace,
            tgt_scheme: Scheme::Whitespace,
        }
    }
}

impl CorruptionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("adjacency window must be at least 1"));
        }
        for (name, (lo, hi)) in [("truncate", self.truncate_range), ("swap", self.swap_range)] {
            if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
                return Err(Error::config(format!("{name} fraction range must satisfy 0 < lo <= hi < 1")));
            }
        }
        Ok(())
    }

    fn scheme(&self, side: Side) -> Scheme {
        match side {
            Side::Source => self.src_scheme,
            Side::Target => self.tgt_scheme,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub pair: SentencePair,
    pub label: bool,
    pub tag: Corruption,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledSet {
    pub records: Vec<LabeledRecord>,
}

impl LabeledSet {
    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label).count()
    }

    pub fn negatives(&self) -> usize {
        self.records.len() - self.positives()
    }
}

/// RNG stream for one record.
pub fn record_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Pairs source `i` with a target drawn uniformly from the records within
/// `k` positions of `i` whose target differs from target `i`.
pub fn neg_adjacent<R: Rng>(corpus: &[SentencePair], i: usize, k: usize, rng: &mut R) -> Result<SentencePair> {
    let own = &corpus[i].target;
    let lo = i.saturating_sub(k);
    let hi = (i + k).min(corpus.len().saturating_sub(1));
    let candidates: Vec<usize> = (lo..=hi).filter(|&j| j != i && corpus[j].target != *own).collect();
    let j = *candidates.choose(rng).ok_or(Error::NoAdjacentCandidates(i))?;
    Ok(SentencePair { id: corpus[i].id, source: corpus[i].source.clone(), target: corpus[j].target.clone(), meta: None })
}

fn tokens_of(pair: &SentencePair, side: Side, scheme: Scheme) -> Vec<String> {
    tokenize(pair.side(side), scheme).tokens
}

fn with_side(pair: &SentencePair, side: Side, tokens: &[String], scheme: Scheme) -> SentencePair {
    let mut out = SentencePair { meta: None, ..pair.clone() };
    *out.side_mut(side) = tokens.join(scheme.joiner());
    out
}

/// Number of tokens removed from an `n`-token side for fraction `f`.
pub fn truncated_count(n: usize, f: f64) -> usize {
    ((f * n as f64).ceil() as usize).clamp(1, n - 1)
}

/// Drops a suffix of `ceil(f * n)` tokens, `f` uniform in `range`, keeping
/// at least one token. `None` when the side has fewer than 2 tokens.
pub fn neg_truncate<R: Rng>(
    pair: &SentencePair,
    side: Side,
    scheme: Scheme,
    range: (f64, f64),
    rng: &mut R,
) -> Option<SentencePair> {
    let tokens = tokens_of(pair, side, scheme);
    let n = tokens.len();
    if n < 2 {
        return None;
    }
    let f = rng.gen_range(range.0..=range.1);
    let removed = truncated_count(n, f);
    Some(with_side(pair, side, &tokens[..n - removed], scheme))
}

/// Permutes `ceil(f * n)` randomly chosen positions. `None` when no attempt
/// produced a visibly different sequence.
pub fn neg_swap<R: Rng>(
    pair: &SentencePair,
    side: Side,
    scheme: Scheme,
    range: (f64, f64),
    rng: &mut R,
) -> Option<SentencePair> {
    let tokens = tokens_of(pair, side, scheme);
    let n = tokens.len();
    if n < 2 || tokens.iter().all(|t| *t == tokens[0]) {
        return None;
    }
    for _ in 0..SWAP_ATTEMPTS {
        let f = rng.gen_range(range.0..=range.1);
        let m = ((f * n as f64).ceil() as usize).clamp(2, n);
        let mut positions = index::sample(rng, n, m).into_vec();
        positions.sort_unstable();
        let mut values: Vec<&String> = positions.iter().map(|&p| &tokens[p]).collect();
        values.shuffle(rng);
        let mut out = tokens.clone();
        for (p, v) in positions.iter().zip(values) {
            out[*p] = v.clone();
        }
        if out != tokens {
            return Some(with_side(pair, side, &out, scheme));
        }
    }
    None
}

/// Builds the negative for record `i`.
pub fn corrupt(corpus: &[SentencePair], i: usize, policy: &CorruptionPolicy) -> Result<LabeledRecord> {
    let pos = &corpus[i];
    let mut rng = record_rng(policy.seed, pos.id);
    let choice = rng.gen_range(0..3u8);
    let side = if rng.gen_bool(0.5) { Side::Source } else { Side::Target };
    let scheme = policy.scheme(side);
    let negative = |pair: SentencePair, tag| LabeledRecord { pair, label: false, tag };

    let attempt = match choice {
        0 => None,
        1 => neg_truncate(pos, side, scheme, policy.truncate_range, &mut rng).map(|p| negative(p, Corruption::Truncate)),
        _ => neg_swap(pos, side, scheme, policy.swap_range, &mut rng).map(|p| negative(p, Corruption::Swap)),
    };
    if let Some(rec) = attempt {
        return Ok(rec);
    }
    match neg_adjacent(corpus, i, policy.window, &mut rng) {
        Ok(p) => Ok(negative(p, Corruption::Adjacent)),
        Err(e) => {
            // no usable neighbour: truncate whichever side allows it
            for side in [Side::Target, Side::Source] {
                if let Some(p) = neg_truncate(pos, side, policy.scheme(side), policy.truncate_range, &mut rng) {
                    return Ok(negative(p, Corruption::Truncate));
                }
            }
            Err(e)
        }
    }
}

/// One negative per positive, interleaved as `positive, negative`.
/// Parallel over records; the result is independent of the worker count.
pub fn build_training_set(positives: &[SentencePair], policy: &CorruptionPolicy) -> Result<LabeledSet> {
    policy.validate()?;
    if positives.len() < 2 {
        return Err(Error::data(format!("need at least 2 positive pairs, got {}", positives.len())));
    }
    let negatives = (0..positives.len())
        .into_par_iter()
        .map(|i| corrupt(positives, i, policy))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(positives.len() * 2);
    for (pos, neg) in positives.iter().zip(negatives) {
        records.push(LabeledRecord { pair: pos.clone(), label: true, tag: Corruption::None });
        records.push(neg);
    }
    Ok(LabeledSet { records })
}

/// `source<TAB>target<TAB>label<TAB>tag`, label 1 or 0.
pub fn write_labeled<W: Write>(mut w: W, set: &LabeledSet) -> Result<()> {
    for r in &set.records {
        let pair = SentencePair { meta: None, ..r.pair.clone() };
        write_columns(&mut w, &pair)?;
        writeln!(w, "\t{}\t{}", u8::from(r.label), r.tag)?;
    }
    Ok(())
}

pub fn read_labeled<R: BufRead>(r: R) -> Result<LabeledSet> {
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let bad = |reason: &str| Error::MalformedLine { line: i as u64, reason: reason.to_owned() };
        let cols: Vec<&str> = line.split('\t').collect();
        let [source, target, label, tag] = cols[..] else {
            return Err(bad("expected source, target, label, tag"));
        };
        let label = match label {
            "1" => true,
            "0" => false,
            _ => return Err(bad("label must be 0 or 1")),
        };
        records.push(LabeledRecord {
            pair: SentencePair::new(i as u64, source, target),
            label,
            tag: tag.parse().map_err(|_| bad("unknown corruption tag"))?,
        });
    }
    Ok(LabeledSet { records })
}
