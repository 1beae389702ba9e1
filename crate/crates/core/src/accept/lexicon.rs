//! Probabilistic translation lexicon learned with IBM Model 1 style EM.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::{tokenize, Scheme};
use crate::types::SentencePair;

pub const MIN_PAIRS: usize = 10;

/// `P(target token | source token)`; each source row sums to 1 when built by
/// [`Lexicon::learn`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    table: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Lexicon {
    /// `iterations` EM steps starting from the uniform distribution over
    /// co-occurring target tokens.
    pub fn learn(pairs: &[SentencePair], src_scheme: Scheme, tgt_scheme: Scheme, iterations: usize) -> Result<Self> {
        if pairs.len() < MIN_PAIRS {
            return Err(Error::data(format!("lexicon needs at least {MIN_PAIRS} pairs, got {}", pairs.len())));
        }
        let mut src_vocab: Vec<String> = Vec::new();
        let mut tgt_vocab: Vec<String> = Vec::new();
        let mut src_ids: HashMap<String, u32> = HashMap::new();
        let mut tgt_ids: HashMap<String, u32> = HashMap::new();
        let intern = |vocab: &mut Vec<String>, ids: &mut HashMap<String, u32>, tok: String| -> u32 {
            *ids.entry(tok).or_insert_with_key(|t| {
                vocab.push(t.clone());
                (vocab.len() - 1) as u32
            })
        };
        let mut corpus: Vec<(Vec<u32>, Vec<u32>)> = Vec::with_capacity(pairs.len());
        for p in pairs {
            let s = tokenize(&p.source, src_scheme)
                .tokens
                .into_iter()
                .map(|t| intern(&mut src_vocab, &mut src_ids, t))
                .collect::<Vec<_>>();
            let t = tokenize(&p.target, tgt_scheme)
                .tokens
                .into_iter()
                .map(|t| intern(&mut tgt_vocab, &mut tgt_ids, t))
                .collect::<Vec<_>>();
            if !s.is_empty() && !t.is_empty() {
                corpus.push((s, t));
            }
        }

        // uniform over co-occurring target types
        let mut cooc: HashMap<u32, HashSet<u32>> = HashMap::new();
        for (s, t) in &corpus {
            for e in s {
                cooc.entry(*e).or_default().extend(t.iter().copied());
            }
        }
        let mut prob: HashMap<(u32, u32), f64> = HashMap::new();
        for (e, fs) in &cooc {
            let p = 1.0 / fs.len() as f64;
            for f in fs {
                prob.insert((*e, *f), p);
            }
        }

        for _ in 0..iterations {
            let mut counts: HashMap<(u32, u32), f64> = HashMap::with_capacity(prob.len());
            let mut totals: HashMap<u32, f64> = HashMap::new();
            for (s, t) in &corpus {
                for f in t {
                    let denom: f64 = s.iter().map(|e| prob[&(*e, *f)]).sum();
                    for e in s {
                        let c = prob[&(*e, *f)] / denom;
                        *counts.entry((*e, *f)).or_default() += c;
                        *totals.entry(*e).or_default() += c;
                    }
                }
            }
            for ((e, f), c) in counts {
                prob.insert((e, f), c / totals[&e]);
            }
        }

        let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for ((e, f), p) in prob {
            table
                .entry(src_vocab[e as usize].clone())
                .or_default()
                .insert(tgt_vocab[f as usize].clone(), p);
        }
        Ok(Lexicon { table })
    }

    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.table.get(source).and_then(|row| row.get(target)).copied().unwrap_or(0.0)
    }

    pub fn row(&self, source: &str) -> Option<&BTreeMap<String, f64>> {
        self.table.get(source)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, f64>)> {
        self.table.iter()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Drops entries below `min_prob`; rows are no longer normalized.
    pub fn pruned(&self, min_prob: f64) -> Lexicon {
        let table = self
            .table
            .iter()
            .filter_map(|(s, row)| {
                let kept: BTreeMap<String, f64> =
                    row.iter().filter(|(_, p)| **p >= min_prob).map(|(t, p)| (t.clone(), *p)).collect();
                (!kept.is_empty()).then(|| (s.clone(), kept))
            })
            .collect();
        Lexicon { table }
    }

    /// True when some token of `present` is a translation of `source` with
    /// probability at least `min_prob`.
    pub fn covers(&self, source: &str, present: &HashSet<&str>, min_prob: f64) -> bool {
        self.table
            .get(source)
            .is_some_and(|row| row.iter().any(|(t, p)| *p >= min_prob && present.contains(t.as_str())))
    }
}
