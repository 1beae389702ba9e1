use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Entry, NGramLm, BOS, BOS_ID, BOS_LOG10, EOS, EOS_ID, MAX_ORDER, UNK};
use crate::error::{Error, Result};
use crate::tokenize::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Smoothing {
    /// Interpolated Kneser-Ney with a single fixed discount.
    KneserNey { discount: f64 },
    /// Add-k at every order; unseen continuations of an observed context
    /// share the leftover mass in proportion to the lower-order model.
    AddK { k: f64 },
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::KneserNey { discount: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub order: usize,
    pub smoothing: Smoothing,
    /// Tokens seen fewer times than this are mapped to `<unk>`.
    pub min_count: u64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig { order: 3, smoothing: Smoothing::default(), min_count: 1 }
    }
}

type Counts = BTreeMap<Vec<u32>, f64>;

impl NGramLm {
    pub fn train<I>(corpus: I, config: &LmConfig) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Borrow<TokenSeq>,
    {
        let order = config.order;
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::config(format!("n-gram order must be in [1, {MAX_ORDER}], got {order}")));
        }
        match config.smoothing {
            Smoothing::KneserNey { discount } if !(discount > 0.0 && discount < 1.0) => {
                return Err(Error::config("Kneser-Ney discount must be in (0, 1)"));
            }
            Smoothing::AddK { k } if !(k > 0.0 && k.is_finite()) => {
                return Err(Error::config("add-k constant must be positive"));
            }
            _ => {}
        }

        let sentences: Vec<Vec<String>> = corpus.into_iter().map(|s| s.borrow().tokens.clone()).collect();
        if sentences.is_empty() {
            return Err(Error::data("cannot train a language model on an empty corpus"));
        }

        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in &sentences {
            for t in s {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut words: Vec<&str> = freq
            .iter()
            .filter(|(w, c)| **c >= config.min_count && ![UNK, BOS, EOS].contains(*w))
            .map(|(w, _)| *w)
            .collect();
        words.sort_unstable();
        let vocab: Vec<String> = [UNK, BOS, EOS]
            .into_iter()
            .chain(words)
            .map(str::to_owned)
            .collect();
        let mut lm = NGramLm::with_vocab(vocab, order);

        let mut raw: Vec<Counts> = vec![Counts::new(); order];
        for s in &sentences {
            let mut ids = Vec::with_capacity(s.len() + 2);
            ids.push(BOS_ID);
            ids.extend(s.iter().map(|t| lm.id(t)));
            ids.push(EOS_ID);
            for n in 1..=order {
                for g in ids.windows(n) {
                    if n == 1 && g[0] == BOS_ID {
                        continue;
                    }
                    *raw[n - 1].entry(g.to_vec()).or_default() += 1.0;
                }
            }
        }

        match config.smoothing {
            Smoothing::KneserNey { discount } => {
                let adjusted = kn_adjusted_counts(&raw);
                lm.build_kn(&adjusted, discount);
            }
            Smoothing::AddK { k } => lm.build_add_k(&raw, k),
        }
        Ok(lm)
    }

    fn insert_bos(&mut self) {
        let has_contexts = self.order() > 1;
        self.table_mut(1).insert(
            vec![BOS_ID],
            Entry { log10_prob: BOS_LOG10, log10_backoff: has_contexts.then_some(0.0) },
        );
    }

    fn set_backoff(&mut self, context: &[u32], log10_backoff: f64) {
        let entry = self
            .table_mut(context.len())
            .get_mut(context)
            .expect("every context is itself an observed n-gram");
        entry.log10_backoff = Some(log10_backoff);
    }

    fn build_kn(&mut self, adjusted: &[Counts], discount: f64) {
        let n_pred = self.predictable().count() as f64;

        let uni = &adjusted[0];
        let total: f64 = uni.values().sum();
        let types = uni.len() as f64;
        let gamma = discount * types / total;
        let ids: Vec<u32> = self.predictable().collect();
        for id in ids {
            let a = uni.get(&vec![id]).copied().unwrap_or(0.0);
            let p = (a - discount).max(0.0) / total + gamma / n_pred;
            self.table_mut(1).insert(vec![id], Entry { log10_prob: p.log10(), log10_backoff: None });
        }
        self.insert_bos();

        for n in 2..=self.order() {
            for (context, group) in group_by_context(&adjusted[n - 1]) {
                let total: f64 = group.iter().map(|(_, a)| a).sum();
                let gamma = discount * group.len() as f64 / total;
                let mut entries = Vec::with_capacity(group.len());
                for (w, a) in &group {
                    let lower = self.ln_prob_ids(&context[1..], *w).exp();
                    let p = (a - discount) / total + gamma * lower;
                    let mut key = context.clone();
                    key.push(*w);
                    entries.push((key, p));
                }
                for (key, p) in entries {
                    self.table_mut(n).insert(key, Entry { log10_prob: p.log10(), log10_backoff: None });
                }
                self.set_backoff(&context, gamma.log10());
            }
        }
    }

    fn build_add_k(&mut self, raw: &[Counts], k: f64) {
        let n_pred = self.predictable().count() as f64;

        let total: f64 = raw[0].values().sum();
        let ids: Vec<u32> = self.predictable().collect();
        for id in ids {
            let c = raw[0].get(&vec![id]).copied().unwrap_or(0.0);
            let p = (c + k) / (total + k * n_pred);
            self.table_mut(1).insert(vec![id], Entry { log10_prob: p.log10(), log10_backoff: None });
        }
        self.insert_bos();

        for n in 2..=self.order() {
            for (context, group) in group_by_context(&raw[n - 1]) {
                let total: f64 = group.iter().map(|(_, c)| c).sum();
                let denom = total + k * n_pred;
                let unseen = n_pred - group.len() as f64;
                let mut seen_lower = 0.0;
                let mut entries = Vec::with_capacity(group.len());
                for (w, c) in &group {
                    seen_lower += self.ln_prob_ids(&context[1..], *w).exp();
                    let mut key = context.clone();
                    key.push(*w);
                    entries.push((key, (c + k) / denom));
                }
                for (key, p) in entries {
                    self.table_mut(n).insert(key, Entry { log10_prob: p.log10(), log10_backoff: None });
                }
                let bow = if unseen > 0.0 {
                    let mut unseen_lower = 1.0 - seen_lower;
                    if unseen_lower < 1e-9 {
                        // too much cancellation; sum the complement directly
                        let seen: Vec<u32> = group.iter().map(|(w, _)| *w).collect();
                        unseen_lower = self
                            .predictable()
                            .filter(|w| !seen.contains(w))
                            .map(|w| self.ln_prob_ids(&context[1..], w).exp())
                            .sum();
                    }
                    (k * unseen / denom / unseen_lower).log10()
                } else {
                    0.0
                };
                self.set_backoff(&context, bow);
            }
        }
    }
}

/// Kneser-Ney counts: raw counts at the highest order and for n-grams that
/// start with `<s>`, number of distinct left extensions otherwise.
fn kn_adjusted_counts(raw: &[Counts]) -> Vec<Counts> {
    let order = raw.len();
    let mut adjusted = vec![Counts::new(); order];
    adjusted[order - 1] = raw[order - 1].clone();
    for n in 1..order {
        let table = &mut adjusted[n - 1];
        for g in raw[n - 1].keys() {
            if g[0] == BOS_ID {
                table.insert(g.clone(), raw[n - 1][g]);
            }
        }
        for longer in raw[n].keys() {
            let suffix = &longer[1..];
            if suffix[0] != BOS_ID {
                *table.entry(suffix.to_vec()).or_default() += 1.0;
            }
        }
    }
    adjusted
}

/// Splits sorted n-gram counts into runs sharing the same context.
fn group_by_context(counts: &Counts) -> Vec<(Vec<u32>, Vec<(u32, f64)>)> {
    let mut groups: Vec<(Vec<u32>, Vec<(u32, f64)>)> = Vec::new();
    for (g, c) in counts {
        let (context, w) = g.split_at(g.len() - 1);
        match groups.last_mut() {
            Some((ctx, members)) if ctx.as_slice() == context => members.push((w[0], *c)),
            _ => groups.push((context.to_vec(), vec![(w[0], *c)])),
        }
    }
    groups
}
