//! Backoff n-gram language models with word-normalized perplexity.
//!
//! Models are stored the way ARPA files describe them: every observed n-gram
//! carries a log10 probability and, when it is a context for a longer n-gram,
//! a log10 backoff weight. Queries follow the standard backoff walk, so a
//! model trained here and one loaded from an ARPA file behave identically.

mod arpa;
mod train;

use std::collections::HashMap;
use std::f64::consts::LN_10;

use crate::error::{Error, Result};
use crate::tokenize::TokenSeq;

pub use train::{LmConfig, Smoothing};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

pub(crate) const UNK_ID: u32 = 0;
pub(crate) const BOS_ID: u32 = 1;
pub(crate) const EOS_ID: u32 = 2;

/// log10 probability conventionally given to `<s>`, which is never predicted.
pub(crate) const BOS_LOG10: f64 = -99.0;

pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramLm {
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    /// `tables[n - 1]` holds the n-grams.
    tables: Vec<HashMap<Vec<u32>, Entry>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perplexity {
    pub value: f64,
    /// Scored tokens, including `</s>`.
    pub tokens: usize,
}

impl NGramLm {
    pub(crate) fn with_vocab(vocab: Vec<String>, order: usize) -> Self {
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        NGramLm { vocab, index, tables: vec![HashMap::new(); order] }
    }

    pub fn order(&self) -> usize {
        self.tables.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Token id, with out-of-vocabulary tokens mapped to `<unk>`.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// Ids of every token that can be predicted (the vocabulary minus `<s>`).
    pub fn predictable(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.vocab.len() as u32).filter(|&i| i != BOS_ID)
    }

    pub(crate) fn table(&self, n: usize) -> &HashMap<Vec<u32>, Entry> {
        &self.tables[n - 1]
    }

    pub(crate) fn table_mut(&mut self, n: usize) -> &mut HashMap<Vec<u32>, Entry> {
        &mut self.tables[n - 1]
    }

    /// Number of stored n-grams per order.
    pub fn counts(&self) -> Vec<usize> {
        self.tables.iter().map(HashMap::len).collect()
    }

    /// Every n-gram stored with a backoff weight, plus the empty context.
    pub fn contexts(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for table in &self.tables {
            let mut ctx: Vec<Vec<String>> = table
                .iter()
                .filter(|(_, e)| e.log10_backoff.is_some())
                .map(|(k, _)| self.words(k))
                .collect();
            ctx.sort();
            out.extend(ctx);
        }
        out
    }

    fn words(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.vocab[i as usize].clone()).collect()
    }

    /// Natural-log probability of `word` after `context` (ids). Only the last
    /// `order - 1` context tokens are used.
    pub(crate) fn ln_prob_ids(&self, context: &[u32], word: u32) -> f64 {
        let keep = context.len().min(self.order() - 1);
        let mut ctx = &context[context.len() - keep..];
        let mut key: Vec<u32> = Vec::with_capacity(keep + 1);
        let mut acc = 0.0;
        loop {
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[ctx.len()].get(&key) {
                return acc + e.log10_prob * LN_10;
            }
            if ctx.is_empty() {
                // every predictable id has a unigram entry; reaching here means
                // the model was built without one
                return f64::NEG_INFINITY;
            }
            if let Some(bow) = self.tables[ctx.len() - 1].get(ctx).and_then(|e| e.log10_backoff) {
                acc += bow * LN_10;
            }
            ctx = &ctx[1..];
        }
    }

    /// ln P(word | context) for string tokens; OOV tokens are scored as `<unk>`.
    pub fn ln_prob(&self, context: &[&str], word: &str) -> f64 {
        let ids: Vec<u32> = context
            .iter()
            .map(|t| if *t == BOS { BOS_ID } else { self.id(t) })
            .collect();
        let w = if word == EOS { EOS_ID } else { self.id(word) };
        self.ln_prob_ids(&ids, w)
    }

    /// Sum of ln P(x_i | x_<i) over the tokens and the closing `</s>`, with
    /// `<s>` as the initial context.
    pub fn log_prob(&self, x: &TokenSeq) -> f64 {
        let mut history: Vec<u32> = Vec::with_capacity(x.len() + 2);
        history.push(BOS_ID);
        let mut total = 0.0;
        for id in x.iter().map(|t| self.id(t)).chain(std::iter::once(EOS_ID)) {
            total += self.ln_prob_ids(&history, id);
            history.push(id);
        }
        total
    }

    /// `exp(-(1/|x|) Σ ln P)`, where |x| counts the tokens plus `</s>`.
    pub fn perplexity(&self, x: &TokenSeq) -> Result<Perplexity> {
        if x.is_empty() {
            return Err(Error::EmptySentence);
        }
        let tokens = x.len() + 1;
        let value = (-self.log_prob(x) / tokens as f64).exp();
        Ok(Perplexity { value, tokens })
    }
}
