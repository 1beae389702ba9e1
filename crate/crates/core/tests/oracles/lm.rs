//! Naive n-gram model evaluated straight from the training sentences.
//!
//! Counts are obtained by scanning every sentence for each query, and the
//! smoothing recursions are written out as in the textbook definitions. The
//! only shared piece with the library is the meaning of the parameters.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, Copy)]
pub enum NaiveSmoothing {
    KneserNey(f64),
    AddK(f64),
}

pub struct NaiveLm {
    sentences: Vec<Vec<String>>,
    order: usize,
    smoothing: NaiveSmoothing,
    /// Everything that can be predicted: training words, `<unk>`, `</s>`.
    predictable: Vec<String>,
    memo: RefCell<HashMap<(Vec<String>, String), f64>>,
}

impl NaiveLm {
    pub fn new(corpus: &[Vec<String>], order: usize, smoothing: NaiveSmoothing) -> Self {
        let mut words: BTreeSet<String> = corpus.iter().flatten().cloned().collect();
        words.insert("<unk>".into());
        words.insert("</s>".into());
        let sentences = corpus
            .iter()
            .map(|s| {
                let mut v = vec!["<s>".to_string()];
                v.extend(s.iter().cloned());
                v.push("</s>".into());
                v
            })
            .collect();
        NaiveLm { sentences, order, smoothing, predictable: words.into_iter().collect(), memo: RefCell::new(HashMap::new()) }
    }

    pub fn predictable(&self) -> &[String] {
        &self.predictable
    }

    fn count(&self, g: &[String]) -> f64 {
        let mut c = 0;
        for s in &self.sentences {
            if s.len() >= g.len() {
                c += s.windows(g.len()).filter(|w| *w == g).count();
            }
        }
        c as f64
    }

    /// Distinct words seen immediately before `g`.
    fn left_extensions(&self, g: &[String]) -> f64 {
        let mut seen = BTreeSet::new();
        for s in &self.sentences {
            for i in 1..s.len() {
                if s.len() - i >= g.len() && s[i..i + g.len()] == *g {
                    seen.insert(s[i - 1].clone());
                }
            }
        }
        seen.len() as f64
    }

    fn kn_count(&self, g: &[String]) -> f64 {
        if g.len() == self.order || g[0] == "<s>" {
            self.count(g)
        } else {
            self.left_extensions(g)
        }
    }

    fn extend(ctx: &[String], w: &str) -> Vec<String> {
        let mut g = ctx.to_vec();
        g.push(w.to_string());
        g
    }

    /// P(w | ctx) where `ctx` already holds at most `order - 1` tokens.
    pub fn prob(&self, ctx: &[String], w: &str) -> f64 {
        let key = (ctx.to_vec(), w.to_string());
        if let Some(&p) = self.memo.borrow().get(&key) {
            return p;
        }
        let p = match self.smoothing {
            NaiveSmoothing::KneserNey(d) => self.kn(ctx, w, d),
            NaiveSmoothing::AddK(k) => self.add_k(ctx, w, k),
        };
        self.memo.borrow_mut().insert(key, p);
        p
    }

    fn kn(&self, ctx: &[String], w: &str, d: f64) -> f64 {
        let v = self.predictable.len() as f64;
        if ctx.is_empty() {
            let counts: Vec<f64> = self.predictable.iter().map(|u| self.kn_count(std::slice::from_ref(u))).collect();
            let total: f64 = counts.iter().sum();
            let types = counts.iter().filter(|&&c| c > 0.0).count() as f64;
            let a = self.kn_count(&[w.to_string()]);
            return (a - d).max(0.0) / total + d * types / total / v;
        }
        let followers: Vec<f64> =
            self.predictable.iter().map(|u| self.kn_count(&Self::extend(ctx, u))).filter(|&c| c > 0.0).collect();
        let lower = self.prob(&ctx[1..], w);
        if followers.is_empty() {
            return lower;
        }
        let total: f64 = followers.iter().sum();
        let a = self.kn_count(&Self::extend(ctx, w));
        (a - d).max(0.0) / total + d * followers.len() as f64 / total * lower
    }

    fn add_k(&self, ctx: &[String], w: &str, k: f64) -> f64 {
        let v = self.predictable.len() as f64;
        if ctx.is_empty() {
            let total: f64 = self.predictable.iter().map(|u| self.count(std::slice::from_ref(u))).sum();
            return (self.count(&[w.to_string()]) + k) / (total + k * v);
        }
        let counts: Vec<(String, f64)> =
            self.predictable.iter().map(|u| (u.clone(), self.count(&Self::extend(ctx, u)))).collect();
        let total: f64 = counts.iter().map(|(_, c)| c).sum();
        if total == 0.0 {
            return self.prob(&ctx[1..], w);
        }
        let c = self.count(&Self::extend(ctx, w));
        let denom = total + k * v;
        if c > 0.0 {
            return (c + k) / denom;
        }
        let unseen: Vec<&String> = counts.iter().filter(|(_, c)| *c == 0.0).map(|(u, _)| u).collect();
        let unseen_lower: f64 = unseen.iter().map(|u| self.prob(&ctx[1..], u)).sum();
        k * unseen.len() as f64 / denom * self.prob(&ctx[1..], w) / unseen_lower
    }

    /// Natural-log probability of a sentence including `</s>`; OOV tokens
    /// become `<unk>`.
    pub fn log_prob(&self, tokens: &[String]) -> f64 {
        let known: BTreeSet<&String> = self.predictable.iter().collect();
        let mut history = vec!["<s>".to_string()];
        let mut total = 0.0;
        let words = tokens
            .iter()
            .map(|t| if known.contains(t) && t != "</s>" { t.clone() } else { "<unk>".to_string() })
            .chain(std::iter::once("</s>".to_string()));
        for w in words {
            let keep = history.len().min(self.order - 1);
            total += self.prob(&history[history.len() - keep..], &w).ln();
            history.push(w);
        }
        total
    }
}
