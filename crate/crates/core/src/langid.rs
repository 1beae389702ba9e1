//! Character n-gram language identification.
//!
//! A multinomial logistic model over hashed character n-grams (orders 1 to
//! `n_max`). The language filter keeps a pair only when the top-1 language of
//! each side matches the requested code.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SentencePair;

pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_BUCKETS: usize = 1 << 20;
/// Reserved code for empty or whitespace-only input.
pub const UNDETERMINED: &str = "und";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LangIdConfig {
    pub n_max: usize,
    pub buckets: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    pub seed: u64,
}

impl Default for LangIdConfig {
    fn default() -> Self {
        LangIdConfig { n_max: 4, buckets: DEFAULT_BUCKETS, epochs: 5, learning_rate: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub language: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangIdModel {
    languages: Vec<String>,
    n_max: usize,
    buckets: usize,
    /// bucket-major: `weights[bucket * languages.len() + lang]`
    weights: Vec<f32>,
    bias: Vec<f32>,
}

/// On-disk layout: header fields, then one dense weight row per language.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    languages: Vec<String>,
    n_max: usize,
    buckets: usize,
    bias: Vec<f32>,
    weights: Vec<Vec<f32>>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// Hashed, L2-normalized character n-gram features sorted by bucket.
fn features(text: &str, n_max: usize, buckets: usize) -> Vec<(usize, f32)> {
    let mut chars: Vec<char> = vec![' '];
    for word in text.split_whitespace() {
        chars.extend(word.chars().flat_map(char::to_lowercase));
        chars.push(' ');
    }
    if chars.len() == 1 {
        return Vec::new();
    }
    let mut hits: Vec<usize> = Vec::with_capacity(chars.len() * n_max);
    let mut gram = String::new();
    for start in 0..chars.len() {
        gram.clear();
        for n in 1..=n_max {
            let Some(c) = chars.get(start + n - 1) else { break };
            gram.push(*c);
            if n == 1 && *c == ' ' {
                // a lone boundary marker carries no signal
                continue;
            }
            hits.push((fnv1a(gram.as_bytes()) % buckets as u64) as usize);
        }
    }
    hits.sort_unstable();
    let mut feats: Vec<(usize, f32)> = Vec::new();
    for b in hits {
        match feats.last_mut() {
            Some((last, v)) if *last == b => *v += 1.0,
            _ => feats.push((b, 1.0)),
        }
    }
    let norm = feats.iter().map(|(_, v)| v * v).sum::<f32>().sqrt();
    for (_, v) in &mut feats {
        *v /= norm;
    }
    feats
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
}

impl LangIdModel {
    pub fn train<I, S, L>(labeled: I, config: &LangIdConfig) -> Result<Self>
    where
        I: IntoIterator<Item = (S, L)>,
        S: AsRef<str>,
        L: AsRef<str>,
    {
        if config.n_max == 0 || config.buckets == 0 {
            return Err(Error::config("n_max and buckets must be positive"));
        }
        let samples: Vec<(String, String)> = labeled
            .into_iter()
            .map(|(t, l)| (t.as_ref().to_owned(), l.as_ref().to_owned()))
            .collect();
        let mut languages: Vec<String> = samples.iter().map(|(_, l)| l.clone()).collect();
        languages.sort();
        languages.dedup();
        if languages.len() < 2 {
            return Err(Error::config(format!(
                "language identification needs at least 2 languages, got {}",
                languages.len()
            )));
        }
        let n_lang = languages.len();
        let encoded: Vec<(Vec<(usize, f32)>, usize)> = samples
            .iter()
            .map(|(text, lang)| {
                let label = languages.binary_search(lang).expect("label collected above");
                (features(text, config.n_max, config.buckets), label)
            })
            .filter(|(f, _)| !f.is_empty())
            .collect();

        let mut model = LangIdModel {
            languages,
            n_max: config.n_max,
            buckets: config.buckets,
            weights: vec![0.0; config.buckets * n_lang],
            bias: vec![0.0; n_lang],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut probs = vec![0.0f64; n_lang];
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            // linear decay over the whole run
            let lr = config.learning_rate * (1.0 - epoch as f32 / config.epochs as f32);
            for &i in &order {
                let (feats, label) = &encoded[i];
                model.logits_into(feats, &mut probs);
                softmax_in_place(&mut probs);
                for (l, p) in probs.iter().enumerate() {
                    let grad = (*p - if l == *label { 1.0 } else { 0.0 }) as f32;
                    if grad == 0.0 {
                        continue;
                    }
                    model.bias[l] -= lr * grad;
                    for &(b, x) in feats {
                        model.weights[b * n_lang + l] -= lr * grad * x;
                    }
                }
            }
        }
        Ok(model)
    }

    fn logits_into(&self, feats: &[(usize, f32)], out: &mut [f64]) {
        let n_lang = self.languages.len();
        for (l, z) in out.iter_mut().enumerate() {
            *z = f64::from(self.bias[l]);
        }
        for &(b, x) in feats {
            let row = &self.weights[b * n_lang..(b + 1) * n_lang];
            for (z, w) in out.iter_mut().zip(row) {
                *z += f64::from(*w) * f64::from(x);
            }
        }
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Probability for every language, in the order of [`Self::languages`].
    /// Empty for whitespace-only text.
    pub fn distribution(&self, text: &str) -> Vec<f64> {
        let feats = features(text, self.n_max, self.buckets);
        if feats.is_empty() {
            return Vec::new();
        }
        let mut probs = vec![0.0; self.languages.len()];
        self.logits_into(&feats, &mut probs);
        softmax_in_place(&mut probs);
        probs
    }

    pub fn detect(&self, text: &str) -> Detection {
        let probs = self.distribution(text);
        if probs.is_empty() {
            return Detection { language: UNDETERMINED.to_owned(), confidence: 0.0 };
        }
        // languages are sorted, so the first maximum is the smallest code
        let mut best = 0;
        for (l, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = l;
            }
        }
        Detection { language: self.languages[best].clone(), confidence: probs[best] }
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let n_lang = self.languages.len();
        let rows = (0..n_lang)
            .map(|l| (0..self.buckets).map(|b| self.weights[b * n_lang + l]).collect())
            .collect();
        let file = ModelFile {
            version: MODEL_VERSION,
            languages: self.languages.clone(),
            n_max: self.n_max,
            buckets: self.buckets,
            bias: self.bias.clone(),
            weights: rows,
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        if file.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported langid model version {}", file.version)));
        }
        let n_lang = file.languages.len();
        if n_lang < 2 || file.bias.len() != n_lang || file.weights.len() != n_lang {
            return Err(Error::Format("language count does not match bias/weight rows".into()));
        }
        if file.weights.iter().any(|row| row.len() != file.buckets) {
            return Err(Error::Format("weight row length differs from bucket count".into()));
        }
        if file.languages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("languages must be sorted and unique".into()));
        }
        let mut weights = vec![0.0; file.buckets * n_lang];
        for (l, row) in file.weights.iter().enumerate() {
            for (b, w) in row.iter().enumerate() {
                weights[b * n_lang + l] = *w;
            }
        }
        Ok(LangIdModel { languages: file.languages, n_max: file.n_max, buckets: file.buckets, weights, bias: file.bias })
    }
}

/// 1 when both sides are detected as the wanted languages, else 0.
pub fn language_filter_score(model: &LangIdModel, pair: &SentencePair, want_src: &str, want_tgt: &str) -> f64 {
    let ok = model.detect(&pair.source).language == want_src && model.detect(&pair.target).language == want_tgt;
    if ok {
        1.0
    } else {
        0.0
    }
}
