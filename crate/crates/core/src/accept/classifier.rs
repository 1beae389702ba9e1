//! Built-in acceptability classifier: logistic regression over lexical
//! features, trained on a balanced synthetic set.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{extract, FeatureConfig, FeatureVector, FEATURE_NAMES};
use super::lexicon::Lexicon;
use super::protocol::{external_score_batch, ScorerCommand, Semantics};
use crate::error::{Error, Result};
use crate::synth::LabeledSet;
use crate::types::SentencePair;

const N_FEATURES: usize = FEATURE_NAMES.len();
/// Logits are clamped so the logistic output never rounds to 0 or 1.
const MAX_LOGIT: f64 = 30.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub em_iterations: usize,
    pub seed: u64,
    pub features: FeatureConfig,
    /// Lexicon entries below this probability are not stored in the model.
    pub prune_below: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 0.1,
            l2: 1e-4,
            em_iterations: 5,
            seed: 0,
            features: FeatureConfig::default(),
            prune_below: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltinModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Standardization applied before the linear layer.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub features: FeatureConfig,
    pub forward: Lexicon,
    pub backward: Lexicon,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AcceptabilityModel {
    Builtin(BuiltinModel),
    #[serde(skip)]
    External(ScorerCommand),
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z.clamp(-MAX_LOGIT, MAX_LOGIT)).exp())
}

impl BuiltinModel {
    pub fn features(&self, pair: &SentencePair) -> FeatureVector {
        extract(pair, &self.forward, &self.backward, &self.features)
    }

    fn logit(&self, x: &[f64; N_FEATURES]) -> f64 {
        let mut z = self.bias;
        for i in 0..N_FEATURES {
            z += self.weights[i] * (x[i] - self.mean[i]) / self.scale[i];
        }
        z
    }

    /// Probability of parallelism in (0, 1); pairs with an empty side score 0.
    pub fn score(&self, pair: &SentencePair) -> f64 {
        if pair.source.trim().is_empty() || pair.target.trim().is_empty() {
            return 0.0;
        }
        sigmoid(self.logit(&self.features(pair).to_array()))
    }
}

impl AcceptabilityModel {
    pub fn score_pairs(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        match self {
            AcceptabilityModel::Builtin(m) => Ok(pairs.par_iter().map(|p| m.score(p)).collect()),
            AcceptabilityModel::External(cmd) => {
                let empty = |p: &SentencePair| p.source.trim().is_empty() || p.target.trim().is_empty();
                let wanted: Vec<SentencePair> = pairs.iter().filter(|p| !empty(p)).cloned().collect();
                let mut scores = external_score_batch(cmd, Semantics::Parallelism, &wanted)?.into_iter();
                Ok(pairs.iter().map(|p| if empty(p) { 0.0 } else { scores.next().expect("one score per pair") }).collect())
            }
        }
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        match self {
            AcceptabilityModel::Builtin(_) => Ok(serde_json::to_writer(w, self)?),
            AcceptabilityModel::External(_) => Err(Error::config("external scorers are not persisted")),
        }
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let model: AcceptabilityModel = serde_json::from_reader(r)?;
        if let AcceptabilityModel::Builtin(m) = &model {
            let n = m.feature_names.len();
            if m.feature_names != FEATURE_NAMES || [m.weights.len(), m.mean.len(), m.scale.len()].iter().any(|l| *l != n) {
                return Err(Error::Format("acceptability model feature layout mismatch".into()));
            }
        }
        Ok(model)
    }
}

/// Trains the built-in classifier. Lexicons are learned from the positive
/// half of `labeled`; an unbalanced set is reweighted by class.
pub fn train_builtin(labeled: &LabeledSet, config: &TrainConfig) -> Result<BuiltinModel> {
    let positives: Vec<SentencePair> = labeled.records.iter().filter(|r| r.label).map(|r| r.pair.clone()).collect();
    let n_pos = positives.len();
    let n_neg = labeled.records.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::data("training set needs both positive and negative records"));
    }
    if n_pos != n_neg {
        log::warn!("unbalanced training set ({n_pos} positive, {n_neg} negative); reweighting classes");
    }
    let fcfg = config.features;
    let forward = Lexicon::learn(&positives, fcfg.src_scheme, fcfg.tgt_scheme, config.em_iterations)?;
    let swapped: Vec<SentencePair> = positives.iter().map(SentencePair::swapped).collect();
    let backward = Lexicon::learn(&swapped, fcfg.tgt_scheme, fcfg.src_scheme, config.em_iterations)?;
    let forward = forward.pruned(config.prune_below);
    let backward = backward.pruned(config.prune_below);

    let xs: Vec<[f64; N_FEATURES]> = labeled
        .records
        .par_iter()
        .map(|r| extract(&r.pair, &forward, &backward, &fcfg).to_array())
        .collect();
    let ys: Vec<f64> = labeled.records.iter().map(|r| if r.label { 1.0 } else { 0.0 }).collect();

    let n = xs.len() as f64;
    let mut mean = vec![0.0; N_FEATURES];
    let mut scale = vec![0.0; N_FEATURES];
    for x in &xs {
        for i in 0..N_FEATURES {
            mean[i] += x[i] / n;
        }
    }
    for x in &xs {
        for i in 0..N_FEATURES {
            scale[i] += (x[i] - mean[i]).powi(2) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 1e-12 { s.sqrt() } else { 1.0 };
    }

    let class_weight = [n / (2.0 * n_neg as f64), n / (2.0 * n_pos as f64)];
    let mut model = BuiltinModel {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        weights: vec![0.0; N_FEATURES],
        bias: 0.0,
        mean,
        scale,
        features: fcfg,
        forward,
        backward,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + epoch as f64);
        for &i in &order {
            let x = &xs[i];
            let p = sigmoid(model.logit(x));
            let g = (p - ys[i]) * class_weight[ys[i] as usize];
            for j in 0..N_FEATURES {
                let xj = (x[j] - model.mean[j]) / model.scale[j];
                model.weights[j] -= lr * (g * xj + config.l2 * model.weights[j]);
            }
            model.bias -= lr * g;
        }
    }
    Ok(model)
}
