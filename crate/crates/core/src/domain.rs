//! Domain scoring by perplexity ratio.
//!
//! The raw score of a target sentence is `PPL_non(t) / PPL_in(t)`: high when
//! the sentence reads like the in-domain text and unlike the unfiltered
//! corpus. Raw scores are cut off (values at or below the threshold become 0)
//! and then clipped from above.

use rayon::prelude::*;

use crate::accept::protocol::{external_score_batch, ScorerCommand, Semantics};
use crate::error::{Error, Result};
use crate::lm::NGramLm;
use crate::tokenize::{tokenize, Scheme, TokenSeq};
use crate::types::SentencePair;

pub const DEFAULT_CLIP: f64 = 5.0;
pub const DEFAULT_CUTOFF: f64 = 1.5;

pub fn clip(x: f64, tau_clip: f64) -> f64 {
    x.min(tau_clip)
}

/// `x` when strictly above the threshold, 0 otherwise.
pub fn cutoff(x: f64, tau_cutoff: f64) -> f64 {
    if x > tau_cutoff {
        x
    } else {
        0.0
    }
}

/// Cutoff followed by clip.
pub fn compose(raw: f64, tau_clip: f64, tau_cutoff: f64) -> f64 {
    clip(cutoff(raw, tau_cutoff), tau_clip)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainConfig {
    pub clip: f64,
    pub cutoff: f64,
    /// Tokenization of the target side.
    pub scheme: Scheme,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { clip: DEFAULT_CLIP, cutoff: DEFAULT_CUTOFF, scheme: Scheme::Whitespace }
    }
}

impl DomainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.clip) || !ok(self.cutoff) {
            return Err(Error::config("clip and cutoff must be finite and positive"));
        }
        if self.cutoff >= self.clip {
            log::warn!("cutoff {} >= clip {}: domain scores collapse to {{0, clip}}", self.cutoff, self.clip);
        }
        Ok(())
    }
}

/// The in-domain model: a local n-gram model or an external process speaking
/// the scorer protocol with perplexity semantics.
#[derive(Debug)]
pub enum InDomainLm {
    Local(NGramLm),
    External(ScorerCommand),
}

#[derive(Debug)]
pub struct DomainFilter {
    pub config: DomainConfig,
    pub in_domain: InDomainLm,
    pub non_domain: NGramLm,
}

impl DomainFilter {
    pub fn new(config: DomainConfig, in_domain: InDomainLm, non_domain: NGramLm) -> Result<Self> {
        config.validate()?;
        Ok(DomainFilter { config, in_domain, non_domain })
    }

    /// `PPL_non(t) / PPL_in(t)` with a local in-domain model.
    pub fn raw(&self, t: &TokenSeq) -> Result<f64> {
        let InDomainLm::Local(in_lm) = &self.in_domain else {
            return Err(Error::config("per-sentence scoring needs a local in-domain model; use score_pairs"));
        };
        Ok(self.non_domain.perplexity(t)?.value / in_lm.perplexity(t)?.value)
    }

    /// Domain score of one pair (target side only); empty targets score 0.
    pub fn score(&self, pair: &SentencePair) -> Result<f64> {
        let t = tokenize(&pair.target, self.config.scheme);
        if t.is_empty() {
            return Ok(0.0);
        }
        Ok(compose(self.raw(&t)?, self.config.clip, self.config.cutoff))
    }

    /// Raw ratios for a batch, `None` for empty targets.
    pub fn raw_batch(&self, pairs: &[SentencePair]) -> Result<Vec<Option<f64>>> {
        let tokens: Vec<TokenSeq> = pairs.par_iter().map(|p| tokenize(&p.target, self.config.scheme)).collect();
        let non: Vec<Option<f64>> = tokens
            .par_iter()
            .map(|t| self.non_domain.perplexity(t).ok().map(|p| p.value))
            .collect();
        let in_ppl: Vec<Option<f64>> = match &self.in_domain {
            InDomainLm::Local(lm) => tokens.par_iter().map(|t| lm.perplexity(t).ok().map(|p| p.value)).collect(),
            InDomainLm::External(cmd) => {
                let wanted: Vec<SentencePair> =
                    pairs.iter().zip(&tokens).filter(|(_, t)| !t.is_empty()).map(|(p, _)| p.clone()).collect();
                let mut scores = external_score_batch(cmd, Semantics::Perplexity, &wanted)?.into_iter();
                tokens.iter().map(|t| if t.is_empty() { None } else { scores.next() }).collect()
            }
        };
        Ok(non.into_iter().zip(in_ppl).map(|(n, i)| Some(n? / i?)).collect())
    }

    pub fn score_pairs(&self, pairs: &[SentencePair]) -> Result<Vec<f64>> {
        Ok(self
            .raw_batch(pairs)?
            .into_iter()
            .map(|raw| raw.map_or(0.0, |x| compose(x, self.config.clip, self.config.cutoff)))
            .collect())
    }
}
