//! Lexical features describing how likely a pair is a mutual translation.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::lexicon::Lexicon;
use crate::tokenize::{tokenize, Scheme};
use crate::types::SentencePair;

pub const FEATURE_NAMES: [&str; 7] = [
    "length_ratio",
    "log_length_ratio",
    "abs_log_length_ratio",
    "forward_coverage",
    "backward_coverage",
    "literal_overlap",
    "copy_ratio",
];

pub const RATIO_MIN: f64 = 0.1;
pub const RATIO_MAX: f64 = 10.0;
/// Longest-common-substring search is cut at this many characters per side.
const COPY_WINDOW: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Source over target token count, clamped to `[0.1, 10]`.
    pub length_ratio: f64,
    pub log_length_ratio: f64,
    pub abs_log_length_ratio: f64,
    /// Fraction of source tokens with a learned translation in the target.
    pub forward_coverage: f64,
    /// Fraction of target tokens with a learned translation in the source.
    pub backward_coverage: f64,
    /// Jaccard overlap of numbers, URLs and e-mail addresses.
    pub literal_overlap: f64,
    /// Longest common substring over the longer side, in characters.
    pub copy_ratio: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.length_ratio,
            self.log_length_ratio,
            self.abs_log_length_ratio,
            self.forward_coverage,
            self.backward_coverage,
            self.literal_overlap,
            self.copy_ratio,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub src_scheme: Scheme,
    pub tgt_scheme: Scheme,
    /// Minimum lexicon probability for a token to count as a translation.
    pub min_translation_prob: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { src_scheme: Scheme::Whitespace, tgt_scheme: Scheme::Whitespace, min_translation_prob: 0.1 }
    }
}

fn literal_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?:https?://|www\.)[^\s]+|[\w.+-]+@[\w-]+(?:\.[\w-]+)+|\d+(?:[.,]\d+)*").expect("static regex")
    })
}

fn literals(text: &str) -> HashSet<&str> {
    literal_pattern().find_iter(text).map(|m| m.as_str()).collect()
}

fn coverage(tokens: &[String], other: &HashSet<&str>, lexicon: &Lexicon, min_prob: f64) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let covered = tokens.iter().filter(|t| lexicon.covers(t, other, min_prob)).count();
    covered as f64 / tokens.len() as f64
}

/// Length in characters of the longest common substring.
pub fn longest_common_substring(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().take(COPY_WINDOW).collect();
    let b: Vec<char> = b.chars().take(COPY_WINDOW).collect();
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Extracts features using a source→target (`forward`) and a target→source
/// (`backward`) lexicon.
pub fn extract(pair: &SentencePair, forward: &Lexicon, backward: &Lexicon, cfg: &FeatureConfig) -> FeatureVector {
    let src = tokenize(&pair.source, cfg.src_scheme).tokens;
    let tgt = tokenize(&pair.target, cfg.tgt_scheme).tokens;
    let ratio = match (src.len(), tgt.len()) {
        (0, 0) => 1.0,
        (_, 0) => RATIO_MAX,
        (s, t) => (s as f64 / t as f64).clamp(RATIO_MIN, RATIO_MAX),
    };
    let src_set: HashSet<&str> = src.iter().map(String::as_str).collect();
    let tgt_set: HashSet<&str> = tgt.iter().map(String::as_str).collect();

    let (ls, lt) = (literals(&pair.source), literals(&pair.target));
    let literal_overlap = if ls.is_empty() && lt.is_empty() {
        1.0
    } else {
        ls.intersection(&lt).count() as f64 / ls.union(&lt).count() as f64
    };

    let longest = pair.source.chars().count().max(pair.target.chars().count());
    let copy_ratio = if longest == 0 {
        0.0
    } else {
        longest_common_substring(&pair.source, &pair.target) as f64 / longest.min(COPY_WINDOW) as f64
    };

    FeatureVector {
        length_ratio: ratio,
        log_length_ratio: ratio.ln(),
        abs_log_length_ratio: ratio.ln().abs(),
        forward_coverage: coverage(&src, &tgt_set, forward, cfg.min_translation_prob),
        backward_coverage: coverage(&tgt, &src_set, backward, cfg.min_translation_prob),
        literal_overlap,
        copy_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lexicons() -> (Lexicon, Lexicon) {
        let pairs: Vec<_> = (0..40)
            .map(|i| match i % 4 {
                0 => SentencePair::new(i, "red house", "rotes haus"),
                1 => SentencePair::new(i, "red car", "rotes auto"),
                2 => SentencePair::new(i, "big house", "großes haus"),
                _ => SentencePair::new(i, "big car", "großes auto"),
            })
            .collect();
        let swapped: Vec<_> = pairs.iter().map(SentencePair::swapped).collect();
        (
            Lexicon::learn(&pairs, Scheme::Whitespace, Scheme::Whitespace, 10).unwrap(),
            Lexicon::learn(&swapped, Scheme::Whitespace, Scheme::Whitespace, 10).unwrap(),
        )
    }

    #[test]
    fn full_coverage() {
        let (f, b) = lexicons();
        let v = extract(&SentencePair::new(0, "red car", "rotes auto"), &f, &b, &FeatureConfig::default());
        assert_eq!(v.forward_coverage, 1.0);
        assert_eq!(v.backward_coverage, 1.0);
        assert_eq!(v.length_ratio, 1.0);
        assert_eq!(v.literal_overlap, 1.0);
    }

    #[test]
    fn literal_jaccard() {
        let (f, b) = lexicons();
        let p = SentencePair::new(0, "call 555 or visit https://a.example/x", "ruf 555 an, 12");
        let v = extract(&p, &f, &b, &FeatureConfig::default());
        assert!((v.literal_overlap - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lcs() {
        assert_eq!(longest_common_substring("abcdef", "zcdez"), 3);
        assert_eq!(longest_common_substring("", "abc"), 0);
        assert_eq!(longest_common_substring("東京都", "京都"), 2);
    }

    #[test]
    fn ratio_is_clamped() {
        let (f, b) = lexicons();
        let long = SentencePair::new(0, "a b c d e f g h i j k l m n o p q r s t u v w x y", "a");
        let v = extract(&long, &f, &b, &FeatureConfig::default());
        assert_eq!(v.length_ratio, RATIO_MAX);
        assert!(v.to_array().iter().all(|x| x.is_finite()));
    }

    proptest! {
        #[test]
        fn swapping_sides_inverts_ratio_and_swaps_coverage(
            s in prop::collection::vec(prop::sample::select(vec!["red", "big", "car", "house", "7"]), 1..8),
            t in prop::collection::vec(prop::sample::select(vec!["rotes", "großes", "auto", "haus", "7"]), 1..8),
        ) {
            let (f, b) = lexicons();
            let pair = SentencePair::new(0, s.join(" "), t.join(" "));
            let cfg = FeatureConfig::default();
            let v = extract(&pair, &f, &b, &cfg);
            let w = extract(&pair.swapped(), &b, &f, &cfg);
            prop_assert!((v.length_ratio * w.length_ratio - 1.0).abs() < 1e-12);
            prop_assert_eq!(v.forward_coverage, w.backward_coverage);
            prop_assert_eq!(v.backward_coverage, w.forward_coverage);
            prop_assert_eq!(v.literal_overlap, w.literal_overlap);
            prop_assert_eq!(v.copy_ratio, w.copy_ratio);
            for c in [v.forward_coverage, v.backward_coverage] {
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }
    }
}
