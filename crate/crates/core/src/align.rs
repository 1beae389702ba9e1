//! Length-based sentence alignment in the Gale-Church style.
//!
//! Bead costs are `-ln P(match | delta) + penalty(bead)` with
//! `delta = (c * l_s - l_t) / sqrt(s2 * (l_s + l_t / c) / 2)` and
//! `P(match | delta) = 2 * (1 - Phi(|delta|))`. Lengths count
//! non-whitespace characters.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::tokenize::{tokenize, Scheme};
use crate::types::SentencePair;

/// Score given to a pair whose sides are both empty.
pub const EMPTY_PAIR_SCORE: f64 = -1.0e4;

pub type Dictionary = HashMap<String, HashSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BeadType {
    #[serde(rename = "1-1")]
    OneOne,
    #[serde(rename = "1-0")]
    OneZero,
    #[serde(rename = "0-1")]
    ZeroOne,
    #[serde(rename = "2-1")]
    TwoOne,
    #[serde(rename = "1-2")]
    OneTwo,
    #[serde(rename = "2-2")]
    TwoTwo,
}

impl BeadType {
    pub const ALL: [BeadType; 6] =
        [BeadType::OneOne, BeadType::OneZero, BeadType::ZeroOne, BeadType::TwoOne, BeadType::OneTwo, BeadType::TwoTwo];

    /// (source sentences, target sentences) consumed.
    pub fn shape(self) -> (usize, usize) {
        match self {
            BeadType::OneOne => (1, 1),
            BeadType::OneZero => (1, 0),
            BeadType::ZeroOne => (0, 1),
            BeadType::TwoOne => (2, 1),
            BeadType::OneTwo => (1, 2),
            BeadType::TwoTwo => (2, 2),
        }
    }
}

impl fmt::Display for BeadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, n) = self.shape();
        write!(f, "{m}-{n}")
    }
}

impl FromStr for BeadType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BeadType::ALL
            .into_iter()
            .find(|b| b.to_string() == s)
            .ok_or_else(|| Error::config(format!("unknown bead type `{s}`")))
    }
}

/// Default penalties: negative log priors of the classic bead distribution.
pub fn default_penalties() -> BTreeMap<BeadType, f64> {
    [
        (BeadType::OneOne, 0.89),
        (BeadType::OneZero, 0.0099 / 2.0),
        (BeadType::ZeroOne, 0.0099 / 2.0),
        (BeadType::TwoOne, 0.089 / 2.0),
        (BeadType::OneTwo, 0.089 / 2.0),
        (BeadType::TwoTwo, 0.011),
    ]
    .into_iter()
    .map(|(b, p)| (b, -f64::ln(p)))
    .collect()
}

#[derive(Debug, Clone)]
pub struct AlignmentParams {
    pub c: f64,
    pub s2: f64,
    pub penalties: BTreeMap<BeadType, f64>,
    /// Weight of the dictionary coverage term.
    pub lambda: f64,
    pub dictionary: Option<Dictionary>,
    pub src_scheme: Scheme,
    pub tgt_scheme: Scheme,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams {
            c: 1.0,
            s2: 6.8,
            penalties: default_penalties(),
            lambda: 1.0,
            dictionary: None,
            src_scheme: Scheme::Whitespace,
            tgt_scheme: Scheme::Whitespace,
        }
    }
}

impl AlignmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite() && self.s2 > 0.0 && self.s2.is_finite()) {
            return Err(Error::config("c and s2 must be positive and finite"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::config("lambda must be finite"));
        }
        for b in [BeadType::OneOne, BeadType::OneZero, BeadType::ZeroOne] {
            if !self.penalties.contains_key(&b) {
                return Err(Error::config(format!("missing penalty for bead {b}")));
            }
        }
        let one_one = self.penalties[&BeadType::OneOne];
        for (b, &p) in &self.penalties {
            if !p.is_finite() {
                return Err(Error::config(format!("penalty for bead {b} is not finite")));
            }
            if p < one_one {
                return Err(Error::config(format!("penalty for bead {b} is below the 1-1 penalty")));
            }
        }
        Ok(())
    }

    pub fn penalty(&self, bead: BeadType) -> Option<f64> {
        self.penalties.get(&bead).copied()
    }
}

/// Non-whitespace character count.
pub fn char_length(s: &str) -> usize {
    s.chars().filter(|c| !c.is_whitespace()).count()
}

pub fn delta(ls: f64, lt: f64, c: f64, s2: f64) -> f64 {
    let mean = (ls + lt / c) / 2.0;
    if mean == 0.0 {
        return 0.0;
    }
    (c * ls - lt) / (s2 * mean).sqrt()
}

/// `ln erfc(x)` for `x >= 0`, using the asymptotic expansion where `erfc`
/// underflows.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 20.0 {
        return erfc(x).ln();
    }
    let x2 = x * x;
    let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
    -x2 - (x * std::f64::consts::PI.sqrt()).ln() + series.ln()
}

/// `ln P(match | delta)` for the given lengths.
pub fn ln_length_match(ls: f64, lt: f64, c: f64, s2: f64) -> f64 {
    ln_erfc(delta(ls, lt, c, s2).abs() / std::f64::consts::SQRT_2)
}

/// Fraction of source tokens with a dictionary translation in the target.
pub fn dictionary_coverage(pair: &SentencePair, dict: &Dictionary, src: Scheme, tgt: Scheme) -> f64 {
    let source = tokenize(&pair.source, src);
    if source.is_empty() {
        return 1.0;
    }
    let target = tokenize(&pair.target, tgt);
    let target: HashSet<&str> = target.iter().collect();
    let covered = source
        .iter()
        .filter(|s| dict.get(*s).is_some_and(|ts| ts.iter().any(|t| target.contains(t.as_str()))))
        .count();
    covered as f64 / source.len() as f64
}

/// Higher is better. The 1-1 bead penalty is included so scores shift with
/// the penalty table.
pub fn pair_alignment_score(pair: &SentencePair, params: &AlignmentParams) -> f64 {
    let ls = char_length(&pair.source);
    let lt = char_length(&pair.target);
    if ls == 0 && lt == 0 {
        return EMPTY_PAIR_SCORE;
    }
    let one_one = params.penalty(BeadType::OneOne).unwrap_or(0.0);
    let mut score = ln_length_match(ls as f64, lt as f64, params.c, params.s2) - one_one;
    if let Some(dict) = &params.dictionary {
        let cov = dictionary_coverage(pair, dict, params.src_scheme, params.tgt_scheme);
        score -= params.lambda * (1.0 - cov);
    }
    score
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bead {
    pub kind: BeadType,
    pub src: std::ops::Range<usize>,
    pub tgt: std::ops::Range<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub beads: Vec<Bead>,
    pub cost: f64,
}

/// Cost of one bead covering the given sentence lengths.
pub fn bead_cost(kind: BeadType, src_lens: &[usize], tgt_lens: &[usize], params: &AlignmentParams) -> Option<f64> {
    let penalty = params.penalty(kind)?;
    let ls: usize = src_lens.iter().sum();
    let lt: usize = tgt_lens.iter().sum();
    Some(penalty - ln_length_match(ls as f64, lt as f64, params.c, params.s2))
}

/// Minimum-cost monotone alignment. Bead types are tried in the order of
/// [`BeadType::ALL`] and only strictly cheaper alternatives replace an
/// earlier one, so 1-1 wins ties.
pub fn align_doc<S: AsRef<str>>(src: &[S], tgt: &[S], params: &AlignmentParams) -> Result<Alignment> {
    params.validate()?;
    let sl: Vec<usize> = src.iter().map(|s| char_length(s.as_ref())).collect();
    let tl: Vec<usize> = tgt.iter().map(|s| char_length(s.as_ref())).collect();
    let (n, m) = (sl.len(), tl.len());
    let w = m + 1;
    let mut cost = vec![f64::INFINITY; (n + 1) * w];
    let mut back: Vec<Option<BeadType>> = vec![None; (n + 1) * w];
    cost[0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            for kind in BeadType::ALL {
                let (di, dj) = kind.shape();
                if di > i || dj > j {
                    continue;
                }
                let prev = cost[(i - di) * w + (j - dj)];
                if !prev.is_finite() {
                    continue;
                }
                let Some(c) = bead_cost(kind, &sl[i - di..i], &tl[j - dj..j], params) else { continue };
                if prev + c < cost[i * w + j] {
                    cost[i * w + j] = prev + c;
                    back[i * w + j] = Some(kind);
                }
            }
        }
    }
    let mut beads = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let kind = back[i * w + j].ok_or_else(|| Error::data("no admissible bead sequence"))?;
        let (di, dj) = kind.shape();
        let c = bead_cost(kind, &sl[i - di..i], &tl[j - dj..j], params).unwrap_or(f64::NAN);
        beads.push(Bead { kind, src: i - di..i, tgt: j - dj..j, cost: c });
        i -= di;
        j -= dj;
    }
    beads.reverse();
    Ok(Alignment { beads, cost: cost[n * w + m] })
}

/// Reads `src_token<TAB>tgt_token` lines; blank lines are ignored.
pub fn read_dictionary<R: BufRead>(r: R) -> Result<Dictionary> {
    let mut dict = Dictionary::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((s, t)) = line.split_once('\t') else {
            return Err(Error::MalformedLine { line: i as u64, reason: "expected src_token<TAB>tgt_token".into() });
        };
        if t.contains('\t') {
            return Err(Error::MalformedLine { line: i as u64, reason: "too many columns".into() });
        }
        dict.entry(s.to_owned()).or_default().insert(t.to_owned());
    }
    Ok(dict)
}
