use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A source/target segment pair. `id` is the 0-based line ordinal in the
/// corpus it was read from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: u64,
    pub source: String,
    pub target: String,
    pub meta: Option<String>,
}

impl SentencePair {
    pub fn new(id: u64, source: impl Into<String>, target: impl Into<String>) -> Self {
        SentencePair { id, source: source.into(), target: target.into(), meta: None }
    }

    pub fn side(&self, side: Side) -> &str {
        match side {
            Side::Source => &self.source,
            Side::Target => &self.target,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut String {
        match side {
            Side::Source => &mut self.source,
            Side::Target => &mut self.target,
        }
    }

    /// Source and target exchanged; id and meta kept.
    pub fn swapped(&self) -> Self {
        SentencePair {
            id: self.id,
            source: self.target.clone(),
            target: self.source.clone(),
            meta: self.meta.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Source => Side::Target,
            Side::Target => Side::Source,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" | "src" => Ok(Side::Source),
            "target" | "tgt" => Ok(Side::Target),
            other => Err(Error::config(format!("unknown side `{other}`"))),
        }
    }
}

/// Per-filter scores for one pair.
///
/// `language` is 0 or 1, `acceptability` a probability, `domain` the clipped
/// domain score in `[0, clip]`. `final_score` is the product of the
/// normalized partials and is filled in by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub language: f64,
    pub acceptability: f64,
    pub domain: f64,
    pub final_score: f64,
}

impl Default for ScoreVector {
    fn default() -> Self {
        ScoreVector { language: 1.0, acceptability: 1.0, domain: 1.0, final_score: 1.0 }
    }
}
