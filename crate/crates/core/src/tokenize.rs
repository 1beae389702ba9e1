//! Tokenization schemes used for word counting, perplexity normalization and
//! lexical features.
//!
//! Two schemes exist: whitespace splitting for space-delimited languages and
//! per-character segmentation for Japanese and Chinese. Neither depends on a
//! segmenter model, so tokenization is a pure function of the input text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Whitespace,
    Character,
}

impl Scheme {
    /// Separator used when a token sequence is turned back into text.
    pub fn joiner(self) -> &'static str {
        match self {
            Scheme::Whitespace => " ",
            Scheme::Character => "",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Whitespace => "whitespace",
            Scheme::Character => "character",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" | "ws" => Ok(Scheme::Whitespace),
            "character" | "char" => Ok(Scheme::Character),
            other => Err(Error::config(format!("unknown tokenization scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub scheme: Scheme,
}

impl TokenSeq {
    pub fn new(tokens: Vec<String>, scheme: Scheme) -> Self {
        TokenSeq { tokens, scheme }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Joins the tokens with the scheme's separator.
    pub fn detokenize(&self) -> String {
        self.tokens.join(self.scheme.joiner())
    }
}

pub fn tokenize(text: &str, scheme: Scheme) -> TokenSeq {
    let tokens = match scheme {
        Scheme::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
        Scheme::Character => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    };
    TokenSeq { tokens, scheme }
}

/// Like [`tokenize`] but starts from raw bytes, reporting where decoding failed.
pub fn tokenize_bytes(bytes: &[u8], scheme: Scheme) -> Result<TokenSeq> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 { offset: e.valid_up_to() })?;
    Ok(tokenize(text, scheme))
}

/// Number of tokens without materializing them.
pub fn token_count(text: &str, scheme: Scheme) -> usize {
    match scheme {
        Scheme::Whitespace => text.split_whitespace().count(),
        Scheme::Character => text.chars().filter(|c| !c.is_whitespace()).count(),
    }
}
