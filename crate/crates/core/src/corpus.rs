//! Bitext TSV ingestion and serialization.
//!
//! Format: `source<TAB>target[<TAB>meta]<LF>`, UTF-8, no header. Fields may
//! not contain tabs or newlines, so a well-formed file is reproduced
//! byte-for-byte by [`write_pair`].

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::tokenize::{token_count, Scheme};
use crate::types::{ScoreVector, SentencePair, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    /// Drop the offending line and count it.
    #[default]
    Skip,
    Abort,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    pub on_error: ErrorPolicy,
    /// Apply Unicode NFC to both sides. Off by default.
    pub nfc: bool,
}

/// Streaming reader over a bitext TSV. Ids are line ordinals, so skipped
/// lines leave gaps.
pub struct BitextReader<R> {
    inner: R,
    opts: ReadOptions,
    next_id: u64,
    offset: u64,
    buf: Vec<u8>,
    skipped: u64,
    diagnostics: Vec<String>,
    failed: bool,
}

impl<R: BufRead> BitextReader<R> {
    pub fn new(inner: R, opts: ReadOptions) -> Self {
        Self::with_first_id(inner, opts, 0, 0)
    }

    pub(crate) fn with_first_id(inner: R, opts: ReadOptions, first_id: u64, offset: u64) -> Self {
        BitextReader {
            inner,
            opts,
            next_id: first_id,
            offset,
            buf: Vec::new(),
            skipped: 0,
            diagnostics: Vec::new(),
            failed: false,
        }
    }

    /// Number of lines dropped under [`ErrorPolicy::Skip`].
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }
}

impl<R: BufRead> Iterator for BitextReader<R> {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.failed {
                return None;
            }
            self.buf.clear();
            let n = match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(n) => n,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            };
            let id = self.next_id;
            let line_offset = self.offset;
            self.next_id += 1;
            self.offset += n as u64;
            let line = self.buf.strip_suffix(b"\n").unwrap_or(&self.buf);
            match parse_line(line, id, line_offset, self.opts.nfc) {
                Ok(pair) => return Some(Ok(pair)),
                Err(e) => match self.opts.on_error {
                    ErrorPolicy::Skip => {
                        log::debug!("skipping line {id}: {e}");
                        self.skipped += 1;
                        self.diagnostics.push(e.to_string());
                    }
                    ErrorPolicy::Abort => {
                        self.failed = true;
                        return Some(Err(e));
                    }
                },
            }
        }
    }
}

fn parse_line(line: &[u8], id: u64, offset: u64, nfc: bool) -> Result<SentencePair> {
    let text = std::str::from_utf8(line).map_err(|e| Error::MalformedLine {
        line: id,
        reason: format!("invalid UTF-8 at byte offset {}", offset + e.valid_up_to() as u64),
    })?;
    let mut cols = text.split('\t');
    let source = cols.next().unwrap_or_default();
    let Some(target) = cols.next() else {
        return Err(Error::MalformedLine { line: id, reason: "expected at least 2 tab-separated columns".into() });
    };
    let meta = cols.next();
    if cols.next().is_some() {
        return Err(Error::MalformedLine { line: id, reason: "more than 3 columns".into() });
    }
    let norm = |s: &str| if nfc { s.nfc().collect() } else { s.to_owned() };
    Ok(SentencePair { id, source: norm(source), target: norm(target), meta: meta.map(norm) })
}

pub fn open_bitext(path: impl AsRef<Path>, opts: ReadOptions) -> Result<BitextReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    Ok(BitextReader::new(BufReader::new(file), opts))
}

/// Reads a whole bitext, honoring the error policy. Returns the pairs and the
/// number of skipped lines.
pub fn read_bitext(path: impl AsRef<Path>, opts: ReadOptions) -> Result<(Vec<SentencePair>, u64)> {
    let mut reader = open_bitext(path, opts)?;
    let pairs = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((pairs, reader.skipped()))
}

fn check_field(field: &str, id: u64) -> Result<()> {
    if field.contains(['\t', '\n']) {
        return Err(Error::MalformedLine { line: id, reason: "field contains tab or newline".into() });
    }
    Ok(())
}

/// Writes the pair's input columns, without the trailing newline.
pub fn write_columns<W: Write>(w: &mut W, pair: &SentencePair) -> Result<()> {
    check_field(&pair.source, pair.id)?;
    check_field(&pair.target, pair.id)?;
    write!(w, "{}\t{}", pair.source, pair.target)?;
    if let Some(meta) = &pair.meta {
        check_field(meta, pair.id)?;
        write!(w, "\t{meta}")?;
    }
    Ok(())
}

pub fn write_pair<W: Write>(w: &mut W, pair: &SentencePair) -> Result<()> {
    write_columns(w, pair)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Fixed six-digit decimal rendering used for every score column.
pub fn format_score(x: f64) -> String {
    // avoid "-0.000000"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.6}")
}

pub fn count_words<'a, I>(corpus: I, side: Side, scheme: Scheme) -> u64
where
    I: IntoIterator<Item = &'a SentencePair>,
{
    corpus.into_iter().map(|p| token_count(p.side(side), scheme) as u64).sum()
}

/// A byte range of a bitext file starting and ending at line boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shard {
    pub start: u64,
    pub end: u64,
    /// Ordinal of the first line in the shard.
    pub first_id: u64,
}

/// Splits a file into at most `n` shards at line boundaries.
pub fn line_shards(path: impl AsRef<Path>, n: usize) -> Result<Vec<Shard>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let len = file.metadata()?.len();
    let n = n.max(1) as u64;
    let mut reader = BufReader::new(file);
    let mut shards = Vec::new();
    let (mut pos, mut lines) = (0u64, 0u64);
    let mut buf = Vec::new();
    for k in 1..=n {
        let start = pos;
        let first_id = lines;
        let target = if k == n { len } else { len * k / n };
        while pos < target {
            buf.clear();
            let read = reader.read_until(b'\n', &mut buf)?;
            if read == 0 {
                break;
            }
            pos += read as u64;
            lines += 1;
        }
        if pos > start {
            shards.push(Shard { start, end: pos, first_id });
        }
    }
    Ok(shards)
}

pub fn read_shard(path: impl AsRef<Path>, shard: Shard, opts: ReadOptions) -> Result<Vec<SentencePair>> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::file(path, e))?;
    file.seek(SeekFrom::Start(shard.start))?;
    let reader = BufReader::new(file.take(shard.end - shard.start));
    BitextReader::with_first_id(reader, opts, shard.first_id, shard.start).collect()
}

/// Writes the input columns followed by `lang`, `accept`, `domain`, `final`.
pub fn write_scored<W: Write>(w: &mut W, pair: &SentencePair, s: &ScoreVector) -> Result<()> {
    write_columns(w, pair)?;
    for x in [s.language, s.acceptability, s.domain, s.final_score] {
        write!(w, "\t{}", format_score(x))?;
    }
    w.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub pair: SentencePair,
    pub scores: ScoreVector,
}

fn parse_scored(line: &str, id: u64) -> Result<ScoredRecord> {
    let bad = |reason: String| Error::MalformedLine { line: id, reason };
    let cols: Vec<&str> = line.split('\t').collect();
    if !(6..=7).contains(&cols.len()) {
        return Err(bad(format!("expected 6 or 7 columns in a scored file, found {}", cols.len())));
    }
    let (text, nums) = cols.split_at(cols.len() - 4);
    let mut v = [0.0; 4];
    for (slot, raw) in v.iter_mut().zip(nums) {
        *slot = raw.parse().map_err(|_| bad(format!("`{raw}` is not a number")))?;
    }
    let pair = SentencePair { id, source: text[0].to_owned(), target: text[1].to_owned(), meta: text.get(2).map(|m| m.to_string()) };
    Ok(ScoredRecord { pair, scores: ScoreVector { language: v[0], acceptability: v[1], domain: v[2], final_score: v[3] } })
}

/// Reads a scored TSV; ids are line ordinals. Any malformed line is an error.
pub fn read_scored(path: impl AsRef<Path>) -> Result<Vec<ScoredRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedLine { line: i as u64, reason: e.to_string() })?;
        out.push(parse_scored(&line, i as u64)?);
    }
    Ok(out)
}
