//! ARPA text format. Log values are written with the shortest decimal that
//! parses back to the same `f64`, so save/load/save is lossless.

use std::io::{BufRead, BufReader, Read, Write};

use super::{Entry, NGramLm, BOS, EOS, MAX_ORDER, UNK};
use crate::error::{Error, Result};

fn fmt_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("ARPA line {line}: {msg}"))
}

impl NGramLm {
    pub fn to_arpa<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "\\data\\")?;
        for (n, count) in self.counts().iter().enumerate() {
            writeln!(w, "ngram {}={}", n + 1, count)?;
        }
        for n in 1..=self.order() {
            writeln!(w, "\n\\{n}-grams:")?;
            let mut rows: Vec<(Vec<&str>, &Entry)> = self
                .table(n)
                .iter()
                .map(|(k, e)| (k.iter().map(|&i| self.vocab()[i as usize].as_str()).collect(), e))
                .collect();
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            for (words, e) in rows {
                write!(w, "{}\t{}", e.log10_prob, words.join(" "))?;
                if let Some(bow) = e.log10_backoff {
                    write!(w, "\t{bow}")?;
                }
                writeln!(w)?;
            }
        }
        writeln!(w, "\n\\end\\")?;
        Ok(())
    }

    pub fn from_arpa<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut declared: Vec<usize> = Vec::new();
        let mut sections: Vec<Vec<(Vec<String>, Entry)>> = Vec::new();
        let mut state = 0usize; // 0 = preamble, usize::MAX = \data\, n = inside n-grams
        let mut ended = false;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if line == "\\data\\" {
                state = usize::MAX;
                continue;
            }
            if line == "\\end\\" {
                ended = true;
                break;
            }
            if let Some(rest) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
                let n: usize = rest.parse().map_err(|_| fmt_err(lineno, "bad section header"))?;
                if n != sections.len() + 1 || n > declared.len() {
                    return Err(fmt_err(lineno, format!("unexpected section {n}-grams")));
                }
                sections.push(Vec::new());
                state = n;
                continue;
            }
            match state {
                0 => continue,
                usize::MAX => {
                    let spec = line
                        .strip_prefix("ngram ")
                        .ok_or_else(|| fmt_err(lineno, "expected `ngram N=count`"))?;
                    let (n, c) = spec.split_once('=').ok_or_else(|| fmt_err(lineno, "expected `N=count`"))?;
                    let n: usize = n.trim().parse().map_err(|_| fmt_err(lineno, "bad order"))?;
                    let c: usize = c.trim().parse().map_err(|_| fmt_err(lineno, "bad count"))?;
                    if n != declared.len() + 1 || n > MAX_ORDER {
                        return Err(fmt_err(lineno, format!("unexpected order {n}")));
                    }
                    declared.push(c);
                }
                n => {
                    let mut cols = line.split('\t');
                    let prob: f64 = cols
                        .next()
                        .and_then(|p| p.parse().ok())
                        .ok_or_else(|| fmt_err(lineno, "bad log probability"))?;
                    let words: Vec<String> = cols
                        .next()
                        .ok_or_else(|| fmt_err(lineno, "missing n-gram"))?
                        .split(' ')
                        .map(str::to_owned)
                        .collect();
                    if words.len() != n {
                        return Err(fmt_err(lineno, format!("expected {n} words")));
                    }
                    let backoff = match cols.next() {
                        Some(b) => Some(b.parse::<f64>().map_err(|_| fmt_err(lineno, "bad backoff"))?),
                        None => None,
                    };
                    if !prob.is_finite() || prob > 0.0 || backoff.is_some_and(|b| !b.is_finite()) {
                        return Err(fmt_err(lineno, "log values must be finite and probabilities ≤ 1"));
                    }
                    sections[n - 1].push((words, Entry { log10_prob: prob, log10_backoff: backoff }));
                }
            }
        }
        if !ended {
            return Err(Error::Format("ARPA file lacks \\end\\".into()));
        }
        if declared.is_empty() || sections.len() != declared.len() {
            return Err(Error::Format("ARPA sections do not match the \\data\\ header".into()));
        }
        for (n, (s, c)) in sections.iter().zip(&declared).enumerate() {
            if s.len() != *c {
                return Err(Error::Format(format!("{}-grams: declared {c}, found {}", n + 1, s.len())));
            }
        }

        let mut words: Vec<String> = sections[0]
            .iter()
            .map(|(w, _)| w[0].clone())
            .filter(|w| ![UNK, BOS, EOS].contains(&w.as_str()))
            .collect();
        for special in [UNK, BOS, EOS] {
            if !sections[0].iter().any(|(w, _)| w[0] == special) {
                return Err(Error::Format(format!("unigrams lack {special}")));
            }
        }
        words.sort();
        let vocab: Vec<String> = [UNK, BOS, EOS].into_iter().map(str::to_owned).chain(words).collect();
        let mut lm = NGramLm::with_vocab(vocab, declared.len());
        for (n, section) in sections.into_iter().enumerate() {
            for (words, entry) in section {
                let ids = words
                    .iter()
                    .map(|w| lm.index.get(w).copied().ok_or_else(|| Error::Format(format!("`{w}` is not a unigram"))))
                    .collect::<Result<Vec<u32>>>()?;
                lm.table_mut(n + 1).insert(ids, entry);
            }
        }
        Ok(lm)
    }
}
