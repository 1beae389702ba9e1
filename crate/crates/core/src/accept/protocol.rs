//! Client side of the line-oriented external scorer protocol.
//!
//! ```text
//! client: HELLO bitext-sieve/1 score=<parallelism|perplexity>
//! server: OK <name>/<version>
//! client: <id>\t<source>\t<target>        (repeated, pipelined)
//! server: <id>\t<float>                   (any order)
//! client: BYE
//! ```
//!
//! Requests are pipelined with a bounded in-flight window and responses are
//! matched back to inputs by id.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::types::SentencePair;

pub const PROTOCOL: &str = "bitext-sieve/1";
pub const DEFAULT_WINDOW: usize = 256;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_RETRIES: usize = 2;

#[derive(Debug, Error)]
pub enum ScorerError {
    /// Process or pipe failure; worth retrying with a fresh process.
    #[error("scorer transport: {0}")]
    Transport(String),
    #[error("scorer protocol: {0}")]
    Protocol(String),
}

impl ScorerError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ScorerError::Transport(_))
    }
}

type ScorerResult<T> = std::result::Result<T, ScorerError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    /// Probability that a pair is a mutual translation, in `[0, 1]`.
    Parallelism,
    /// Perplexity of the target side, `> 0`.
    Perplexity,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Parallelism => "parallelism",
            Semantics::Perplexity => "perplexity",
        })
    }
}

impl Semantics {
    fn check(self, score: f64) -> bool {
        match self {
            Semantics::Parallelism => (0.0..=1.0).contains(&score),
            Semantics::Perplexity => score.is_finite() && score > 0.0,
        }
    }
}

/// How to launch a scorer: a shell command line plus client limits.
#[derive(Debug, Clone)]
pub struct ScorerCommand {
    pub command: String,
    pub window: usize,
    pub timeout: Duration,
    pub retries: usize,
}

impl ScorerCommand {
    pub fn new(command: impl Into<String>) -> Self {
        ScorerCommand {
            command: command.into(),
            window: DEFAULT_WINDOW,
            timeout: DEFAULT_TIMEOUT,
            retries: DEFAULT_RETRIES,
        }
    }
}

pub struct ScorerSession {
    writer: Option<Box<dyn Write + Send>>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    semantics: Semantics,
    window: usize,
    timeout: Duration,
    server: String,
}

impl ScorerSession {
    /// Starts `sh -c <command>` and performs the handshake.
    pub fn spawn(cmd: &ScorerCommand, semantics: Semantics) -> ScorerResult<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&cmd.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Transport(format!("cannot start `{}`: {e}", cmd.command)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut session = Self::connect(stdout, stdin, semantics, cmd.window, cmd.timeout);
        session.child = Some(child);
        session.handshake()?;
        Ok(session)
    }

    /// Runs the protocol over arbitrary streams (the handshake included).
    pub fn from_streams<R, W>(reader: R, writer: W, semantics: Semantics, window: usize, timeout: Duration) -> ScorerResult<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut session = Self::connect(reader, writer, semantics, window, timeout);
        session.handshake()?;
        Ok(session)
    }

    fn connect<R, W>(reader: R, writer: W, semantics: Semantics, window: usize, timeout: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        ScorerSession {
            writer: Some(Box::new(BufWriter::new(writer))),
            lines: rx,
            child: None,
            semantics,
            window: window.max(1),
            timeout,
            server: String::new(),
        }
    }

    /// Name and version announced by the server.
    pub fn server(&self) -> &str {
        &self.server
    }

    fn send(&mut self, line: &str) -> ScorerResult<()> {
        let w = self.writer.as_mut().ok_or_else(|| ScorerError::Transport("session closed".into()))?;
        w.write_all(line.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| ScorerError::Transport(format!("write failed: {e}")))
    }

    fn flush(&mut self) -> ScorerResult<()> {
        if let Some(w) = self.writer.as_mut() {
            w.flush().map_err(|e| ScorerError::Transport(format!("write failed: {e}")))?;
        }
        Ok(())
    }

    fn recv(&mut self) -> ScorerResult<String> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(ScorerError::Transport(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                Err(ScorerError::Transport(format!("no response within {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => Err(ScorerError::Transport("scorer closed its output".into())),
        }
    }

    fn handshake(&mut self) -> ScorerResult<()> {
        self.send(&format!("HELLO {PROTOCOL} score={}", self.semantics))?;
        self.flush()?;
        let reply = self.recv()?;
        match reply.strip_prefix("OK ") {
            Some(name) if !name.trim().is_empty() => {
                self.server = name.trim().to_owned();
                Ok(())
            }
            _ => Err(ScorerError::Protocol(format!("unexpected handshake reply `{reply}`"))),
        }
    }

    /// Scores every pair, returning scores in input order.
    pub fn score(&mut self, pairs: &[SentencePair]) -> ScorerResult<Vec<f64>> {
        let mut position: HashMap<u64, usize> = HashMap::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            if position.insert(p.id, i).is_some() {
                return Err(ScorerError::Protocol(format!("duplicate request id {}", p.id)));
            }
            if [&p.source, &p.target].iter().any(|s| s.contains(['\t', '\n'])) {
                return Err(ScorerError::Protocol(format!("pair {} contains a tab or newline", p.id)));
            }
        }
        let mut scores: Vec<Option<f64>> = vec![None; pairs.len()];
        let mut in_flight = 0usize;
        let mut next = 0usize;
        let mut answered = 0usize;
        while answered < pairs.len() {
            while next < pairs.len() && in_flight < self.window {
                let p = &pairs[next];
                self.send(&format!("{}\t{}\t{}", p.id, p.source, p.target))?;
                next += 1;
                in_flight += 1;
            }
            self.flush()?;
            let line = self.recv()?;
            let (id, score) = parse_response(&line)?;
            let slot = position
                .get(&id)
                .copied()
                .ok_or_else(|| ScorerError::Protocol(format!("response for unknown id: `{line}`")))?;
            if slot >= next || scores[slot].is_some() {
                return Err(ScorerError::Protocol(format!("unexpected or repeated id: `{line}`")));
            }
            if !self.semantics.check(score) {
                return Err(ScorerError::Protocol(format!("{} score out of range: `{line}`", self.semantics)));
            }
            scores[slot] = Some(score);
            in_flight -= 1;
            answered += 1;
        }
        Ok(scores.into_iter().map(|s| s.expect("all answered")).collect())
    }

    /// Sends `BYE` and waits for the process to exit with status 0.
    pub fn close(mut self) -> ScorerResult<()> {
        self.send("BYE")?;
        self.flush()?;
        drop(self.writer.take());
        let Some(mut child) = self.child.take() else { return Ok(()) };
        let deadline = Instant::now() + self.timeout;
        loop {
            match child.try_wait() {
                Ok(Some(status)) if status.success() => return Ok(()),
                Ok(Some(status)) => return Err(ScorerError::Protocol(format!("scorer exited with {status}"))),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                Ok(None) => {
                    let _ = child.kill();
                    return Err(ScorerError::Transport("scorer did not exit after BYE".into()));
                }
                Err(e) => return Err(ScorerError::Transport(e.to_string())),
            }
        }
    }
}

impl Drop for ScorerSession {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn parse_response(line: &str) -> ScorerResult<(u64, f64)> {
    if line.starts_with("ERR") {
        return Err(ScorerError::Protocol(format!("scorer reported `{line}`")));
    }
    let malformed = || ScorerError::Protocol(format!("malformed response `{line}`"));
    let (id, score) = line.split_once('\t').ok_or_else(malformed)?;
    let id = id.parse::<u64>().map_err(|_| malformed())?;
    let score = score.trim_end().parse::<f64>().map_err(|_| malformed())?;
    Ok((id, score))
}

/// Scores a batch with a fresh scorer process, retrying transport failures
/// up to `cmd.retries` times.
pub fn external_score_batch(cmd: &ScorerCommand, semantics: Semantics, pairs: &[SentencePair]) -> ScorerResult<Vec<f64>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let mut attempt = 0;
    loop {
        let result = ScorerSession::spawn(cmd, semantics).and_then(|mut s| {
            let scores = s.score(pairs)?;
            s.close()?;
            Ok(scores)
        });
        match result {
            Err(e) if e.is_retryable() && attempt < cmd.retries => {
                attempt += 1;
                log::warn!("{e}; retrying ({attempt}/{})", cmd.retries);
            }
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{pipe, PipeReader, PipeWriter};

    /// In-process server: answers requests in batches of `batch`, reversed.
    fn fake_server(
        batch: usize,
        respond: impl Fn(u64) -> String + Send + 'static,
    ) -> (PipeReader, PipeWriter, thread::JoinHandle<()>) {
        let (client_read, mut server_write) = pipe().unwrap();
        let (server_read, client_write) = pipe().unwrap();
        let handle = thread::spawn(move || {
            let mut lines = BufReader::new(server_read).lines();
            let hello = lines.next().unwrap().unwrap();
            assert!(hello.starts_with("HELLO bitext-sieve/1 score="));
            writeln!(server_write, "OK fake/1").unwrap();
            let mut held = Vec::new();
            for line in lines {
                let line = line.unwrap();
                if line == "BYE" {
                    break;
                }
                held.push(line.split('\t').next().unwrap().parse::<u64>().unwrap());
                if held.len() == batch {
                    for id in held.drain(..).rev() {
                        writeln!(server_write, "{}", respond(id)).unwrap();
                    }
                    server_write.flush().unwrap();
                }
            }
        });
        (client_read, client_write, handle)
    }

    fn pairs(n: usize) -> Vec<SentencePair> {
        (0..n).map(|i| SentencePair::new(i as u64 * 10, format!("s{i}"), format!("t{i}"))).collect()
    }

    #[test]
    fn out_of_order_responses_are_reassembled() {
        let (r, w, h) = fake_server(3, |id| format!("{id}\t{}", id as f64 / 100.0));
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 8, Duration::from_secs(5)).unwrap();
        assert_eq!(s.server(), "fake/1");
        let scores = s.score(&pairs(3)).unwrap();
        assert_eq!(scores, vec![0.0, 0.1, 0.2]);
        s.close().unwrap();
        h.join().unwrap();
    }

    #[test]
    fn window_bounds_in_flight_requests() {
        // the server answers every 2 requests; window 2 keeps the client in lock step
        let (r, w, h) = fake_server(2, |id| format!("{id}\t0.5"));
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 2, Duration::from_secs(5)).unwrap();
        assert_eq!(s.score(&pairs(10)).unwrap(), vec![0.5; 10]);
        s.close().unwrap();
        h.join().unwrap();
    }

    #[test]
    fn out_of_range_score_is_a_protocol_error() {
        let (r, w, _h) = fake_server(1, |id| format!("{id}\t1.7"));
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 4, Duration::from_secs(5)).unwrap();
        let err = s.score(&pairs(1)).unwrap_err();
        assert!(matches!(err, ScorerError::Protocol(ref m) if m.contains("1.7")), "{err}");
    }

    #[test]
    fn perplexity_semantics_accepts_large_values() {
        let (r, w, _h) = fake_server(1, |id| format!("{id}\t1234.5"));
        let mut s = ScorerSession::from_streams(r, w, Semantics::Perplexity, 4, Duration::from_secs(5)).unwrap();
        assert_eq!(s.score(&pairs(2)).unwrap(), vec![1234.5, 1234.5]);
    }

    #[test]
    fn malformed_and_unknown_ids_are_rejected() {
        let (r, w, _h) = fake_server(1, |_| "garbage".to_owned());
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 4, Duration::from_secs(5)).unwrap();
        assert!(matches!(s.score(&pairs(1)), Err(ScorerError::Protocol(m)) if m.contains("garbage")));

        let (r, w, _h) = fake_server(1, |id| format!("{}\t0.5", id + 1));
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 4, Duration::from_secs(5)).unwrap();
        assert!(matches!(s.score(&pairs(1)), Err(ScorerError::Protocol(_))));

        let (r, w, _h) = fake_server(1, |id| format!("ERR {id} cannot score"));
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 4, Duration::from_secs(5)).unwrap();
        assert!(matches!(s.score(&pairs(1)), Err(ScorerError::Protocol(m)) if m.contains("cannot score")));
    }

    #[test]
    fn silent_server_times_out() {
        // never answers requests
        let (r, w, _h) = fake_server(usize::MAX, |_| unreachable!());
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 4, Duration::from_millis(100)).unwrap();
        let err = s.score(&pairs(1)).unwrap_err();
        assert!(err.is_retryable());
    }

    #[test]
    fn bad_handshake() {
        let (client_read, mut server_write) = pipe().unwrap();
        let (_server_read, client_write) = pipe().unwrap();
        writeln!(server_write, "NOPE").unwrap();
        let err = ScorerSession::from_streams(client_read, client_write, Semantics::Parallelism, 4, Duration::from_secs(5));
        assert!(matches!(err, Err(ScorerError::Protocol(_))));
    }

    #[test]
    fn duplicate_request_ids_rejected() {
        let (r, w, _h) = fake_server(1, |id| format!("{id}\t0.5"));
        let mut s = ScorerSession::from_streams(r, w, Semantics::Parallelism, 4, Duration::from_secs(5)).unwrap();
        let dup = vec![SentencePair::new(1, "a", "b"), SentencePair::new(1, "c", "d")];
        assert!(matches!(s.score(&dup), Err(ScorerError::Protocol(_))));
    }

    const SH_ECHO: &str = r#"t=$(printf '\t'); read -r h; echo 'OK sh-echo/1'; while IFS= read -r l; do [ "$l" = BYE ] && exit 0; printf '%s\t0.420000\n' "${l%%$t*}"; done"#;

    #[test]
    fn child_process_round_trip() {
        let cmd = ScorerCommand::new(SH_ECHO);
        let scores = external_score_batch(&cmd, Semantics::Parallelism, &pairs(500)).unwrap();
        assert_eq!(scores, vec![0.42; 500]);
    }

    #[test]
    fn missing_command_fails_after_retries() {
        let mut cmd = ScorerCommand::new("exit 7");
        cmd.retries = 1;
        cmd.timeout = Duration::from_secs(2);
        let err = external_score_batch(&cmd, Semantics::Parallelism, &pairs(1)).unwrap_err();
        assert!(err.is_retryable(), "{err}");
    }
}
