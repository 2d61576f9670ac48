//! Corpus ingestion: streaming tokenization under a recorded normalization
//! policy, plus exact whole-stream statistics for validation at desk scale.
//!
//! [`TextTokens`] splits raw bytes on Unicode whitespace while holding only
//! the token currently being assembled, so memory stays bounded regardless
//! of input size. [`LineTokens`] reads pre-tokenized input (one label per
//! line, verbatim, blank lines skipped) for callers who bring their own
//! tokenizer.

use std::collections::{HashMap, VecDeque};
use std::io::{self, BufRead, Read};

use serde::Serialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::token::Token;

/// Per-token transformations, applied in the order: Unicode NFC, then
/// lowercasing, then stripping leading/trailing punctuation (any
/// non-alphanumeric character). Tokens that normalize to empty are
/// dropped. Downstream results are meaningless without the policy that
/// produced them, so reports echo it verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NormalizationPolicy {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub unicode_nfc: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            unicode_nfc: true,
        }
    }
}

impl NormalizationPolicy {
    /// Stable one-line rendering for reports and output files.
    pub fn describe(&self) -> String {
        let flag = |on: bool| if on { "on" } else { "off" };
        format!(
            "lowercase={} strip_punctuation={} unicode_nfc={}",
            flag(self.lowercase),
            flag(self.strip_punctuation),
            flag(self.unicode_nfc)
        )
    }

    /// Normalize one whitespace-free raw token; `None` when it normalizes
    /// to empty.
    pub fn apply(&self, raw: &str) -> Option<String> {
        let mut token: String = if self.unicode_nfc {
            raw.nfc().collect()
        } else {
            raw.to_string()
        };
        if self.lowercase {
            token = token.to_lowercase();
        }
        if self.strip_punctuation {
            let stripped = token.trim_matches(|c: char| !c.is_alphanumeric());
            if stripped.len() != token.len() {
                token = stripped.to_string();
            }
        }
        if token.is_empty() {
            None
        } else {
            Some(token)
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: u64 },
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
}

const READ_CHUNK: usize = 32 * 1024;

/// Streaming tokenizer over any reader; yields normalized tokens in input
/// order. Malformed UTF-8 is reported with its byte offset and ends the
/// iteration.
pub struct TextTokens<R: Read> {
    source: R,
    policy: NormalizationPolicy,
    read_buf: Vec<u8>,
    /// Trailing bytes of a code point split across chunk reads (< 4).
    undecoded: Vec<u8>,
    /// Characters of the token currently being assembled.
    current: String,
    queue: VecDeque<Token>,
    /// Bytes fully decoded so far; error offsets point here.
    offset: u64,
    /// Held back until tokens decoded before the error are drained.
    pending_error: Option<IngestError>,
    finished: bool,
}

impl<R: Read> TextTokens<R> {
    pub fn new(source: R, policy: NormalizationPolicy) -> Self {
        Self {
            source,
            policy,
            read_buf: vec![0; READ_CHUNK],
            undecoded: Vec::new(),
            current: String::new(),
            queue: VecDeque::new(),
            offset: 0,
            pending_error: None,
            finished: false,
        }
    }

    fn flush_current(&mut self) {
        if self.current.is_empty() {
            return;
        }
        if let Some(label) = self.policy.apply(&self.current) {
            let token = Token::new(label).expect("normalized tokens are non-empty");
            self.queue.push_back(token);
        }
        self.current.clear();
    }

    fn consume_text(&mut self, text: &str) {
        for ch in text.chars() {
            if ch.is_whitespace() {
                self.flush_current();
            } else {
                self.current.push(ch);
            }
        }
    }

    fn refill(&mut self) -> Result<(), IngestError> {
        let n = loop {
            match self.source.read(&mut self.read_buf) {
                Ok(n) => break n,
                Err(err) if err.kind() == io::ErrorKind::Interrupted => continue,
                Err(err) => {
                    self.finished = true;
                    return Err(IngestError::Io(err));
                }
            }
        };
        if n == 0 {
            if !self.undecoded.is_empty() {
                self.finished = true;
                return Err(IngestError::InvalidUtf8 {
                    offset: self.offset,
                });
            }
            self.flush_current();
            self.finished = true;
            return Ok(());
        }
        let mut data = std::mem::take(&mut self.undecoded);
        data.extend_from_slice(&self.read_buf[..n]);
        match std::str::from_utf8(&data) {
            Ok(text) => {
                self.offset += text.len() as u64;
                self.consume_text(text);
            }
            Err(err) => {
                let valid = err.valid_up_to();
                let text = std::str::from_utf8(&data[..valid]).expect("validated prefix");
                self.offset += valid as u64;
                self.consume_text(text);
                match err.error_len() {
                    // A code point split at the chunk boundary; finish it
                    // with the next read.
                    None => self.undecoded = data[valid..].to_vec(),
                    Some(_) => {
                        self.finished = true;
                        return Err(IngestError::InvalidUtf8 {
                            offset: self.offset,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

impl<R: Read> Iterator for TextTokens<R> {
    type Item = Result<Token, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(token) = self.queue.pop_front() {
                return Some(Ok(token));
            }
            if let Some(err) = self.pending_error.take() {
                return Some(Err(err));
            }
            if self.finished {
                return None;
            }
            if let Err(err) = self.refill() {
                self.pending_error = Some(err);
            }
        }
    }
}

/// Pre-tokenized input: one label per line, UTF-8, no escaping. Labels are
/// taken verbatim (no normalization); blank lines are skipped; a trailing
/// carriage return is trimmed so CRLF files behave.
pub struct LineTokens<R: BufRead> {
    lines: io::Lines<R>,
}

impl<R: BufRead> LineTokens<R> {
    pub fn new(source: R) -> Self {
        Self {
            lines: source.lines(),
        }
    }
}

impl<R: BufRead> Iterator for LineTokens<R> {
    type Item = Result<Token, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(err) => return Some(Err(IngestError::Io(err))),
            };
            let label = line.strip_suffix('\r').unwrap_or(&line);
            if label.is_empty() {
                continue;
            }
            return Some(Ok(Token::new(label).expect("checked non-empty")));
        }
    }
}

/// Tokenize an in-memory string (infallible: the input is already valid
/// UTF-8). Agrees with [`TextTokens`] over the same bytes.
pub fn tokenize_str(text: &str, policy: NormalizationPolicy) -> Vec<Token> {
    text.split_whitespace()
        .filter_map(|raw| policy.apply(raw))
        .map(|label| Token::new(label).expect("normalized tokens are non-empty"))
        .collect()
}

/// Exact whole-stream statistics. Requires a full pass and memory
/// proportional to the number of distinct labels — validation scale only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamStats {
    /// Total tokens.
    pub length: u64,
    /// Exact distinct label count.
    pub distinct: u64,
    /// Most frequent labels, by (count desc, label asc), when requested.
    pub top_frequencies: Option<Vec<(String, u64)>>,
}

pub fn stream_stats<'a, I>(tokens: I) -> StreamStats
where
    I: IntoIterator<Item = &'a Token>,
{
    collect_stats(tokens, None)
}

pub fn stream_stats_with_top<'a, I>(tokens: I, top: usize) -> StreamStats
where
    I: IntoIterator<Item = &'a Token>,
{
    collect_stats(tokens, Some(top))
}

fn collect_stats<'a, I>(tokens: I, top: Option<usize>) -> StreamStats
where
    I: IntoIterator<Item = &'a Token>,
{
    let mut length = 0u64;
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for token in tokens {
        length += 1;
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    let distinct = counts.len() as u64;
    let top_frequencies = top.map(|limit| {
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .map(|(label, count)| (label.to_string(), count))
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(limit);
        entries
    });
    StreamStats {
        length,
        distinct,
        top_frequencies,
    }
}
