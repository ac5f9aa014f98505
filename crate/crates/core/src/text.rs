//! Small text helpers shared across stages: line spans, hashing, and the
//! lexical tokenizer used for budgets and BLEU.

use std::ops::Range;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// One line of a text buffer. `content` excludes the terminator, `full`
/// includes it (`\n` or `\r\n`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineSpan {
    pub content: Range<usize>,
    pub full: Range<usize>,
}

/// Splits `text` into lines with the same semantics as [`str::lines`].
pub fn line_spans(text: &str) -> Vec<LineSpan> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    while start < bytes.len() {
        let nl = memchr_newline(&bytes[start..]).map(|i| start + i);
        let (content_end, full_end) = match nl {
            Some(i) => {
                let ce = if i > start && bytes[i - 1] == b'\r' { i - 1 } else { i };
                (ce, i + 1)
            }
            None => (bytes.len(), bytes.len()),
        };
        out.push(LineSpan {
            content: start..content_end,
            full: start..full_end,
        });
        start = full_end;
    }
    out
}

fn memchr_newline(bytes: &[u8]) -> Option<usize> {
    bytes.iter().position(|&b| b == b'\n')
}

pub fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// First line of `text` containing a non-whitespace character, without its terminator.
pub fn first_non_empty_line(text: &str) -> Option<&str> {
    text.lines().find(|l| !is_blank(l))
}

pub fn last_non_empty_line(text: &str) -> Option<&str> {
    text.lines().rev().find(|l| !is_blank(l))
}

/// Removes every whitespace character.
pub fn strip_all_whitespace(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Counts and locates tokens for context budgets and prompt trimming.
pub trait TokenCounter: Send + Sync {
    fn spans(&self, text: &str) -> Vec<Range<usize>>;

    fn count(&self, text: &str) -> usize {
        self.spans(text).len()
    }
}

/// Word runs and single punctuation characters (`\w+|[^\w\s]`); whitespace is free.
#[derive(Debug, Default, Clone, Copy)]
pub struct LexicalTokenCounter;

impl TokenCounter for LexicalTokenCounter {
    fn spans(&self, text: &str) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut word_start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if is_word_char(c) {
                word_start.get_or_insert(i);
                continue;
            }
            if let Some(s) = word_start.take() {
                spans.push(s..i);
            }
            if !c.is_whitespace() {
                spans.push(i..i + c.len_utf8());
            }
        }
        if let Some(s) = word_start {
            spans.push(s..text.len());
        }
        spans
    }
}

pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Lexical tokens as owned strings.
pub fn lex_tokens(text: &str) -> Vec<&str> {
    LexicalTokenCounter
        .spans(text)
        .into_iter()
        .map(|r| &text[r])
        .collect()
}
