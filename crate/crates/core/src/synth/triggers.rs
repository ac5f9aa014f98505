//! Trigger tokens for the syntax-token strategy: the points where an editor
//! would typically fire a completion request.

use serde::{Deserialize, Serialize};

use crate::language::Language;
use crate::text::{is_word_char, line_spans};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerSet {
    /// Matched only at word boundaries.
    pub keywords: Vec<String>,
    pub operators: Vec<String>,
    /// Python: the colon closing a `def`/`if`/... header.
    pub header_colon: bool,
}

impl Default for TriggerSet {
    fn default() -> Self {
        TriggerSet::for_language(Language::Python)
    }
}

const PY_HEADERS: &[&str] = &[
    "def", "async", "class", "if", "elif", "else", "for", "while", "with", "try", "except", "finally",
];

impl TriggerSet {
    pub fn for_language(language: Language) -> Self {
        let mut keywords = vec!["return", "if", "for", "while"];
        let mut operators = vec!["=", "."];
        match language {
            Language::Python => {}
            Language::Java => {
                keywords.push("new");
                operators.push("->");
            }
            Language::Cpp => {
                keywords.push("new");
                operators.extend(["->", "::"]);
            }
            Language::Go => operators.push(":="),
            Language::Javascript | Language::Typescript => {
                keywords.push("new");
                operators.push("=>");
            }
        }
        TriggerSet {
            keywords: keywords.into_iter().map(String::from).collect(),
            operators: operators.into_iter().map(String::from).collect(),
            header_colon: language == Language::Python,
        }
    }

    pub fn with_keywords<S: Into<String>>(keywords: impl IntoIterator<Item = S>) -> Self {
        TriggerSet {
            keywords: keywords.into_iter().map(Into::into).collect(),
            operators: Vec::new(),
            header_colon: false,
        }
    }
}

/// Byte offsets where a middle may start: just past a trigger and any spaces
/// after it, with something non-blank left on the line. Sorted, deduplicated.
pub fn trigger_cuts(text: &str, triggers: &TriggerSet) -> Vec<usize> {
    let mut cuts = Vec::new();
    for span in line_spans(text) {
        let line = &text[span.content.clone()];
        let base = span.content.start;
        let mut ends = Vec::new();
        for kw in triggers.keywords.iter().map(|k| k.trim()).filter(|k| !k.is_empty()) {
            for (i, _) in line.match_indices(kw) {
                if word_bounded(line, i, i + kw.len()) {
                    ends.push(i + kw.len());
                }
            }
        }
        for op in triggers.operators.iter().filter(|o| !o.is_empty()) {
            for (i, _) in line.match_indices(op.as_str()) {
                if operator_ok(line, op, i) {
                    ends.push(i + op.len());
                }
            }
        }
        if triggers.header_colon {
            ends.extend(header_colon(line).map(|i| i + 1));
        }
        for end in ends {
            let rest = &line[end..];
            let skip = rest.len() - rest.trim_start_matches([' ', '\t']).len();
            if !rest.trim().is_empty() {
                cuts.push(base + end + skip);
            }
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    cuts
}

fn char_before(s: &str, i: usize) -> Option<char> {
    s[..i].chars().next_back()
}

fn char_at(s: &str, i: usize) -> Option<char> {
    s[i..].chars().next()
}

fn word_bounded(s: &str, start: usize, end: usize) -> bool {
    !char_before(s, start).is_some_and(is_word_char) && !char_at(s, end).is_some_and(is_word_char)
}

fn operator_ok(line: &str, op: &str, i: usize) -> bool {
    let prev = char_before(line, i);
    let next = char_at(line, i + op.len());
    match op {
        "=" => !matches!(prev, Some('=' | '!' | '<' | '>' | ':')) && !matches!(next, Some('=' | '>')),
        "." => {
            let member = prev.is_some_and(|c| is_word_char(c) || c == ')' || c == ']');
            let numeric = prev.is_some_and(|c| c.is_ascii_digit()) && next.is_some_and(|c| c.is_ascii_digit());
            member && !numeric && next.is_some_and(|c| c.is_alphabetic() || c == '_')
        }
        "::" => prev != Some(':') && next != Some(':'),
        "->" => prev != Some('-'),
        _ => true,
    }
}

/// Offset of the colon ending a Python compound-statement header on this line.
fn header_colon(line: &str) -> Option<usize> {
    let trimmed = line.trim_start();
    let indent = line.len() - trimmed.len();
    let head = trimmed.split(|c: char| !is_word_char(c)).next()?;
    if !PY_HEADERS.contains(&head) {
        return None;
    }
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    for (i, c) in trimmed.char_indices() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '\'' | '"') => quote = Some(c),
            (None, '(' | '[' | '{') => depth += 1,
            (None, ')' | ']' | '}') => depth -= 1,
            (None, ':') if depth == 0 => return Some(indent + i),
            (None, '#') => return None,
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn middles(text: &str, t: &TriggerSet) -> Vec<String> {
        trigger_cuts(text, t)
            .into_iter()
            .map(|c| text[c..].lines().next().unwrap().to_string())
            .collect()
    }

    #[test]
    fn return_keyword() {
        let t = TriggerSet::with_keywords(["return "]);
        assert_eq!(middles("def f(a, b):\n    return a+b\n", &t), ["a+b"]);
        assert!(middles("returned = 1\n", &t).is_empty());
    }

    #[test]
    fn assignment_skips_comparisons() {
        let t = TriggerSet::for_language(Language::Python);
        let m = middles("total = total + x\nif a == b: pass\n", &t);
        assert!(m.contains(&"total + x".to_string()));
        assert!(m.contains(&"pass".to_string()));
        assert!(!m.iter().any(|s| s.starts_with("= b") || s.starts_with(" b")));
    }

    #[test]
    fn member_access_and_decimals() {
        let t = TriggerSet::for_language(Language::Javascript);
        let m = middles("x = obj.field + 1.5;\n", &t);
        assert!(m.contains(&"field + 1.5;".to_string()));
        assert!(!m.iter().any(|s| s == "5;"));
    }

    #[test]
    fn header_colon_only_with_inline_body() {
        let t = TriggerSet {
            keywords: vec![],
            operators: vec![],
            header_colon: true,
        };
        assert_eq!(middles("if x: return {'a': 1}\n", &t), ["return {'a': 1}"]);
        assert!(middles("def f(x: int):\n    pass\n", &t).is_empty());
        assert!(middles("d = {'a': 1}\n", &t).is_empty());
    }

    #[test]
    fn blank_or_trailing_triggers_yield_nothing() {
        let t = TriggerSet::for_language(Language::Go);
        assert!(trigger_cuts("\n\n   \n", &t).is_empty());
        assert!(trigger_cuts("x =\n", &t).is_empty());
    }
}
