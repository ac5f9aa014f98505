//! Heuristic quality rules. Rules run in declared order and a file is
//! charged to the first rule it fails.

use std::collections::HashSet;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{DroppedFile, SourceFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterRule {
    MaxFileBytes { limit: usize },
    MaxLines { limit: usize },
    MinLines { limit: usize },
    /// Longest line, in characters.
    MaxLineLength { limit: usize },
    MaxMeanLineLength { limit: f64 },
    /// Alphanumeric characters over all characters.
    MinAlnumFraction { limit: f64 },
    /// Alphabetic characters over all characters.
    MinAlphaFraction { limit: f64 },
    MaxNumericFraction { limit: f64 },
    /// Case-insensitive markers searched in the first `scan_lines` lines.
    AutogeneratedMarker { markers: Vec<String>, scan_lines: usize },
    /// Characters inside `0x..` literals or bare hex runs of 32+ digits.
    MaxHexBlobFraction { limit: f64 },
    /// Characters inside base64-looking runs of 64+ characters.
    MaxBase64BlobFraction { limit: f64 },
    /// Repeated lines among non-blank lines of at least 10 characters.
    MaxDuplicateLineFraction { limit: f64 },
    /// Longest whitespace-free token, in characters.
    MaxTokenLength { limit: usize },
    /// User rule: drop files matching a regular expression.
    ForbiddenPattern { id: String, pattern: String },
}

impl FilterRule {
    pub fn id(&self) -> String {
        match self {
            FilterRule::ForbiddenPattern { id, .. } => id.clone(),
            other => {
                let v = serde_json::to_value(other).expect("rules serialize");
                v["rule"].as_str().unwrap_or_default().to_owned()
            }
        }
    }

    pub fn reason(&self) -> String {
        match self {
            FilterRule::MaxFileBytes { limit } => format!("file larger than {limit} bytes"),
            FilterRule::MaxLines { limit } => format!("more than {limit} lines"),
            FilterRule::MinLines { limit } => format!("fewer than {limit} lines"),
            FilterRule::MaxLineLength { limit } => format!("a line longer than {limit} characters"),
            FilterRule::MaxMeanLineLength { limit } => format!("mean line length above {limit}"),
            FilterRule::MinAlnumFraction { limit } => format!("alphanumeric fraction below {limit}"),
            FilterRule::MinAlphaFraction { limit } => format!("alphabetic fraction below {limit}"),
            FilterRule::MaxNumericFraction { limit } => format!("digit fraction above {limit}"),
            FilterRule::AutogeneratedMarker { .. } => "auto-generated file marker".to_owned(),
            FilterRule::MaxHexBlobFraction { limit } => format!("hex data fraction above {limit}"),
            FilterRule::MaxBase64BlobFraction { limit } => format!("base64 data fraction above {limit}"),
            FilterRule::MaxDuplicateLineFraction { limit } => format!("duplicate-line fraction above {limit}"),
            FilterRule::MaxTokenLength { limit } => format!("a token longer than {limit} characters"),
            FilterRule::ForbiddenPattern { pattern, .. } => format!("matches /{pattern}/"),
        }
    }
}

/// The built-in rule list, in evaluation order.
pub fn default_rules() -> Vec<FilterRule> {
    vec![
        FilterRule::MaxFileBytes { limit: 1 << 20 },
        FilterRule::MaxLines { limit: 10_000 },
        FilterRule::MinLines { limit: 3 },
        FilterRule::MaxLineLength { limit: 1000 },
        FilterRule::MaxMeanLineLength { limit: 100.0 },
        FilterRule::MinAlnumFraction { limit: 0.25 },
        FilterRule::MinAlphaFraction { limit: 0.15 },
        FilterRule::MaxNumericFraction { limit: 0.5 },
        FilterRule::AutogeneratedMarker {
            markers: [
                "auto-generated",
                "autogenerated",
                "automatically generated",
                "do not edit",
                "@generated",
                "code generated by",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            scan_lines: 10,
        },
        FilterRule::MaxHexBlobFraction { limit: 0.25 },
        FilterRule::MaxBase64BlobFraction { limit: 0.1 },
        FilterRule::MaxDuplicateLineFraction { limit: 0.5 },
        FilterRule::MaxTokenLength { limit: 256 },
    ]
}

enum Compiled {
    Plain,
    Pattern(Regex),
}

/// A validated, ordered rule list.
pub struct RuleSet {
    rules: Vec<FilterRule>,
    compiled: Vec<Compiled>,
    hex: Regex,
    base64: Regex,
}

impl RuleSet {
    pub fn new(rules: Vec<FilterRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Config("rule set must not be empty".into()));
        }
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in &rules {
            match rule {
                FilterRule::ForbiddenPattern { pattern, .. } => {
                    let re = Regex::new(pattern)
                        .map_err(|e| Error::Config(format!("rule pattern /{pattern}/: {e}")))?;
                    compiled.push(Compiled::Pattern(re));
                }
                FilterRule::MinAlnumFraction { limit }
                | FilterRule::MinAlphaFraction { limit }
                | FilterRule::MaxNumericFraction { limit }
                | FilterRule::MaxHexBlobFraction { limit }
                | FilterRule::MaxBase64BlobFraction { limit }
                | FilterRule::MaxDuplicateLineFraction { limit }
                    if !(0.0..=1.0).contains(limit) =>
                {
                    return Err(Error::Config(format!("{}: fraction {limit} outside [0, 1]", rule.id())));
                }
                _ => compiled.push(Compiled::Plain),
            }
        }
        Ok(RuleSet {
            rules,
            compiled,
            hex: Regex::new(r"0[xX][0-9a-fA-F]+|[0-9a-fA-F]{32,}").expect("static regex"),
            base64: Regex::new(r"[A-Za-z0-9+/]{64,}={0,2}").expect("static regex"),
        })
    }

    pub fn rules(&self) -> &[FilterRule] {
        &self.rules
    }

    /// Index of the first rule `file` fails, if any.
    pub fn first_failure(&self, file: &SourceFile) -> Option<usize> {
        let stats = TextStats::of(&file.content);
        self.rules
            .iter()
            .zip(&self.compiled)
            .position(|(rule, compiled)| self.fails(rule, compiled, file, &stats))
    }

    fn fails(&self, rule: &FilterRule, compiled: &Compiled, file: &SourceFile, s: &TextStats) -> bool {
        let text = &file.content;
        match rule {
            FilterRule::MaxFileBytes { limit } => file.byte_count > *limit,
            FilterRule::MaxLines { limit } => file.line_count > *limit,
            FilterRule::MinLines { limit } => file.line_count < *limit,
            FilterRule::MaxLineLength { limit } => s.max_line_chars > *limit,
            FilterRule::MaxMeanLineLength { limit } => s.mean_line_chars() > *limit,
            FilterRule::MinAlnumFraction { limit } => s.fraction(s.alnum) < *limit,
            FilterRule::MinAlphaFraction { limit } => s.fraction(s.alpha) < *limit,
            FilterRule::MaxNumericFraction { limit } => s.fraction(s.digits) > *limit,
            FilterRule::AutogeneratedMarker { markers, scan_lines } => text
                .lines()
                .take(*scan_lines)
                .map(str::to_lowercase)
                .any(|line| markers.iter().any(|m| line.contains(&m.to_lowercase()))),
            FilterRule::MaxHexBlobFraction { limit } => s.fraction(matched_chars(&self.hex, text)) > *limit,
            FilterRule::MaxBase64BlobFraction { limit } => {
                s.fraction(matched_chars(&self.base64, text)) > *limit
            }
            FilterRule::MaxDuplicateLineFraction { limit } => duplicate_line_fraction(text) > *limit,
            FilterRule::MaxTokenLength { limit } => {
                text.split_whitespace().any(|tok| tok.chars().count() > *limit)
            }
            FilterRule::ForbiddenPattern { .. } => match compiled {
                Compiled::Pattern(re) => re.is_match(text),
                Compiled::Plain => false,
            },
        }
    }
}

struct TextStats {
    chars: usize,
    alnum: usize,
    alpha: usize,
    digits: usize,
    max_line_chars: usize,
    lines: usize,
    line_chars: usize,
}

impl TextStats {
    fn of(text: &str) -> Self {
        let mut s = TextStats {
            chars: 0,
            alnum: 0,
            alpha: 0,
            digits: 0,
            max_line_chars: 0,
            lines: 0,
            line_chars: 0,
        };
        for c in text.chars() {
            s.chars += 1;
            if c.is_alphanumeric() {
                s.alnum += 1;
            }
            if c.is_alphabetic() {
                s.alpha += 1;
            }
            if c.is_ascii_digit() {
                s.digits += 1;
            }
        }
        for line in text.lines() {
            let n = line.chars().count();
            s.lines += 1;
            s.line_chars += n;
            s.max_line_chars = s.max_line_chars.max(n);
        }
        s
    }

    fn fraction(&self, part: usize) -> f64 {
        if self.chars == 0 {
            0.0
        } else {
            part as f64 / self.chars as f64
        }
    }

    fn mean_line_chars(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.line_chars as f64 / self.lines as f64
        }
    }
}

fn matched_chars(re: &Regex, text: &str) -> usize {
    re.find_iter(text).map(|m| m.as_str().chars().count()).sum()
}

fn duplicate_line_fraction(text: &str) -> f64 {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| l.chars().count() >= 10)
        .collect();
    if lines.len() < 5 {
        return 0.0;
    }
    let distinct: HashSet<&str> = lines.iter().copied().collect();
    (lines.len() - distinct.len()) as f64 / lines.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDrops {
    pub rule: String,
    pub reason: String,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub ingested: usize,
    pub retained: usize,
    /// One entry per rule, in evaluation order.
    pub rules: Vec<RuleDrops>,
}

impl FilterReport {
    pub fn total_dropped(&self) -> usize {
        self.rules.iter().map(|r| r.dropped).sum()
    }

    /// Adds another report with the same rule list into this one.
    pub fn merge(&mut self, other: &FilterReport) {
        self.ingested += other.ingested;
        self.retained += other.retained;
        if self.rules.is_empty() {
            self.rules = other.rules.clone();
        } else {
            for (mine, theirs) in self.rules.iter_mut().zip(&other.rules) {
                mine.dropped += theirs.dropped;
            }
        }
    }
}

pub(crate) fn partition(files: Vec<SourceFile>, rules: &RuleSet) -> (Vec<SourceFile>, Vec<DroppedFile>, FilterReport) {
    let verdicts: Vec<Option<usize>> = files.par_iter().map(|f| rules.first_failure(f)).collect();
    let mut counts = vec![0usize; rules.rules().len()];
    let ingested = files.len();
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    for (file, verdict) in files.into_iter().zip(verdicts) {
        match verdict {
            None => retained.push(file),
            Some(i) => {
                counts[i] += 1;
                dropped.push(DroppedFile {
                    file,
                    rule: rules.rules()[i].id(),
                });
            }
        }
    }
    let report = FilterReport {
        ingested,
        retained: retained.len(),
        rules: rules
            .rules()
            .iter()
            .zip(counts)
            .map(|(rule, dropped)| RuleDrops {
                rule: rule.id(),
                reason: rule.reason(),
                dropped,
            })
            .collect(),
    };
    (retained, dropped, report)
}

/// Keeps the files that pass every rule and reports drops per rule.
pub fn apply_heuristic_filters(files: Vec<SourceFile>, rules: &RuleSet) -> (Vec<SourceFile>, FilterReport) {
    let (retained, _, report) = partition(files, rules);
    (retained, report)
}
