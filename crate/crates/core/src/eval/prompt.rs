//! FIM prompt assembly from model format profiles.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::context::{Channel, ContextSnippet};
use crate::error::{Error, Result};
use crate::text::TokenCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Layout {
    /// prefix, suffix, middle
    Psm,
    /// suffix, prefix, middle
    Spm,
}

/// Sentinel strings and layout for one model family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatProfile {
    pub name: String,
    pub layout: Layout,
    pub prefix_token: String,
    pub suffix_token: String,
    pub middle_token: String,
    /// Introduces each context snippet as `{sep}{path}\n`; without it a line
    /// comment naming the path is used.
    #[serde(default)]
    pub file_separator: Option<String>,
}

impl FormatProfile {
    pub fn new(name: &str, layout: Layout, prefix: &str, suffix: &str, middle: &str) -> Self {
        FormatProfile {
            name: name.into(),
            layout,
            prefix_token: prefix.into(),
            suffix_token: suffix.into(),
            middle_token: middle.into(),
            file_separator: None,
        }
    }

    fn with_separator(mut self, sep: &str) -> Self {
        self.file_separator = Some(sep.into());
        self
    }

    /// The FIM body without context.
    pub fn layout_body(&self, prefix: &str, suffix: &str) -> String {
        let (p, s, m) = (&self.prefix_token, &self.suffix_token, &self.middle_token);
        match self.layout {
            Layout::Psm => format!("{p}{prefix}{s}{suffix}{m}"),
            Layout::Spm => format!("{s}{suffix}{p}{prefix}{m}"),
        }
    }

    pub fn render_snippet(&self, snippet: &ContextSnippet, comment: &str) -> String {
        let header = match &self.file_separator {
            Some(sep) => format!("{sep}{}\n", snippet.source_path),
            None => format!("{comment} {}\n", snippet.source_path),
        };
        let nl = if snippet.text.ends_with('\n') { "" } else { "\n" };
        format!("{header}{}{nl}", snippet.text)
    }
}

/// Profiles shipped with the tool, keyed by name.
pub fn builtin_profiles() -> BTreeMap<String, FormatProfile> {
    [
        FormatProfile::new("generic", Layout::Psm, "<P>", "<S>", "<M>"),
        FormatProfile::new("qwen", Layout::Psm, "<|fim_prefix|>", "<|fim_suffix|>", "<|fim_middle|>")
            .with_separator("<|file_sep|>"),
        FormatProfile::new("deepseek", Layout::Psm, "<｜fim▁begin｜>", "<｜fim▁hole｜>", "<｜fim▁end｜>"),
        FormatProfile::new("starcoder2", Layout::Psm, "<fim_prefix>", "<fim_suffix>", "<fim_middle>")
            .with_separator("<file_sep>"),
        FormatProfile::new("seed-coder", Layout::Spm, "<[fim-prefix]>", "<[fim-suffix]>", "<[fim-middle]>"),
    ]
    .into_iter()
    .map(|p| (p.name.clone(), p))
    .collect()
}

/// Looks a profile up among `extra` first, then the built-ins.
pub fn resolve_profile(name: &str, extra: &[FormatProfile]) -> Result<FormatProfile> {
    extra
        .iter()
        .find(|p| p.name == name)
        .cloned()
        .or_else(|| builtin_profiles().remove(name))
        .ok_or_else(|| Error::Config(format!("unknown format profile `{name}`")))
}

/// What goes into a prompt, independent of sentinels.
#[derive(Debug, Clone, Copy)]
pub struct PromptInput<'a> {
    pub language: &'a str,
    pub prefix: &'a str,
    pub suffix: &'a str,
    pub context: &'a [ContextSnippet],
}

fn comment_marker(language: &str) -> &'static str {
    if language.eq_ignore_ascii_case("python") {
        "#"
    } else {
        "//"
    }
}

/// Token split of the intra-file budget: the suffix keeps at least a quarter
/// when it needs it, the prefix gets the rest.
pub fn split_intra_budget(prefix_tokens: usize, suffix_tokens: usize, budget: usize) -> (usize, usize) {
    let s_keep = suffix_tokens.min(budget.saturating_sub(prefix_tokens).max(budget / 4));
    let p_keep = prefix_tokens.min(budget - s_keep);
    (p_keep, s_keep)
}

fn keep_tail(text: &str, spans: &[Range<usize>], keep: usize) -> usize {
    if keep >= spans.len() {
        0
    } else if keep == 0 {
        text.len()
    } else {
        spans[spans.len() - keep].start
    }
}

fn keep_head(text: &str, spans: &[Range<usize>], keep: usize) -> usize {
    if keep >= spans.len() {
        text.len()
    } else if keep == 0 {
        0
    } else {
        spans[keep - 1].end
    }
}

/// Indices of snippets that fit `budget`, shedding bm25 snippets lowest score
/// first, then dependency snippets from the end.
fn fit_context(costs: &[usize], context: &[ContextSnippet], budget: usize) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..context.len()).collect();
    let mut total: usize = costs.iter().sum();
    let mut shed: Vec<usize> = (0..context.len()).collect();
    shed.sort_by(|&a, &b| {
        let key = |i: usize| match (context[i].channel, context[i].score) {
            (Channel::Bm25, Some(s)) => (0, s, std::cmp::Reverse(i)),
            _ => (1, 0.0, std::cmp::Reverse(i)),
        };
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2))
    });
    for i in shed {
        if total <= budget {
            break;
        }
        total -= costs[i];
        keep.retain(|&k| k != i);
    }
    keep
}

/// Context block followed by the FIM body, each side trimmed to its budget.
pub fn assemble_prompt(
    input: &PromptInput<'_>,
    profile: &FormatProfile,
    intra_budget: usize,
    cross_budget: usize,
    counter: &dyn TokenCounter,
) -> Result<String> {
    if intra_budget < 1 || cross_budget < 1 {
        return Err(Error::InvalidInput(format!(
            "prompt budgets must be at least 1 (intra {intra_budget}, cross {cross_budget})"
        )));
    }
    let comment = comment_marker(input.language);
    let rendered: Vec<String> = input.context.iter().map(|s| profile.render_snippet(s, comment)).collect();
    let costs: Vec<usize> = rendered.iter().map(|r| counter.count(r)).collect();
    let mut prompt: String = fit_context(&costs, input.context, cross_budget)
        .into_iter()
        .map(|i| rendered[i].as_str())
        .collect();

    let p_spans = counter.spans(input.prefix);
    let s_spans = counter.spans(input.suffix);
    let (p_keep, s_keep) = split_intra_budget(p_spans.len(), s_spans.len(), intra_budget);
    let prefix = &input.prefix[keep_tail(input.prefix, &p_spans, p_keep)..];
    let suffix = &input.suffix[..keep_head(input.suffix, &s_spans, s_keep)];
    prompt.push_str(&profile.layout_body(prefix, suffix));
    Ok(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::LexicalTokenCounter;

    fn psm() -> FormatProfile {
        FormatProfile::new("t", Layout::Psm, "<P>", "<S>", "<M>")
    }

    fn input<'a>(prefix: &'a str, suffix: &'a str, context: &'a [ContextSnippet]) -> PromptInput<'a> {
        PromptInput {
            language: "python",
            prefix,
            suffix,
            context,
        }
    }

    fn snip(path: &str, channel: Channel, score: Option<f64>, text: &str) -> ContextSnippet {
        ContextSnippet {
            source_path: path.into(),
            channel,
            text: text.into(),
            score,
            token_cost: 0,
        }
    }

    #[test]
    fn layouts() {
        let c = LexicalTokenCounter;
        assert_eq!(assemble_prompt(&input("a", "b", &[]), &psm(), 10, 10, &c).unwrap(), "<P>a<S>b<M>");
        let mut spm = psm();
        spm.layout = Layout::Spm;
        assert_eq!(assemble_prompt(&input("a", "b", &[]), &spm, 10, 10, &c).unwrap(), "<S>b<P>a<M>");
    }

    #[test]
    fn zero_budget_is_error() {
        let c = LexicalTokenCounter;
        assert!(assemble_prompt(&input("a", "b", &[]), &psm(), 0, 10, &c).is_err());
        assert!(assemble_prompt(&input("a", "b", &[]), &psm(), 10, 0, &c).is_err());
    }

    #[test]
    fn oversize_prefix_keeps_its_tail() {
        let c = LexicalTokenCounter;
        let prefix = "one two three four five six seven eight";
        let out = assemble_prompt(&input(prefix, "", &[]), &psm(), 3, 10, &c).unwrap();
        let kept = out.strip_prefix("<P>").unwrap().strip_suffix("<S><M>").unwrap();
        assert_eq!(kept, "six seven eight");
        assert!(prefix.ends_with(kept));
    }

    #[test]
    fn oversize_suffix_keeps_its_head() {
        let c = LexicalTokenCounter;
        let out = assemble_prompt(&input("a b", "c d e f g h", &[]), &psm(), 4, 10, &c).unwrap();
        assert_eq!(out, "<P>a b<S>c d<M>");
    }

    #[test]
    fn budget_split() {
        assert_eq!(split_intra_budget(10, 10, 100), (10, 10));
        assert_eq!(split_intra_budget(100, 100, 40), (30, 10));
        assert_eq!(split_intra_budget(5, 100, 40), (5, 35));
        assert_eq!(split_intra_budget(100, 2, 40), (38, 2));
    }

    #[test]
    fn context_drops_lowest_score_first() {
        let c = LexicalTokenCounter;
        let ctx = [
            snip("dep.py", Channel::Dependency, None, "class D: ..."),
            snip("hi.py", Channel::Bm25, Some(9.0), "hi = 1"),
            snip("lo.py", Channel::Bm25, Some(1.0), "lo = 1"),
        ];
        let full = assemble_prompt(&input("x", "y", &ctx), &psm(), 10, 1000, &c).unwrap();
        assert!(full.starts_with("# dep.py\nclass D: ...\n# hi.py\nhi = 1\n# lo.py\nlo = 1\n<P>"));
        let costs: Vec<usize> = ctx.iter().map(|s| c.count(&psm().render_snippet(s, "#"))).collect();
        let tight = costs[0] + costs[1];
        let out = assemble_prompt(&input("x", "y", &ctx), &psm(), 10, tight, &c).unwrap();
        assert!(out.contains("hi.py") && out.contains("dep.py") && !out.contains("lo.py"));
        let out = assemble_prompt(&input("x", "y", &ctx), &psm(), 10, costs[0], &c).unwrap();
        assert!(out.contains("dep.py") && !out.contains(".py\nhi"));
    }

    #[test]
    fn separator_profiles() {
        let qwen = resolve_profile("qwen", &[]).unwrap();
        let s = snip("m/a.py", Channel::Bm25, Some(1.0), "x = 1\n");
        assert_eq!(qwen.render_snippet(&s, "#"), "<|file_sep|>m/a.py\nx = 1\n");
        assert_eq!(resolve_profile("seed-coder", &[]).unwrap().layout, Layout::Spm);
        assert!(resolve_profile("nope", &[]).is_err());
        let custom = FormatProfile::new("qwen", Layout::Spm, "a", "b", "c");
        assert_eq!(resolve_profile("qwen", std::slice::from_ref(&custom)).unwrap(), custom);
    }
}
