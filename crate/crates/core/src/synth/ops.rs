//! Target extraction for each strategy. Every `*_cuts` function lists the
//! byte ranges a strategy may carve out of a file; the public `synthesize_*`
//! operations pick one uniformly.

use std::ops::Range;

use rand::seq::IndexedRandom;
use rand::Rng;
use tree_sitter::Node;

use super::triggers::{trigger_cuts, TriggerSet};
use super::{FimSample, Pool, MAX_MIDDLE_BYTES};
use crate::ingest::SourceFile;
use crate::language::Language;
use crate::parsing::{comment_kinds, function_kinds, parenthesized_kinds, select_nodes, NodeSelector, SizeBounds, SyntaxTree};
use crate::strategy::Strategy;
use crate::text::{is_blank, line_spans};

/// A candidate middle: byte range plus the node kind it came from, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub range: Range<usize>,
    pub node_kind: Option<&'static str>,
}

impl Cut {
    fn plain(range: Range<usize>) -> Self {
        Cut { range, node_kind: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntraLineMode {
    RandomPosition,
    SyntaxToken,
}

fn usable(text: &str, range: &Range<usize>) -> bool {
    !range.is_empty() && range.len() <= MAX_MIDDLE_BYTES && !is_blank(&text[range.clone()])
}

fn pick<R: Rng + ?Sized>(file: &SourceFile, strategy: Strategy, cuts: &[Cut], rng: &mut R) -> Option<FimSample> {
    let cut = cuts.choose(rng)?;
    FimSample::from_cut(file, strategy, cut, Pool::Infill)
}

pub fn ast_cuts(tree: &SyntaxTree, strategy: Strategy) -> Vec<Cut> {
    let Ok(selector) = NodeSelector::builtin(tree.language(), strategy) else {
        return Vec::new();
    };
    select_nodes(tree, &selector, SizeBounds::default())
        .into_iter()
        .filter(|s| !is_blank(tree.text(s)))
        .map(|s| Cut {
            range: s.range(),
            node_kind: Some(s.kind),
        })
        .collect()
}

/// A syntax-node sample: one uniformly chosen node matched by the strategy's selector.
pub fn synthesize_ast_sample<R: Rng + ?Sized>(
    tree: &SyntaxTree,
    file: &SourceFile,
    strategy: Strategy,
    rng: &mut R,
) -> Option<FimSample> {
    if !strategy.is_ast() {
        return None;
    }
    pick(file, strategy, &ast_cuts(tree, strategy), rng)
}

/// Lines whose trimmed text has an interior cut point, as (trim start, trim end, line end).
pub fn intra_line_slots(text: &str) -> Vec<(usize, usize, usize)> {
    line_spans(text)
        .into_iter()
        .filter_map(|span| {
            let line = &text[span.content.clone()];
            let lead = line.len() - line.trim_start().len();
            let trimmed = line.trim();
            trimmed.chars().nth(1)?;
            let start = span.content.start + lead;
            Some((start, start + trimmed.len(), span.content.end))
        })
        .collect()
}

/// Picks a char boundary strictly inside `[start, end)` of the chosen slot.
pub fn random_intra_cut<R: Rng + ?Sized>(text: &str, slot: (usize, usize, usize), rng: &mut R) -> Cut {
    let (start, end, line_end) = slot;
    let inner: Vec<usize> = text[start..end].char_indices().skip(1).map(|(i, _)| start + i).collect();
    let at = inner[rng.random_range(0..inner.len())];
    Cut::plain(at..line_end)
}

pub fn syntax_token_cuts(file: &SourceFile, triggers: &TriggerSet) -> Vec<Cut> {
    let text = &file.content;
    let spans = line_spans(text);
    trigger_cuts(text, triggers)
        .into_iter()
        .filter_map(|at| {
            let line = spans.iter().find(|s| s.content.start <= at && at <= s.content.end)?;
            let range = at..line.content.end;
            usable(text, &range).then(|| Cut::plain(range))
        })
        .collect()
}

/// An intra-line sample: the middle runs from the cut to the end of the line.
pub fn synthesize_intra_line<R: Rng + ?Sized>(file: &SourceFile, mode: IntraLineMode, rng: &mut R) -> Option<FimSample> {
    match mode {
        IntraLineMode::RandomPosition => {
            let slots = intra_line_slots(&file.content);
            let slot = *slots.choose(rng)?;
            let cut = random_intra_cut(&file.content, slot, rng);
            FimSample::from_cut(file, Strategy::RandomIntraLine, &cut, Pool::Infill)
        }
        IntraLineMode::SyntaxToken => {
            let cuts = syntax_token_cuts(file, &TriggerSet::for_language(file.language));
            pick(file, Strategy::SyntaxTokenTrigger, &cuts, rng)
        }
    }
}

/// Interiors of delimited argument, parameter and collection nodes.
pub fn parenthesized_cuts(tree: &SyntaxTree) -> Vec<Cut> {
    let src = tree.source().as_bytes();
    tree.nodes_of_kinds(parenthesized_kinds(tree.language()))
        .into_iter()
        .filter(|n| tree.is_clean(*n))
        .filter_map(|n| {
            let (s, e) = (n.start_byte(), n.end_byte());
            if e < s + 2 {
                return None;
            }
            let pair = (src[s], src[e - 1]);
            if !matches!(pair, (b'(', b')') | (b'[', b']') | (b'{', b'}')) {
                return None;
            }
            let range = s + 1..e - 1;
            usable(tree.source(), &range).then(|| Cut {
                range,
                node_kind: Some(n.kind()),
            })
        })
        .collect()
}

/// A delimited-interior sample; the delimiters stay in prefix and suffix.
pub fn synthesize_parenthesized<R: Rng + ?Sized>(tree: &SyntaxTree, file: &SourceFile, rng: &mut R) -> Option<FimSample> {
    pick(file, Strategy::ParenthesesFragment, &parenthesized_cuts(tree), rng)
}

fn is_full_line_comment(tree: &SyntaxTree, node: Node<'_>) -> bool {
    let src = tree.source();
    let line_start = src[..node.start_byte()].rfind('\n').map_or(0, |i| i + 1);
    is_blank(&src[line_start..node.start_byte()])
}

/// The code block directly below each full-line comment.
pub fn post_comment_cuts(tree: &SyntaxTree) -> Vec<Cut> {
    let kinds = comment_kinds(tree.language());
    tree.nodes_of_kinds(kinds)
        .into_iter()
        .filter(|c| is_full_line_comment(tree, *c))
        .filter_map(|comment| {
            let next = comment.next_named_sibling()?;
            if kinds.contains(&next.kind()) || next.start_position().row != comment.end_position().row + 1 {
                return None;
            }
            if !tree.is_clean(next) {
                return None;
            }
            let range = next.byte_range();
            usable(tree.source(), &range).then(|| Cut {
                range,
                node_kind: Some(next.kind()),
            })
        })
        .collect()
}

/// A post-comment sample: the first sibling statement below a full-line comment.
pub fn synthesize_post_comment<R: Rng + ?Sized>(tree: &SyntaxTree, file: &SourceFile, rng: &mut R) -> Option<FimSample> {
    pick(file, Strategy::PostCommentBlock, &post_comment_cuts(tree), rng)
}

/// Whole non-blank lines, terminator included.
pub fn single_line_cuts(text: &str) -> Vec<Cut> {
    line_spans(text)
        .into_iter()
        .filter(|s| !is_blank(&text[s.content.clone()]) && s.full.len() <= MAX_MIDDLE_BYTES)
        .map(|s| Cut::plain(s.full))
        .collect()
}

/// A run of 2 to 8 whole lines (length uniform, then start uniform).
pub fn random_multi_line_cut<R: Rng + ?Sized>(text: &str, rng: &mut R) -> Option<Cut> {
    let spans = line_spans(text);
    if spans.len() < 2 {
        return None;
    }
    let k = rng.random_range(2..=spans.len().min(8));
    let start = rng.random_range(0..=spans.len() - k);
    let range = spans[start].full.start..spans[start + k - 1].full.end;
    usable(text, &range).then(|| Cut::plain(range))
}

/// A random-line sample: one whole line, or 2 to 8 consecutive lines.
pub fn synthesize_random_lines<R: Rng + ?Sized>(file: &SourceFile, multi: bool, rng: &mut R) -> Option<FimSample> {
    if multi {
        let cut = random_multi_line_cut(&file.content, rng)?;
        FimSample::from_cut(file, Strategy::RandomMultiLine, &cut, Pool::Infill)
    } else {
        pick(file, Strategy::RandomSingleLine, &single_line_cuts(&file.content), rng)
    }
}

/// Node that owns the leading doc comment of a function: the function itself
/// or an export/template wrapper around it.
fn doc_anchor(node: Node<'_>) -> Node<'_> {
    let mut anchor = node;
    while let Some(parent) = anchor.parent() {
        if matches!(parent.kind(), "export_statement" | "template_declaration") {
            anchor = parent;
        } else {
            break;
        }
    }
    anchor
}

fn has_leading_comment(tree: &SyntaxTree, node: Node<'_>) -> bool {
    let anchor = doc_anchor(node);
    let Some(prev) = anchor.prev_named_sibling() else {
        return false;
    };
    comment_kinds(tree.language()).contains(&prev.kind())
        && prev.end_position().row + 1 == anchor.start_position().row
}

fn python_docstring_end(tree: &SyntaxTree, body: Node<'_>) -> Option<usize> {
    let first = body.named_child(0)?;
    if first.kind() != "expression_statement" || first.named_child(0)?.kind() != "string" {
        return None;
    }
    let src = tree.source();
    let end = first.end_byte();
    Some(src[end..].find('\n').map_or(src.len(), |i| end + i + 1))
}

/// Bodies of documented functions. Python: everything after the docstring line;
/// brace languages: the interior of the body braces, given a leading comment.
pub fn function_cuts(tree: &SyntaxTree) -> Vec<Cut> {
    let src = tree.source();
    tree.nodes_of_kinds(function_kinds(tree.language()))
        .into_iter()
        .filter(|n| tree.is_clean(*n))
        .filter_map(|func| {
            let body = func.child_by_field_name("body")?;
            let range = if tree.language() == Language::Python {
                python_docstring_end(tree, body)?..body.end_byte()
            } else {
                if !has_leading_comment(tree, func) {
                    return None;
                }
                let (s, e) = (body.start_byte(), body.end_byte());
                if e < s + 2 || src.as_bytes()[s] != b'{' || src.as_bytes()[e - 1] != b'}' {
                    return None;
                }
                s + 1..e - 1
            };
            (range.start < range.end && usable(src, &range)).then(|| Cut {
                range,
                node_kind: Some(func.kind()),
            })
        })
        .collect()
}

/// One completion-pool sample per documented function; undocumented ones are skipped.
pub fn synthesize_function_sample(tree: &SyntaxTree, file: &SourceFile) -> Vec<FimSample> {
    function_cuts(tree)
        .iter()
        .filter_map(|cut| FimSample::from_cut(file, Strategy::FunctionBody, cut, Pool::Completion))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsing::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn file(lang: Language, path: &str, text: &str) -> SourceFile {
        SourceFile::new("r", path, lang, text.to_string())
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn assert_reconstructs(s: &FimSample, f: &SourceFile) {
        assert_eq!(format!("{}{}{}", s.prefix, s.middle, s.suffix), f.content);
    }

    const JAVA_ONE: &str = "class A {\n    int twice(int x) {\n        return x * 2;\n    }\n}\n";

    #[test]
    fn methods_on_one_method_java() {
        let f = file(Language::Java, "A.java", JAVA_ONE);
        let t = parse(&f).unwrap();
        let s = synthesize_ast_sample(&t, &f, Strategy::Methods, &mut rng()).unwrap();
        assert_eq!(s.middle, "int twice(int x) {\n        return x * 2;\n    }");
        assert_eq!(s.meta.node_kind.as_deref(), Some("method_declaration"));
        assert_reconstructs(&s, &f);
    }

    #[test]
    fn ast_on_empty_file_is_none() {
        let f = file(Language::Python, "e.py", "");
        let t = parse(&f).unwrap();
        assert!(synthesize_ast_sample(&t, &f, Strategy::Expressions, &mut rng()).is_none());
        assert!(synthesize_ast_sample(&t, &f, Strategy::RandomIntraLine, &mut rng()).is_none());
    }

    #[test]
    fn intra_line_forced_cut() {
        let text = "total = total + x\n";
        let slot = intra_line_slots(text)[0];
        let mut found = false;
        for seed in 0..200 {
            let cut = random_intra_cut(text, slot, &mut ChaCha8Rng::seed_from_u64(seed));
            assert!(cut.range.start > 0 && cut.range.start < 17);
            assert_eq!(cut.range.end, 17);
            if cut.range.start == 8 {
                assert_eq!(&text[cut.range.clone()], "total + x");
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn intra_line_blank_file() {
        let f = file(Language::Python, "b.py", "\n   \n\n");
        assert!(synthesize_intra_line(&f, IntraLineMode::RandomPosition, &mut rng()).is_none());
        assert!(synthesize_intra_line(&f, IntraLineMode::SyntaxToken, &mut rng()).is_none());
    }

    #[test]
    fn syntax_token_return() {
        let f = file(Language::Python, "a.py", "def add(a, b):\n    return a+b\n");
        let cuts = syntax_token_cuts(&f, &TriggerSet::with_keywords(["return "]));
        assert_eq!(cuts.len(), 1);
        assert_eq!(&f.content[cuts[0].range.clone()], "a+b");
    }

    #[test]
    fn parentheses_interior() {
        let f = file(Language::Python, "p.py", "print(compute(a, b))\n");
        let t = parse(&f).unwrap();
        let mut middles: Vec<&str> = parenthesized_cuts(&t).iter().map(|c| &f.content[c.range.clone()]).collect();
        middles.sort();
        assert_eq!(middles, ["a, b", "compute(a, b)"]);
        let s = synthesize_parenthesized(&t, &f, &mut rng()).unwrap();
        assert!(s.prefix.ends_with('('));
        assert!(s.suffix.starts_with(')'));
        assert_reconstructs(&s, &f);
    }

    #[test]
    fn post_comment_block() {
        let text = "x = 1\n# bump the counter\nif x:\n    x += 1\n# trailing note\n\ny = 2\n";
        let f = file(Language::Python, "c.py", text);
        let t = parse(&f).unwrap();
        let cuts = post_comment_cuts(&t);
        assert_eq!(cuts.len(), 1);
        assert_eq!(&text[cuts[0].range.clone()], "if x:\n    x += 1");
        let s = synthesize_post_comment(&t, &f, &mut rng()).unwrap();
        assert!(s.prefix.ends_with("# bump the counter\n"));
        assert_reconstructs(&s, &f);
    }

    #[test]
    fn random_lines() {
        let text = "a = 1\n\nb = 2\nc = 3\n";
        let f = file(Language::Python, "r.py", text);
        let single = synthesize_random_lines(&f, false, &mut rng()).unwrap();
        assert!(single.middle.ends_with('\n'));
        assert_eq!(single.middle.lines().count(), 1);
        for seed in 0..50 {
            if let Some(m) = synthesize_random_lines(&f, true, &mut ChaCha8Rng::seed_from_u64(seed)) {
                let n = m.middle.lines().count();
                assert!((2..=8).contains(&n));
                assert_reconstructs(&m, &f);
            }
        }
    }

    #[test]
    fn python_function_samples() {
        let text = "def a(x):\n    \"\"\"Double x.\"\"\"\n    return x * 2\n\n\ndef b(x):\n    '''Negate.'''\n    y = -x\n    return y\n\n\ndef c(x):\n    return x\n";
        let f = file(Language::Python, "f.py", text);
        let t = parse(&f).unwrap();
        let samples = synthesize_function_sample(&t, &f);
        assert_eq!(samples.len(), 2);
        assert!(samples[0].prefix.ends_with("\"\"\"Double x.\"\"\"\n"));
        assert_eq!(samples[0].middle, "    return x * 2");
        assert_eq!(samples[1].middle, "    y = -x\n    return y");
        for s in &samples {
            assert_eq!(s.meta.pool, Pool::Completion);
            assert_reconstructs(s, &f);
        }
    }

    #[test]
    fn brace_function_samples_need_comment() {
        let text = "package m\n\n// Add sums two ints.\nfunc Add(a, b int) int {\n\treturn a + b\n}\n\nfunc Sub(a, b int) int {\n\treturn a - b\n}\n";
        let f = file(Language::Go, "m.go", text);
        let t = parse(&f).unwrap();
        let samples = synthesize_function_sample(&t, &f);
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].middle, "\n\treturn a + b\n");
        assert!(samples[0].prefix.ends_with("func Add(a, b int) int {"));

        let js = "/** Greets. */\nexport function hi(n) {\n  return `hi ${n}`;\n}\n";
        let f = file(Language::Javascript, "h.js", js);
        let t = parse(&f).unwrap();
        assert_eq!(synthesize_function_sample(&t, &f).len(), 1);
    }

    #[test]
    fn no_functions_no_samples() {
        let f = file(Language::Python, "n.py", "x = 1\n");
        let t = parse(&f).unwrap();
        assert!(synthesize_function_sample(&t, &f).is_empty());
    }
}
