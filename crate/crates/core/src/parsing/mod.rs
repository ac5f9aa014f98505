//! Concrete-syntax parsing on top of tree-sitter: byte-exact node spans,
//! kind-table selection, identifier counting and declaration skeletons.

mod kinds;
mod skeleton;

use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::Range;

use tree_sitter::{Node, Parser, Tree};

pub use kinds::{
    comment_kinds, function_kinds, identifier_kinds, parenthesized_kinds, selector_kinds,
    GRAMMAR_VERSIONS,
};
pub use skeleton::{extract_skeleton, elision_marker};

use crate::error::{Error, Result};
use crate::ingest::SourceFile;
use crate::language::Language;
use crate::strategy::Strategy;

pub fn grammar(language: Language) -> tree_sitter::Language {
    match language {
        Language::Java => tree_sitter_java::LANGUAGE.into(),
        Language::Python => tree_sitter_python::LANGUAGE.into(),
        Language::Cpp => tree_sitter_cpp::LANGUAGE.into(),
        Language::Go => tree_sitter_go::LANGUAGE.into(),
        Language::Javascript => tree_sitter_javascript::LANGUAGE.into(),
        Language::Typescript => tree_sitter_typescript::LANGUAGE_TYPESCRIPT.into(),
    }
}

thread_local! {
    static PARSERS: RefCell<HashMap<Language, Parser>> = RefCell::new(HashMap::new());
}

/// A parsed file. Owns its source so spans can be resolved to text.
pub struct SyntaxTree {
    tree: Tree,
    source: String,
    language: Language,
    error_ranges: Vec<Range<usize>>,
}

/// A node reference detached from the tree: kind plus byte span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeSpan {
    pub kind: &'static str,
    pub start: usize,
    pub end: usize,
}

impl NodeSpan {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    fn of(node: Node<'_>) -> Self {
        NodeSpan {
            kind: node.kind(),
            start: node.start_byte(),
            end: node.end_byte(),
        }
    }
}

/// Byte-length bounds applied by [`select_nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBounds {
    pub min_bytes: usize,
    pub max_bytes: usize,
}

impl Default for SizeBounds {
    fn default() -> Self {
        SizeBounds {
            min_bytes: 1,
            max_bytes: 4096,
        }
    }
}

/// A validated set of grammar node kinds serving one strategy in one language.
#[derive(Debug, Clone)]
pub struct NodeSelector {
    language: Language,
    strategy: Strategy,
    kinds: Vec<&'static str>,
}

impl NodeSelector {
    /// Builds a selector, rejecting kinds the grammar does not define.
    pub fn new(language: Language, strategy: Strategy, kinds: Vec<&'static str>) -> Result<Self> {
        let grammar = grammar(language);
        for kind in &kinds {
            if grammar.id_for_node_kind(kind, true) == 0 {
                return Err(Error::Config(format!(
                    "node kind `{kind}` does not exist in the {language} grammar"
                )));
            }
        }
        Ok(NodeSelector {
            language,
            strategy,
            kinds,
        })
    }

    /// The built-in selector for a syntax-node strategy.
    pub fn builtin(language: Language, strategy: Strategy) -> Result<Self> {
        NodeSelector::new(language, strategy, selector_kinds(language, strategy).to_vec())
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn kinds(&self) -> &[&'static str] {
        &self.kinds
    }

    fn matches(&self, kind: &str) -> bool {
        self.kinds.contains(&kind)
    }
}

pub fn parse(file: &SourceFile) -> Result<SyntaxTree> {
    parse_text(file.language, &file.content)
}

pub fn parse_text(language: Language, source: &str) -> Result<SyntaxTree> {
    let tree = PARSERS.with(|cell| -> Result<Tree> {
        let mut parsers = cell.borrow_mut();
        let parser = match parsers.entry(language) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(v) => {
                let mut parser = Parser::new();
                parser
                    .set_language(&grammar(language))
                    .map_err(|e| Error::Grammar(format!("{language}: {e}")))?;
                v.insert(parser)
            }
        };
        parser
            .parse(source, None)
            .ok_or_else(|| Error::Grammar(format!("{language}: parser returned no tree")))
    })?;

    let mut error_ranges = Vec::new();
    if tree.root_node().has_error() {
        walk(tree.root_node(), &mut |node| {
            if node.is_error() || node.is_missing() {
                error_ranges.push(node.start_byte()..node.end_byte());
                false
            } else {
                node.has_error()
            }
        });
    }

    Ok(SyntaxTree {
        tree,
        source: source.to_owned(),
        language,
        error_ranges,
    })
}

/// Pre-order traversal. The callback returns whether to descend into the node.
fn walk<'t>(root: Node<'t>, visit: &mut impl FnMut(Node<'t>) -> bool) {
    let mut cursor = root.walk();
    let mut descend = visit(cursor.node());
    loop {
        if descend && cursor.goto_first_child() {
            descend = visit(cursor.node());
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                descend = visit(cursor.node());
                break;
            }
            if !cursor.goto_parent() {
                return;
            }
        }
    }
}

impl SyntaxTree {
    pub fn language(&self) -> Language {
        self.language
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    pub fn root_span(&self) -> NodeSpan {
        NodeSpan::of(self.root())
    }

    pub fn has_errors(&self) -> bool {
        self.root().has_error()
    }

    pub fn error_ranges(&self) -> &[Range<usize>] {
        &self.error_ranges
    }

    pub fn text(&self, span: &NodeSpan) -> &str {
        &self.source[span.range()]
    }

    pub fn node_text(&self, node: Node<'_>) -> &str {
        &self.source[node.byte_range()]
    }

    /// True when `range` overlaps (or touches, for zero-width missing nodes) an error region.
    pub fn intersects_error(&self, range: &Range<usize>) -> bool {
        self.error_ranges.iter().any(|err| {
            if err.is_empty() {
                range.start <= err.start && err.start <= range.end
            } else {
                range.start < err.end && err.start < range.end
            }
        })
    }

    /// Visits every node (named and anonymous) in pre-order.
    pub fn for_each_node<'t>(&'t self, mut f: impl FnMut(Node<'t>)) {
        walk(self.root(), &mut |node| {
            f(node);
            true
        });
    }

    /// Named nodes whose kind is in `kinds`, in document order.
    pub fn nodes_of_kinds<'t>(&'t self, kinds: &[&str]) -> Vec<Node<'t>> {
        let mut out = Vec::new();
        self.for_each_node(|node| {
            if node.is_named() && kinds.contains(&node.kind()) {
                out.push(node);
            }
        });
        out
    }

    /// Whether `node` is usable as a target: no error inside it and no overlap with one.
    pub fn is_clean(&self, node: Node<'_>) -> bool {
        !node.has_error() && !self.intersects_error(&node.byte_range())
    }
}

/// Spans of the nodes matched by `selector` that fit `bounds` and avoid error regions.
pub fn select_nodes(tree: &SyntaxTree, selector: &NodeSelector, bounds: SizeBounds) -> Vec<NodeSpan> {
    if selector.language() != tree.language() {
        return Vec::new();
    }
    let mut out = Vec::new();
    tree.for_each_node(|node| {
        if !node.is_named() || !selector.matches(node.kind()) {
            return;
        }
        let len = node.end_byte() - node.start_byte();
        if len < bounds.min_bytes || len > bounds.max_bytes {
            return;
        }
        if tree.is_clean(node) {
            out.push(NodeSpan::of(node));
        }
    });
    out
}

/// Number of identifier-kind nodes in the whole tree.
pub fn count_identifiers(tree: &SyntaxTree) -> usize {
    let kinds = identifier_kinds(tree.language());
    let mut count = 0;
    tree.for_each_node(|node| {
        if node.is_named() && kinds.contains(&node.kind()) {
            count += 1;
        }
    });
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(lang: Language, src: &str) -> SyntaxTree {
        parse_text(lang, src).unwrap()
    }

    #[test]
    fn root_covers_file() {
        let t = tree(Language::Python, "a = 1");
        assert_eq!(t.root_span().range(), 0..5);
        assert!(!t.has_errors());
    }

    #[test]
    fn empty_file() {
        let t = tree(Language::Python, "");
        assert_eq!(t.root_span().range(), 0..0);
        assert_eq!(t.root().named_child_count(), 0);
        assert_eq!(count_identifiers(&t), 0);
    }

    #[test]
    fn unbalanced_brace_flags_errors() {
        let t = tree(Language::Java, "class A { void f() { int x = 1; }\n");
        assert!(t.has_errors());
        assert!(!t.error_ranges().is_empty());
    }

    #[test]
    fn identifiers_in_c_family_declaration() {
        assert_eq!(count_identifiers(&tree(Language::Java, "int a = b + c;")), 3);
        assert_eq!(count_identifiers(&tree(Language::Cpp, "int a = b + c;")), 3);
    }

    #[test]
    fn identifier_count_is_additive() {
        let a = "x = y + 1\n";
        let b = "def f(p):\n    return p.q\n";
        let ca = count_identifiers(&tree(Language::Python, a));
        let cb = count_identifiers(&tree(Language::Python, b));
        let joined = count_identifiers(&tree(Language::Python, &format!("{a}{b}")));
        assert_eq!(ca + cb, joined);
    }

    #[test]
    fn select_methods_in_java() {
        let src = "class A {\n  void f() { g(); }\n  int h(int x) { return x; }\n}\n";
        let t = tree(Language::Java, src);
        let sel = NodeSelector::builtin(Language::Java, Strategy::Methods).unwrap();
        let spans = select_nodes(&t, &sel, SizeBounds::default());
        assert_eq!(spans.len(), 2);
        assert_eq!(t.text(&spans[0]), "void f() { g(); }");
        assert_eq!(t.text(&spans[1]), "int h(int x) { return x; }");
    }

    #[test]
    fn select_respects_bounds_and_disjoint_kinds() {
        let body: String = (0..1200).map(|i| format!("    x{i} = {i}\n")).collect();
        let src = format!("def big():\n{body}");
        assert!(src.len() > 12_000);
        let t = tree(Language::Python, &src);
        let methods = NodeSelector::builtin(Language::Python, Strategy::Methods).unwrap();
        assert!(select_nodes(&t, &methods, SizeBounds { min_bytes: 1, max_bytes: 4096 }).is_empty());
        assert_eq!(select_nodes(&t, &methods, SizeBounds { min_bytes: 1, max_bytes: 1 << 20 }).len(), 1);

        let decorators = NodeSelector::builtin(Language::Python, Strategy::AnnotationsOrDecorators).unwrap();
        assert!(select_nodes(&t, &decorators, SizeBounds::default()).is_empty());
    }

    #[test]
    fn selection_skips_error_regions() {
        let src = "def ok():\n    return 1\n\ndef bad(:\n    return 2\n";
        let t = tree(Language::Python, src);
        assert!(t.has_errors());
        let sel = NodeSelector::builtin(Language::Python, Strategy::ReturnStatements).unwrap();
        for span in select_nodes(&t, &sel, SizeBounds::default()) {
            assert!(!t.intersects_error(&span.range()));
        }
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = NodeSelector::new(Language::Go, Strategy::Loops, vec!["for_each_loop_of_doom"]);
        assert!(err.is_err());
    }

    #[test]
    fn leaves_reconstruct_source() {
        let src = "import os\n\ndef f(a, b):\n    # note\n    return os.path.join(a, b)\n";
        let t = tree(Language::Python, src);
        let mut rebuilt = String::new();
        let mut pos = 0;
        t.for_each_node(|n| {
            if n.child_count() == 0 {
                rebuilt.push_str(&src[pos..n.start_byte()]);
                rebuilt.push_str(&src[n.byte_range()]);
                pos = n.end_byte();
            }
        });
        rebuilt.push_str(&src[pos..]);
        assert_eq!(rebuilt, src);
    }
}
