use tree_sitter::Node;

use super::{comment_kinds, SyntaxTree};
use crate::language::Language;

/// Body replacement used in skeletons and in function-completion prompts.
pub fn elision_marker(language: Language) -> &'static str {
    if language.uses_braces() {
        "{ /* ... */ }"
    } else {
        "..."
    }
}

/// Declaration-only view of a file: type headers, function signatures and
/// the comments documenting them, with bodies elided.
pub fn extract_skeleton(tree: &SyntaxTree) -> String {
    let mut out = Skeleton {
        tree,
        src: tree.source(),
        buf: String::new(),
    };
    out.items(tree.root());
    out.buf
}

struct Skeleton<'a> {
    tree: &'a SyntaxTree,
    src: &'a str,
    buf: String,
}

impl<'a> Skeleton<'a> {
    fn items(&mut self, parent: Node<'a>) {
        let mut cursor = parent.walk();
        let children: Vec<Node<'a>> = parent.named_children(&mut cursor).collect();
        for child in children {
            if self.tree.intersects_error(&child.byte_range()) || child.is_error() {
                continue;
            }
            match self.tree.language() {
                Language::Python => self.python_item(child),
                _ => self.brace_item(child),
            }
        }
    }

    fn line_indent(&self, pos: usize) -> &'a str {
        let line_start = self.src[..pos].rfind('\n').map_or(0, |i| i + 1);
        let line = &self.src[line_start..];
        let width = line.len() - line.trim_start_matches([' ', '\t']).len();
        &line[..width]
    }

    fn push_line(&mut self, indent: &str, text: &str) {
        self.buf.push_str(indent);
        self.buf.push_str(text);
        self.buf.push('\n');
    }

    fn text(&self, node: Node<'_>) -> &'a str {
        &self.src[node.byte_range()]
    }

    /// Header text from the start of `outer` up to where `body` begins.
    fn header(&self, outer: Node<'_>, body: Node<'_>) -> &'a str {
        self.src[outer.start_byte()..body.start_byte()].trim_end()
    }

    /// Comments directly above `node` with no blank line in between.
    fn leading_comments(&mut self, node: Node<'a>) {
        let kinds = comment_kinds(self.tree.language());
        let mut comments = Vec::new();
        let mut next_row = node.start_position().row;
        let mut cur = node.prev_named_sibling();
        while let Some(prev) = cur {
            if !kinds.contains(&prev.kind()) || prev.end_position().row + 1 != next_row {
                break;
            }
            if !self.is_full_line(prev) {
                break;
            }
            comments.push(prev);
            next_row = prev.start_position().row;
            cur = prev.prev_named_sibling();
        }
        for comment in comments.into_iter().rev() {
            let indent = self.line_indent(comment.start_byte());
            let text = self.text(comment).trim_end();
            self.push_line(indent, text);
        }
    }

    fn is_full_line(&self, node: Node<'_>) -> bool {
        let start = node.start_byte();
        let line_start = self.src[..start].rfind('\n').map_or(0, |i| i + 1);
        self.src[line_start..start].trim().is_empty()
    }

    // ---- python ----

    fn python_item(&mut self, node: Node<'a>) {
        let (outer, def) = if node.kind() == "decorated_definition" {
            match node.child_by_field_name("definition") {
                Some(def) => (node, def),
                None => return,
            }
        } else {
            (node, node)
        };
        let is_class = match def.kind() {
            "function_definition" => false,
            "class_definition" => true,
            _ => return,
        };
        let Some(body) = def.child_by_field_name("body") else {
            return;
        };
        self.leading_comments(outer);
        let indent = self.line_indent(outer.start_byte());
        let header = self.header(outer, body);
        self.push_line(indent, header);

        let body_indent = if body.start_position().row == def.start_position().row {
            format!("{indent}    ")
        } else {
            self.line_indent(body.start_byte()).to_owned()
        };
        if let Some(doc) = python_docstring(body) {
            let text = self.text(doc);
            self.push_line(&body_indent, text);
        }
        if is_class {
            let before = self.buf.len();
            self.items(body);
            if self.buf.len() == before {
                self.push_line(&body_indent, "...");
            }
        } else {
            self.push_line(&body_indent, "...");
        }
    }

    // ---- brace languages ----

    fn brace_item(&mut self, node: Node<'a>) {
        let lang = self.tree.language();
        let (outer, decl) = unwrap_declaration(node);
        let kind = decl.kind();

        if is_container(lang, kind) {
            let Some(body) = decl.child_by_field_name("body") else {
                return;
            };
            self.leading_comments(outer);
            let indent = self.line_indent(outer.start_byte());
            let header = format!("{} {{", self.header(outer, body));
            self.push_line(indent, &header);
            if kind == "enum_declaration" {
                self.java_enum_constants(body);
                if let Some(decls) = named_child_of_kind(body, "enum_body_declarations") {
                    self.items(decls);
                }
            } else {
                self.items(body);
            }
            let close = if matches!(kind, "class_specifier" | "struct_specifier") {
                "};"
            } else {
                "}"
            };
            self.push_line(indent, close);
            return;
        }

        if lang == Language::Cpp && kind == "access_specifier" {
            let indent = self.line_indent(decl.start_byte());
            let line = format!("{}:", self.text(decl));
            self.push_line(indent, &line);
            return;
        }

        if let Some(body) = function_body(lang, decl) {
            self.leading_comments(outer);
            let indent = self.line_indent(outer.start_byte());
            let mut line = format!("{} {}", self.header(outer, body), elision_marker(lang));
            if decl.kind() == "lexical_declaration" && self.text(outer).trim_end().ends_with(';') {
                line.push(';');
            }
            self.push_line(indent, &line);
            return;
        }

        if is_verbatim(lang, decl) {
            self.leading_comments(outer);
            let indent = self.line_indent(outer.start_byte());
            let text = self.text(outer).trim_end();
            self.push_line(indent, text);
        }
    }

    fn java_enum_constants(&mut self, body: Node<'a>) {
        let mut cursor = body.walk();
        let constants: Vec<&str> = body
            .named_children(&mut cursor)
            .filter(|c| c.kind() == "enum_constant")
            .map(|c| self.text(c))
            .collect();
        if constants.is_empty() {
            return;
        }
        let first = named_child_of_kind(body, "enum_constant").expect("non-empty");
        let indent = self.line_indent(first.start_byte());
        let line = format!("{};", constants.join(", "));
        self.push_line(indent, &line);
    }
}

fn python_docstring(body: Node<'_>) -> Option<Node<'_>> {
    let first = body.named_child(0)?;
    if first.kind() != "expression_statement" || first.named_child_count() != 1 {
        return None;
    }
    let inner = first.named_child(0)?;
    (inner.kind() == "string").then_some(first)
}

fn named_child_of_kind<'t>(node: Node<'t>, kind: &str) -> Option<Node<'t>> {
    let mut cursor = node.walk();
    let found = node.named_children(&mut cursor).find(|c| c.kind() == kind);
    found
}

/// Peels `export` and `template<...>` wrappers, returning (outer, declaration).
fn unwrap_declaration(node: Node<'_>) -> (Node<'_>, Node<'_>) {
    match node.kind() {
        "export_statement" => match node.child_by_field_name("declaration") {
            Some(decl) => (node, decl),
            None => (node, node),
        },
        "template_declaration" => {
            let count = node.named_child_count();
            match count.checked_sub(1).and_then(|i| node.named_child(i)) {
                Some(decl) => (node, decl),
                None => (node, node),
            }
        }
        _ => (node, node),
    }
}

fn is_container(lang: Language, kind: &str) -> bool {
    match lang {
        Language::Java => matches!(
            kind,
            "class_declaration" | "interface_declaration" | "enum_declaration" | "record_declaration"
        ),
        Language::Cpp => matches!(kind, "class_specifier" | "struct_specifier" | "namespace_definition"),
        Language::Javascript | Language::Typescript => {
            matches!(kind, "class_declaration" | "abstract_class_declaration" | "class")
        }
        Language::Go | Language::Python => false,
    }
}

/// The body to elide when `decl` is a function-like declaration with a block body.
fn function_body<'t>(lang: Language, decl: Node<'t>) -> Option<Node<'t>> {
    let kind = decl.kind();
    let is_function = match lang {
        Language::Java => matches!(kind, "method_declaration" | "constructor_declaration"),
        Language::Cpp => kind == "function_definition",
        Language::Go => matches!(kind, "function_declaration" | "method_declaration"),
        Language::Javascript | Language::Typescript => {
            if kind == "lexical_declaration" {
                return arrow_body(decl);
            }
            matches!(
                kind,
                "function_declaration" | "generator_function_declaration" | "method_definition"
            )
        }
        Language::Python => false,
    };
    if !is_function {
        return None;
    }
    decl.child_by_field_name("body")
}

/// `const f = (..) => { .. }` with a single declarator and a block body.
fn arrow_body(decl: Node<'_>) -> Option<Node<'_>> {
    if decl.named_child_count() != 1 {
        return None;
    }
    let declarator = decl.named_child(0)?;
    let value = declarator.child_by_field_name("value")?;
    if !matches!(value.kind(), "arrow_function" | "function_expression" | "function") {
        return None;
    }
    let body = value.child_by_field_name("body")?;
    (body.kind() == "statement_block").then_some(body)
}

fn is_verbatim(lang: Language, decl: Node<'_>) -> bool {
    let kind = decl.kind();
    match lang {
        Language::Java => kind == "method_declaration" && decl.child_by_field_name("body").is_none(),
        Language::Cpp => matches!(kind, "field_declaration" | "declaration") && declares_function(decl),
        Language::Go => kind == "type_declaration",
        Language::Typescript => matches!(
            kind,
            "interface_declaration"
                | "type_alias_declaration"
                | "method_signature"
                | "abstract_method_signature"
                | "function_signature"
        ),
        Language::Javascript | Language::Python => false,
    }
}

fn declares_function(decl: Node<'_>) -> bool {
    let mut cur = decl;
    while let Some(d) = cur.child_by_field_name("declarator") {
        if d.kind() == "function_declarator" {
            return true;
        }
        cur = d;
    }
    false
}
