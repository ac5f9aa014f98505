//! Syntactic, best-effort import resolution. Each language's import forms are
//! read from the syntax tree and matched against repository paths by module
//! name; anything that does not land on an indexed file is recorded as external.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use tracing::warn;
use tree_sitter::Node;

use super::{RepoIndex, SourceFile};
use crate::language::Language;
use crate::parsing::{parse, SyntaxTree};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportEdge {
    pub from: String,
    pub to: String,
    /// The import statement as written in `from`.
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalImport {
    pub from: String,
    pub module: String,
}

/// One import occurrence before resolution.
#[derive(Debug, Clone)]
struct ImportRef {
    statement: String,
    kind: RefKind,
}

#[derive(Debug, Clone)]
enum RefKind {
    /// Python: `level` leading dots, dotted module, and imported names.
    Python { level: usize, module: Vec<String>, names: Vec<String> },
    /// Java: dotted name, possibly ending in `*`.
    Java { segments: Vec<String>, wildcard: bool },
    Go { path: String },
    /// JS/TS module specifier.
    Script { specifier: String },
    /// C++ `#include`; `system` for `<...>`.
    Include { path: String, system: bool },
}

struct PathTable<'a> {
    paths: BTreeSet<&'a str>,
    dirs: BTreeMap<String, Vec<&'a str>>,
}

impl<'a> PathTable<'a> {
    fn new(files: &'a [SourceFile]) -> Self {
        let mut dirs: BTreeMap<String, Vec<&str>> = BTreeMap::new();
        for f in files {
            dirs.entry(parent_dir(&f.path).to_owned()).or_default().push(&f.path);
        }
        PathTable {
            paths: files.iter().map(|f| f.path.as_str()).collect(),
            dirs,
        }
    }

    fn exact(&self, candidate: &str) -> Option<&'a str> {
        self.paths.get(candidate).copied()
    }

    /// Paths equal to `tail` or ending in `/tail`, best match for `importer` first.
    fn by_suffix(&self, tail: &str, importer: &str) -> Option<&'a str> {
        let slash_tail = format!("/{tail}");
        self.paths
            .iter()
            .copied()
            .filter(|p| *p == tail || p.ends_with(&slash_tail))
            .min_by_key(|p| (std::cmp::Reverse(shared_prefix_len(p, importer)), p.len(), *p))
    }
}

fn parent_dir(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

fn shared_prefix_len(a: &str, b: &str) -> usize {
    a.split('/').zip(b.split('/')).take_while(|(x, y)| x == y).count()
}

/// Joins `rel` onto `base`, resolving `.` and `..`. Returns `None` when `..` escapes the root.
fn normalize_join(base: &str, rel: &str) -> Option<String> {
    let mut parts: Vec<&str> = base.split('/').filter(|s| !s.is_empty()).collect();
    for seg in rel.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s),
        }
    }
    Some(parts.join("/"))
}

/// Fills `import_edges` and `external_imports` for every file in the index.
pub fn build_import_edges(mut index: RepoIndex) -> RepoIndex {
    let table = PathTable::new(&index.files);
    let mut edges = Vec::new();
    let mut externals = Vec::new();
    for file in &index.files {
        let tree = match parse(file) {
            Ok(tree) => tree,
            Err(err) => {
                warn!("{}: no import edges: {err}", file.path);
                continue;
            }
        };
        let mut seen = BTreeSet::new();
        for import in collect_imports(&tree) {
            let targets = resolve(&import, &file.path, &table);
            if targets.is_empty() {
                externals.push(ExternalImport {
                    from: file.path.clone(),
                    module: import.kind.module_name(),
                });
            }
            for to in targets {
                if to != file.path && seen.insert(to) {
                    edges.push(ImportEdge {
                        from: file.path.clone(),
                        to: to.to_owned(),
                        statement: import.statement.clone(),
                    });
                }
            }
        }
    }
    index.import_edges = edges;
    index.external_imports = externals;
    index
}

impl RefKind {
    fn module_name(&self) -> String {
        match self {
            RefKind::Python { level, module, .. } => format!("{}{}", ".".repeat(*level), module.join(".")),
            RefKind::Java { segments, wildcard } => {
                let mut s = segments.join(".");
                if *wildcard {
                    s.push_str(".*");
                }
                s
            }
            RefKind::Go { path } => path.clone(),
            RefKind::Script { specifier } => specifier.clone(),
            RefKind::Include { path, .. } => path.clone(),
        }
    }
}

fn resolve<'a>(import: &ImportRef, importer: &str, table: &PathTable<'a>) -> Vec<&'a str> {
    match &import.kind {
        RefKind::Python { level, module, names } => resolve_python(*level, module, names, importer, table),
        RefKind::Java { segments, wildcard } => resolve_java(segments, *wildcard, importer, table),
        RefKind::Go { path } => resolve_go(path, table),
        RefKind::Script { specifier } => resolve_script(specifier, importer, table).into_iter().collect(),
        RefKind::Include { path, system } => {
            if *system {
                return Vec::new();
            }
            normalize_join(parent_dir(importer), path)
                .and_then(|c| table.exact(&c))
                .or_else(|| table.by_suffix(path.trim_start_matches("./"), importer))
                .into_iter()
                .collect()
        }
    }
}

fn python_module_file<'a>(
    base: Option<&str>,
    module: &[String],
    importer: &str,
    table: &PathTable<'a>,
) -> Option<&'a str> {
    let rel = module.join("/");
    let candidates = if rel.is_empty() {
        vec!["__init__.py".to_owned()]
    } else {
        vec![format!("{rel}.py"), format!("{rel}/__init__.py")]
    };
    for cand in candidates {
        let hit = match base {
            Some(base) => normalize_join(base, &cand).and_then(|p| table.exact(&p)),
            None => table.by_suffix(&cand, importer),
        };
        if hit.is_some() {
            return hit;
        }
    }
    None
}

fn resolve_python<'a>(
    level: usize,
    module: &[String],
    names: &[String],
    importer: &str,
    table: &PathTable<'a>,
) -> Vec<&'a str> {
    let base = if level > 0 {
        let mut dir = parent_dir(importer).to_owned();
        for _ in 1..level {
            dir = parent_dir(&dir).to_owned();
        }
        Some(dir)
    } else {
        None
    };
    let mut out = Vec::new();
    if let Some(hit) = python_module_file(base.as_deref(), module, importer, table) {
        out.push(hit);
    }
    for name in names {
        let mut sub = module.to_vec();
        sub.push(name.clone());
        if let Some(hit) = python_module_file(base.as_deref(), &sub, importer, table) {
            if !out.contains(&hit) {
                out.push(hit);
            }
        }
    }
    out
}

fn resolve_java<'a>(segments: &[String], wildcard: bool, importer: &str, table: &PathTable<'a>) -> Vec<&'a str> {
    if wildcard {
        let dir_tail = segments.join("/");
        let slash_tail = format!("/{dir_tail}");
        return table
            .dirs
            .iter()
            .filter(|(d, _)| **d == dir_tail || d.ends_with(&slash_tail))
            .flat_map(|(_, files)| files.iter().copied())
            .filter(|p| p.ends_with(".java"))
            .collect();
    }
    // Longest prefix naming a file wins; shorter prefixes cover static and nested-class imports.
    for end in (1..=segments.len()).rev() {
        let cand = format!("{}.java", segments[..end].join("/"));
        if let Some(hit) = table.by_suffix(&cand, importer) {
            return vec![hit];
        }
    }
    Vec::new()
}

fn resolve_go<'a>(path: &str, table: &PathTable<'a>) -> Vec<&'a str> {
    let best = table
        .dirs
        .iter()
        .filter(|(d, files)| {
            !d.is_empty()
                && (path == d.as_str() || path.ends_with(&format!("/{d}")))
                && files.iter().any(|f| f.ends_with(".go"))
        })
        .max_by_key(|(d, _)| d.len());
    match best {
        Some((_, files)) => files
            .iter()
            .copied()
            .filter(|f| f.ends_with(".go") && !f.ends_with("_test.go"))
            .collect(),
        None => Vec::new(),
    }
}

const SCRIPT_EXTENSIONS: [&str; 7] = [".ts", ".tsx", ".d.ts", ".js", ".jsx", ".mjs", ".cjs"];

fn resolve_script<'a>(specifier: &str, importer: &str, table: &PathTable<'a>) -> Option<&'a str> {
    if !(specifier.starts_with("./") || specifier.starts_with("../")) {
        return None;
    }
    let joined = normalize_join(parent_dir(importer), specifier)?;
    if let Some(hit) = table.exact(&joined) {
        return Some(hit);
    }
    let stem = joined
        .strip_suffix(".js")
        .filter(|s| !s.is_empty())
        .unwrap_or(&joined);
    for base in [stem.to_owned(), format!("{joined}/index")] {
        for ext in SCRIPT_EXTENSIONS {
            if let Some(hit) = table.exact(&format!("{base}{ext}")) {
                return Some(hit);
            }
        }
    }
    None
}

// ---- extraction ----

fn collect_imports(tree: &SyntaxTree) -> Vec<ImportRef> {
    let mut out = Vec::new();
    let src = tree.source();
    tree.for_each_node(|node| {
        if !node.is_named() || !tree.is_clean(node) {
            return;
        }
        let statement = || src[node.byte_range()].trim().to_owned();
        match (tree.language(), node.kind()) {
            (Language::Python, "import_statement") => {
                for module in python_import_names(node, src) {
                    out.push(ImportRef {
                        statement: statement(),
                        kind: RefKind::Python { level: 0, module, names: Vec::new() },
                    });
                }
            }
            (Language::Python, "import_from_statement") => {
                if let Some(kind) = python_from_import(node, src) {
                    out.push(ImportRef { statement: statement(), kind });
                }
            }
            (Language::Java, "import_declaration") => {
                let text = statement();
                let body = text
                    .trim_start_matches("import")
                    .trim()
                    .trim_start_matches("static ")
                    .trim()
                    .trim_end_matches(';')
                    .trim();
                let wildcard = body.ends_with(".*");
                let segments = body
                    .trim_end_matches(".*")
                    .split('.')
                    .map(|s| s.trim().to_owned())
                    .filter(|s| !s.is_empty())
                    .collect();
                out.push(ImportRef {
                    statement: text,
                    kind: RefKind::Java { segments, wildcard },
                });
            }
            (Language::Go, "import_spec") => {
                if let Some(path) = node.child_by_field_name("path") {
                    out.push(ImportRef {
                        statement: statement(),
                        kind: RefKind::Go {
                            path: unquote(&src[path.byte_range()]),
                        },
                    });
                }
            }
            (Language::Javascript | Language::Typescript, "import_statement" | "export_statement") => {
                if let Some(source) = node.child_by_field_name("source") {
                    out.push(ImportRef {
                        statement: statement(),
                        kind: RefKind::Script {
                            specifier: unquote(&src[source.byte_range()]),
                        },
                    });
                }
            }
            (Language::Javascript | Language::Typescript, "call_expression") => {
                let callee = node.child_by_field_name("function").map(|f| &src[f.byte_range()]);
                if matches!(callee, Some("require") | Some("import")) {
                    let arg = node
                        .child_by_field_name("arguments")
                        .and_then(|a| a.named_child(0))
                        .filter(|a| a.kind() == "string");
                    if let Some(arg) = arg {
                        out.push(ImportRef {
                            statement: statement(),
                            kind: RefKind::Script {
                                specifier: unquote(&src[arg.byte_range()]),
                            },
                        });
                    }
                }
            }
            (Language::Cpp, "preproc_include") => {
                if let Some(path) = node.child_by_field_name("path") {
                    let raw = &src[path.byte_range()];
                    let system = path.kind() == "system_lib_string";
                    out.push(ImportRef {
                        statement: statement(),
                        kind: RefKind::Include {
                            path: raw.trim_matches(|c| c == '"' || c == '<' || c == '>').to_owned(),
                            system,
                        },
                    });
                }
            }
            _ => {}
        }
    });
    out
}

fn unquote(s: &str) -> String {
    s.trim_matches(|c| c == '"' || c == '\'' || c == '`').to_owned()
}

fn dotted(node: Node<'_>, src: &str) -> Vec<String> {
    src[node.byte_range()]
        .split('.')
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect()
}

fn python_import_names(node: Node<'_>, src: &str) -> Vec<Vec<String>> {
    let mut cursor = node.walk();
    node.children_by_field_name("name", &mut cursor)
        .filter_map(|n| match n.kind() {
            "dotted_name" => Some(dotted(n, src)),
            "aliased_import" => n.child_by_field_name("name").map(|d| dotted(d, src)),
            _ => None,
        })
        .collect()
}

fn python_from_import(node: Node<'_>, src: &str) -> Option<RefKind> {
    let module_node = node.child_by_field_name("module_name")?;
    let (level, module) = if module_node.kind() == "relative_import" {
        let text = &src[module_node.byte_range()];
        let level = text.chars().take_while(|c| *c == '.').count();
        (level, dotted_str(&text[level..]))
    } else {
        (0, dotted(module_node, src))
    };
    let names = python_import_names(node, src)
        .into_iter()
        .filter(|n| n.len() == 1)
        .map(|mut n| n.remove(0))
        .collect();
    Some(RefKind::Python { level, module, names })
}

fn dotted_str(s: &str) -> Vec<String> {
    s.split('.').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(files: &[(&str, &str)]) -> RepoIndex {
        let mut files: Vec<SourceFile> = files
            .iter()
            .map(|(p, c)| {
                let lang = Language::from_path(std::path::Path::new(p)).unwrap();
                SourceFile::new("r", *p, lang, c.to_string())
            })
            .collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        build_import_edges(RepoIndex {
            repo_id: "r".into(),
            files,
            ..RepoIndex::default()
        })
    }

    fn edges(idx: &RepoIndex) -> Vec<(&str, &str)> {
        idx.import_edges.iter().map(|e| (e.from.as_str(), e.to.as_str())).collect()
    }

    #[test]
    fn python_from_import_resolves() {
        let idx = index(&[("a.py", "from b import f\n"), ("b.py", "def f():\n    pass\n")]);
        assert_eq!(edges(&idx), [("a.py", "b.py")]);
        assert_eq!(idx.import_edges[0].statement, "from b import f");
    }

    #[test]
    fn no_imports_no_edges() {
        let idx = index(&[("a.py", "x = 1\n"), ("b.py", "y = 2\n")]);
        assert!(idx.import_edges.is_empty());
        assert!(idx.external_imports.is_empty());
    }

    #[test]
    fn stdlib_import_is_external() {
        let idx = index(&[("a.py", "import os\n")]);
        assert!(idx.import_edges.is_empty());
        assert_eq!(idx.external_imports, [ExternalImport { from: "a.py".into(), module: "os".into() }]);
    }

    #[test]
    fn python_packages_and_relative_imports() {
        let idx = index(&[
            ("pkg/__init__.py", ""),
            ("pkg/core.py", "from .util import helper\nfrom . import models\n"),
            ("pkg/util.py", "def helper():\n    pass\n"),
            ("pkg/models.py", "class M:\n    pass\n"),
            ("app.py", "import pkg.core as c\nfrom pkg import util\n"),
        ]);
        let e = edges(&idx);
        assert!(e.contains(&("pkg/core.py", "pkg/util.py")));
        assert!(e.contains(&("pkg/core.py", "pkg/models.py")));
        assert!(e.contains(&("app.py", "pkg/core.py")));
        assert!(e.contains(&("app.py", "pkg/util.py")));
    }

    #[test]
    fn java_imports() {
        let idx = index(&[
            ("src/com/acme/App.java", "package com.acme;\nimport com.acme.util.Strings;\nimport static com.acme.util.Maths.square;\nimport java.util.List;\nimport com.acme.model.*;\nclass App {}\n"),
            ("src/com/acme/util/Strings.java", "package com.acme.util;\npublic class Strings {}\n"),
            ("src/com/acme/util/Maths.java", "package com.acme.util;\npublic class Maths {}\n"),
            ("src/com/acme/model/User.java", "package com.acme.model;\npublic class User {}\n"),
        ]);
        let e = edges(&idx);
        assert!(e.contains(&("src/com/acme/App.java", "src/com/acme/util/Strings.java")));
        assert!(e.contains(&("src/com/acme/App.java", "src/com/acme/util/Maths.java")));
        assert!(e.contains(&("src/com/acme/App.java", "src/com/acme/model/User.java")));
        assert_eq!(idx.external_imports.len(), 1);
        assert_eq!(idx.external_imports[0].module, "java.util.List");
    }

    #[test]
    fn go_package_imports() {
        let idx = index(&[
            ("main.go", "package main\n\nimport (\n\t\"fmt\"\n\t\"example.com/kv/store\"\n)\n"),
            ("store/store.go", "package store\n"),
            ("store/store_test.go", "package store\n"),
        ]);
        assert_eq!(edges(&idx), [("main.go", "store/store.go")]);
        assert_eq!(idx.external_imports[0].module, "fmt");
    }

    #[test]
    fn script_relative_imports() {
        let idx = index(&[
            ("src/app.ts", "import { a } from './lib/a';\nimport React from 'react';\nconst b = require('../b.js');\n"),
            ("src/lib/a.ts", "export const a = 1;\n"),
            ("b.js", "module.exports = {};\n"),
        ]);
        let e = edges(&idx);
        assert_eq!(e, [("src/app.ts", "src/lib/a.ts"), ("src/app.ts", "b.js")]);
        assert_eq!(idx.external_imports[0].module, "react");
    }

    #[test]
    fn cpp_includes() {
        let idx = index(&[
            ("src/main.cpp", "#include \"geo/point.h\"\n#include <vector>\nint main() {}\n"),
            ("include/geo/point.h", "struct P {};\n"),
        ]);
        assert_eq!(edges(&idx), [("src/main.cpp", "include/geo/point.h")]);
        assert_eq!(idx.external_imports[0].module, "vector");
    }

    #[test]
    fn every_edge_statement_is_literally_present() {
        let idx = index(&[
            ("a.py", "import b\nfrom c import d\n"),
            ("b.py", ""),
            ("c.py", ""),
        ]);
        for edge in &idx.import_edges {
            let from = idx.file(&edge.from).unwrap();
            assert!(from.content.contains(&edge.statement));
            assert!(idx.file(&edge.to).is_some());
        }
    }

    #[test]
    fn normalize() {
        assert_eq!(normalize_join("a/b", "../c").as_deref(), Some("a/c"));
        assert_eq!(normalize_join("", "./x.ts").as_deref(), Some("x.ts"));
        assert_eq!(normalize_join("", "../x"), None);
    }
}
