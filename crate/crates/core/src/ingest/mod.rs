//! Repository ingestion: walk a local tree, admit files in supported
//! languages, run the heuristic rule engine, and resolve import edges.

mod imports;
mod rules;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};
use walkdir::WalkDir;

pub use imports::{build_import_edges, ExternalImport, ImportEdge};
pub use rules::{apply_heuristic_filters, default_rules, FilterReport, FilterRule, RuleDrops, RuleSet};

use crate::context::Chunk;
use crate::error::{Error, Result};
use crate::language::Language;
use crate::text::sha256_hex;

/// One admitted source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub repo_id: String,
    /// Repo-relative, `/`-separated.
    pub path: String,
    pub language: Language,
    pub content: String,
    pub line_count: usize,
    pub byte_count: usize,
}

impl SourceFile {
    pub fn new(repo_id: impl Into<String>, path: impl Into<String>, language: Language, content: String) -> Self {
        SourceFile {
            repo_id: repo_id.into(),
            path: path.into(),
            language,
            line_count: content.lines().count(),
            byte_count: content.len(),
            content,
        }
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.content)
    }
}

/// A file removed by the rule engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFile {
    pub file: SourceFile,
    pub rule: String,
}

#[derive(Debug, Clone, Default)]
pub struct RepoIndex {
    pub repo_id: String,
    pub root: PathBuf,
    /// Retained files, sorted by path.
    pub files: Vec<SourceFile>,
    pub dropped: Vec<DroppedFile>,
    pub import_edges: Vec<ImportEdge>,
    pub external_imports: Vec<ExternalImport>,
    pub chunk_table: BTreeMap<String, Vec<Chunk>>,
}

impl RepoIndex {
    pub fn file(&self, path: &str) -> Option<&SourceFile> {
        self.files
            .binary_search_by(|f| f.path.as_str().cmp(path))
            .ok()
            .map(|i| &self.files[i])
    }

    /// Intra-repo import targets of `path`, in statement order, without repeats.
    pub fn import_targets(&self, path: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for edge in self.import_edges.iter().filter(|e| e.from == path) {
            if !out.contains(&edge.to.as_str()) {
                out.push(&edge.to);
            }
        }
        out
    }

    /// Rows for `repo_index.jsonl`: retained and dropped files, sorted by path.
    pub fn records(&self) -> Vec<IndexRecord> {
        let mut rows: Vec<IndexRecord> = self
            .files
            .iter()
            .map(|f| IndexRecord::from_file(f, None))
            .chain(self.dropped.iter().map(|d| IndexRecord::from_file(&d.file, Some(d.rule.clone()))))
            .collect();
        rows.sort_by(|a, b| a.path.cmp(&b.path));
        rows
    }
}

/// One line of `repo_index.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub repo_id: String,
    pub path: String,
    pub language: Language,
    pub sha256: String,
    pub line_count: usize,
    pub byte_count: usize,
    pub dropped: bool,
    pub drop_rule: Option<String>,
}

impl IndexRecord {
    fn from_file(file: &SourceFile, drop_rule: Option<String>) -> Self {
        IndexRecord {
            repo_id: file.repo_id.clone(),
            path: file.path.clone(),
            language: file.language,
            sha256: file.sha256(),
            line_count: file.line_count,
            byte_count: file.byte_count,
            dropped: drop_rule.is_some(),
            drop_rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Repository roots to ingest.
    pub repos: Vec<PathBuf>,
    /// Overrides the repo id for single-repo runs; otherwise the directory name is used.
    pub repo_id: Option<String>,
    /// Extra or overriding extension → language entries (extension without the dot).
    pub extensions: BTreeMap<String, Language>,
    /// Hard ingest limit; larger files never enter the index.
    pub max_file_bytes: u64,
    pub skip_dirs: Vec<String>,
    /// Ordered rule list; `None` selects the default rule set.
    pub rules: Option<Vec<FilterRule>>,
    /// TOML or JSON file holding `rules = [...]`; takes precedence over `rules`.
    pub rules_file: Option<PathBuf>,
    /// Pass-through metadata only.
    pub min_stars: Option<u32>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            repos: Vec::new(),
            repo_id: None,
            extensions: BTreeMap::new(),
            max_file_bytes: 1 << 20,
            skip_dirs: [".git", ".hg", ".svn", "node_modules", "__pycache__", ".venv", "venv"]
                .into_iter()
                .map(String::from)
                .collect(),
            rules: None,
            rules_file: None,
            min_stars: None,
        }
    }
}

#[derive(Deserialize)]
struct RulesFile {
    rules: Vec<FilterRule>,
}

impl IngestConfig {
    pub fn language_for(&self, path: &Path) -> Option<Language> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        if let Some(lang) = self.extensions.get(&ext) {
            return Some(*lang);
        }
        Language::from_path(path)
    }

    pub fn rule_set(&self) -> Result<RuleSet> {
        let rules = match (&self.rules_file, &self.rules) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let parsed: RulesFile = if path.extension().is_some_and(|e| e == "json") {
                    serde_json::from_str(&text)?
                } else {
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                };
                parsed.rules
            }
            (None, Some(rules)) => rules.clone(),
            (None, None) => default_rules(),
        };
        RuleSet::new(rules)
    }
}

/// `config.repo_id` when set, else the root directory's name.
pub fn repo_id_for(root: &Path, config: &IngestConfig) -> String {
    config.repo_id.clone().unwrap_or_else(|| {
        root.canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "repo".to_owned())
    })
}

/// Walks `root` and returns every admitted file: supported extension, within
/// the byte limit, not binary, valid UTF-8. Heuristic rules are not applied here.
pub fn scan_repo(root: &Path, config: &IngestConfig) -> Result<RepoIndex> {
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::InvalidInput(format!("{} is not a directory", root.display())));
    }
    fs::read_dir(root).map_err(|e| Error::io(root, e))?;

    let repo_id = repo_id_for(root, config);

    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            e.depth() == 0
                || !(e.file_type().is_dir()
                    && config.skip_dirs.iter().any(|d| e.file_name().to_str() == Some(d.as_str())))
        });

    let mut files = Vec::new();
    for entry in walker {
        let entry = match entry {
            Ok(entry) => entry,
            Err(err) => {
                warn!("skipping unreadable entry: {err}");
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let Some(language) = config.language_for(path) else {
            continue;
        };
        let rel = relative_path(root, path);
        match read_admissible(path, config.max_file_bytes) {
            Ok(Some(content)) => files.push(SourceFile::new(repo_id.clone(), rel, language, content)),
            Ok(None) => debug!("{rel}: rejected at ingest"),
            Err(err) => warn!("{rel}: skipped: {err}"),
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));

    Ok(RepoIndex {
        repo_id,
        root: root.to_path_buf(),
        files,
        ..RepoIndex::default()
    })
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn read_admissible(path: &Path, max_bytes: u64) -> std::io::Result<Option<String>> {
    let size = fs::metadata(path)?.len();
    if size > max_bytes {
        return Ok(None);
    }
    let bytes = fs::read(path)?;
    if bytes.iter().take(8192).any(|&b| b == 0) {
        return Ok(None);
    }
    Ok(String::from_utf8(bytes).ok())
}

/// Scan, filter, and resolve imports in one call.
pub fn ingest_repo(root: &Path, config: &IngestConfig) -> Result<(RepoIndex, FilterReport)> {
    let rules = config.rule_set()?;
    let mut index = scan_repo(root, config)?;
    let files = std::mem::take(&mut index.files);
    let (retained, dropped, report) = rules::partition(files, &rules);
    index.files = retained;
    index.dropped = dropped;
    let index = build_import_edges(index);
    Ok((index, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, content: &[u8]) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    #[test]
    fn unsupported_extensions_are_excluded() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.py", b"x = 1\n");
        write(dir.path(), "b.java", b"class B {}\n");
        write(dir.path(), "c.png", b"\x89PNG\r\n");
        let index = scan_repo(dir.path(), &IngestConfig::default()).unwrap();
        let paths: Vec<&str> = index.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["a.py", "b.java"]);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let index = scan_repo(dir.path(), &IngestConfig::default()).unwrap();
        assert!(index.files.is_empty());
    }

    #[test]
    fn two_line_go_file() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "main.go", b"package main\nfunc main() {}\n");
        let index = scan_repo(dir.path(), &IngestConfig::default()).unwrap();
        assert_eq!(index.files.len(), 1);
        assert_eq!(index.files[0].line_count, 2);
        assert_eq!(index.files[0].byte_count, 28);
        assert_eq!(index.files[0].language, Language::Go);
    }

    #[test]
    fn binary_oversize_and_invalid_utf8_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "nul.py", b"x = 1\0\n");
        write(dir.path(), "bad.py", b"x = '\xff\xfe'\n");
        write(dir.path(), "big.py", &vec![b'#'; 2048]);
        write(dir.path(), "ok.py", b"y = 2\n");
        let cfg = IngestConfig {
            max_file_bytes: 1024,
            ..IngestConfig::default()
        };
        let index = scan_repo(dir.path(), &cfg).unwrap();
        let paths: Vec<&str> = index.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["ok.py"]);
    }

    #[test]
    fn skip_dirs_and_nested_paths() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "node_modules/x/index.js", b"module.exports = 1;\n");
        write(dir.path(), "src/app/main.ts", b"export const a = 1;\n");
        let index = scan_repo(dir.path(), &IngestConfig::default()).unwrap();
        let paths: Vec<&str> = index.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["src/app/main.ts"]);
    }

    #[test]
    fn missing_root_is_fatal() {
        let err = scan_repo(Path::new("/definitely/not/here"), &IngestConfig::default()).unwrap_err();
        assert_eq!(err.kind(), "io");
    }

    #[test]
    fn content_and_size_are_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let body = "def f():\r\n    return 'é'\r\n";
        write(dir.path(), "m.py", body.as_bytes());
        let index = scan_repo(dir.path(), &IngestConfig::default()).unwrap();
        assert_eq!(index.files[0].content, body);
        assert_eq!(index.files[0].byte_count as u64, fs::metadata(dir.path().join("m.py")).unwrap().len());
    }

    #[test]
    fn extension_overrides() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "tool.pyi", b"def f() -> int: ...\n");
        let mut cfg = IngestConfig::default();
        cfg.extensions.insert("pyi".into(), Language::Python);
        let index = scan_repo(dir.path(), &cfg).unwrap();
        assert_eq!(index.files.len(), 1);
    }
}
