//! Cross-file context: BM25 retrieval over blank-line chunks of other files,
//! and declaration skeletons of the files a sample's file imports.

mod bm25;
mod cache;
mod chunk;
mod tokenize;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::debug;

pub use bm25::{bm25_score, Bm25Index, Bm25Stats};
pub use cache::{read_chunk_cache, write_chunk_cache, CHUNK_CACHE_VERSION};
pub use chunk::{chunk_file, Chunk, MAX_CHUNK_LINES};
pub use tokenize::code_terms;

use crate::ingest::RepoIndex;
use crate::parsing::{extract_skeleton, parse};
use crate::synth::FimSample;
use crate::text::TokenCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Bm25,
    Dependency,
}

/// One cross-file fragment attached to a sample or eval case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSnippet {
    #[serde(default)]
    pub source_path: String,
    #[serde(default = "default_channel")]
    pub channel: Channel,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default)]
    pub token_cost: usize,
}

fn default_channel() -> Channel {
    Channel::Bm25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    pub k1: f64,
    pub b: f64,
    /// Prefix/suffix lines adjacent to the target that join the query.
    pub query_lines: usize,
    pub bm25_budget: usize,
    pub dependency_budget: usize,
    /// Most BM25 snippets per sample.
    pub k_max: usize,
    pub enable_bm25: bool,
    pub enable_dependencies: bool,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            k1: 1.2,
            b: 0.75,
            query_lines: 5,
            bm25_budget: 2048,
            dependency_budget: 2048,
            k_max: 5,
            enable_bm25: true,
            enable_dependencies: true,
        }
    }
}

/// Query terms: the target plus the last `m` prefix lines and first `m` suffix lines.
pub fn build_query(sample: &FimSample, m: usize) -> Vec<String> {
    let prefix_lines: Vec<&str> = sample.prefix.lines().collect();
    let tail = &prefix_lines[prefix_lines.len().saturating_sub(m)..];
    let head: Vec<&str> = sample.suffix.lines().take(m).collect();
    let mut text = tail.join("\n");
    text.push('\n');
    text.push_str(&sample.middle);
    text.push('\n');
    text.push_str(&head.join("\n"));
    code_terms(&text)
}

/// Highest-scoring chunks from other files, taken greedily while they fit `budget`.
/// Ties break by path, then start line.
pub fn retrieve_similar(
    sample: &FimSample,
    bm25: &Bm25Index,
    config: &ContextConfig,
    counter: &dyn TokenCounter,
) -> Vec<ContextSnippet> {
    let query = build_query(sample, config.query_lines);
    let mut candidates: Vec<(f64, &Chunk)> = bm25
        .score_all(&query)
        .into_iter()
        .map(|(i, s)| (s, &bm25.chunks()[i]))
        .filter(|(_, c)| c.path != sample.path)
        .collect();
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.path.cmp(&b.1.path))
            .then_with(|| a.1.start_line.cmp(&b.1.start_line))
    });
    greedy_take(
        candidates.into_iter().map(|(score, chunk)| ContextSnippet {
            source_path: chunk.path.clone(),
            channel: Channel::Bm25,
            token_cost: counter.count(&chunk.text),
            text: chunk.text.clone(),
            score: Some(score),
        }),
        config.bm25_budget,
        config.k_max,
    )
}

/// Takes snippets in order until the next one would overflow `budget` or `k_max` is reached.
pub fn greedy_take(
    snippets: impl IntoIterator<Item = ContextSnippet>,
    budget: usize,
    k_max: usize,
) -> Vec<ContextSnippet> {
    let mut out = Vec::new();
    let mut used = 0;
    for snippet in snippets {
        if out.len() >= k_max || used + snippet.token_cost > budget {
            break;
        }
        used += snippet.token_cost;
        out.push(snippet);
    }
    out
}

/// Skeletons of the sample file's intra-repo imports, in import order, cut at `budget`.
pub fn retrieve_dependencies(
    sample: &FimSample,
    index: &RepoIndex,
    skeletons: &BTreeMap<String, String>,
    budget: usize,
    counter: &dyn TokenCounter,
) -> Vec<ContextSnippet> {
    let mut out = Vec::new();
    let mut used = 0;
    let mut overflowed = false;
    for target in index.import_targets(&sample.path) {
        let Some(text) = skeletons.get(target).filter(|s| !s.is_empty()) else {
            continue;
        };
        let cost = counter.count(text);
        if overflowed || used + cost > budget {
            overflowed = true;
            debug!("{}: dependency {target} dropped, budget {budget} exhausted", sample.path);
            continue;
        }
        used += cost;
        out.push(ContextSnippet {
            source_path: target.to_owned(),
            channel: Channel::Dependency,
            text: text.clone(),
            score: None,
            token_cost: cost,
        });
    }
    out
}

impl RepoIndex {
    /// Chunks every retained file into `chunk_table`.
    pub fn build_chunk_table(&mut self) {
        self.chunk_table = self
            .files
            .par_iter()
            .map(|f| (f.path.clone(), chunk_file(f)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
    }
}

/// Per-repository retrieval state.
pub struct ContextBuilder<'a> {
    index: &'a RepoIndex,
    bm25: Bm25Index,
    skeletons: BTreeMap<String, String>,
    config: ContextConfig,
}

impl<'a> ContextBuilder<'a> {
    pub fn new(index: &'a RepoIndex, config: ContextConfig) -> Self {
        let chunks: Vec<Chunk> = if index.chunk_table.is_empty() {
            index.files.iter().flat_map(chunk_file).collect()
        } else {
            index.chunk_table.values().flatten().cloned().collect()
        };
        let bm25 = Bm25Index::new(chunks, config.k1, config.b);
        let targets: Vec<&str> = {
            let mut t: Vec<&str> = index.import_edges.iter().map(|e| e.to.as_str()).collect();
            t.sort_unstable();
            t.dedup();
            t
        };
        let skeletons = targets
            .par_iter()
            .filter_map(|path| {
                let file = index.file(path)?;
                let tree = parse(file).ok()?;
                Some((path.to_string(), extract_skeleton(&tree)))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        ContextBuilder {
            index,
            bm25,
            skeletons,
            config,
        }
    }

    pub fn bm25(&self) -> &Bm25Index {
        &self.bm25
    }

    pub fn skeletons(&self) -> &BTreeMap<String, String> {
        &self.skeletons
    }

    /// Dependency snippets first (import order), then BM25 snippets (descending score).
    pub fn snippets_for(&self, sample: &FimSample, counter: &dyn TokenCounter) -> Vec<ContextSnippet> {
        let mut out = Vec::new();
        if self.config.enable_dependencies {
            out.extend(retrieve_dependencies(
                sample,
                self.index,
                &self.skeletons,
                self.config.dependency_budget,
                counter,
            ));
        }
        if self.config.enable_bm25 {
            out.extend(retrieve_similar(sample, &self.bm25, &self.config, counter));
        }
        out
    }
}
