//! Stage orchestration over a run directory: config loading, manifests,
//! no-op reruns, locking and artifact layout.

pub mod io;
mod manifest;
mod report;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{info, warn};

pub use manifest::{manifest_path, Digest, Manifest, RunLock, TOOL_VERSION};
pub use report::render_report;

use self::io::{read_jsonl, sha256_file, to_json_pretty, to_jsonl, write_atomic};
use crate::context::{read_chunk_cache, write_chunk_cache, Channel, ContextBuilder, ContextConfig};
use crate::curriculum::{build_curriculum, CurriculumConfig};
use crate::endpoint::{Generator, HttpEndpoint, Scorer};
use crate::error::{Error, Result};
use crate::eval::{resolve_profile, run_eval, EvalCase, EvalConfig};
use crate::ingest::{ingest_repo, repo_id_for, ExternalImport, ImportEdge, IndexRecord, IngestConfig, RepoIndex, SourceFile};
use crate::parsing::GRAMMAR_VERSIONS;
use crate::preference::{make_repetition_pairs, rejection_sampling, validate_pairs, PairKind, PairsConfig};
use crate::quality::{filter_scored, score_corpus, FilterConfig, QualityReport};
use crate::strategy::Strategy;
use crate::synth::{function_samples, synthesize_files, FimSample, StrategyWeights, SynthConfig};
use crate::text::{sha256_hex, LexicalTokenCounter};

pub const REPO_INDEX: &str = "repo_index.jsonl";
pub const IMPORT_EDGES: &str = "import_edges.jsonl";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const SAMPLES: &str = "samples.jsonl";
pub const SAMPLES_CONTEXT: &str = "samples.context.jsonl";
pub const CHUNK_CACHE: &str = "chunks.idx";
pub const SCORES: &str = "scores.jsonl";
pub const FILTERED: &str = "filtered.jsonl";
pub const FILTER_REPORT: &str = "filter_report.json";
pub const PAIRS: &str = "pairs.jsonl";
pub const PAIRS_REPORT: &str = "pairs_report.json";
pub const CURRICULUM: &str = "curriculum.jsonl";
pub const EVAL_RECORDS: &str = "eval_records.jsonl";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const EVAL_REPORT_MD: &str = "eval_report.md";
pub const REPORT: &str = "report.md";

/// Stages in dependency order.
pub const STAGES: [&str; 8] = ["ingest", "synthesize", "context", "filter", "pairs", "curriculum", "eval", "report"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed for every random draw.
    pub seed: u64,
    pub run_dir: Option<PathBuf>,
    /// External response cache; defaults to `<run_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub ingest: IngestConfig,
    pub synth: SynthConfig,
    pub weights: StrategyWeights,
    pub context: ContextConfig,
    pub filter: FilterConfig,
    pub pairs: PairsConfig,
    pub curriculum: CurriculumConfig,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    /// Reads TOML (or JSON for `.json`) and resolves relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.ingest.repos.iter_mut().for_each(fix);
        self.ingest.rules_file.iter_mut().for_each(fix);
        self.run_dir.iter_mut().for_each(fix);
        self.cache_dir.iter_mut().for_each(fix);
        self.eval.benchmark.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.pairs.validate()?;
        self.filter.infill.validate()?;
        self.filter.completion.validate()?;
        Ok(())
    }
}

fn config_hash(value: Value) -> String {
    sha256_hex(value.to_string())
}

/// What one stage invocation did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageOutcome {
    pub stage: String,
    /// True when the manifest showed the outputs already current.
    pub skipped: bool,
    pub outputs: Vec<String>,
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EdgeRow {
    repo_id: String,
    from: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    statement: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    external_module: Option<String>,
}

/// A configured pipeline bound to one run directory. Stage methods do not
/// lock; callers hold a [`RunLock`] from [`Pipeline::lock`] around them.
pub struct Pipeline {
    config: PipelineConfig,
    run_dir: PathBuf,
    cache_dir: PathBuf,
    jobs: usize,
    force: bool,
    scorer: Option<Arc<dyn Scorer>>,
    generator: Option<Arc<dyn Generator>>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let run_dir = config.run_dir.clone().unwrap_or_else(|| PathBuf::from("run"));
        let cache_dir = config.cache_dir.clone().unwrap_or_else(|| run_dir.join("cache"));
        Ok(Pipeline {
            config,
            run_dir,
            cache_dir,
            jobs: std::thread::available_parallelism().map_or(4, |n| n.get()),
            force: false,
            scorer: None,
            generator: None,
        })
    }

    pub fn with_run_dir(mut self, run_dir: PathBuf) -> Self {
        if self.config.cache_dir.is_none() {
            self.cache_dir = run_dir.join("cache");
        }
        self.run_dir = run_dir;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.seed = seed;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn with_force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn with_scorer(mut self, scorer: Arc<dyn Scorer>) -> Self {
        self.scorer = Some(scorer);
        self
    }

    pub fn with_generator(mut self, generator: Arc<dyn Generator>) -> Self {
        self.generator = Some(generator);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }

    pub fn lock(&self) -> Result<RunLock> {
        RunLock::acquire(&self.run_dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.run_dir.join(name)
    }

    fn digest(&self, name: &str) -> Result<Digest> {
        Ok(Digest {
            path: name.to_string(),
            sha256: sha256_file(&self.path(name))?,
        })
    }

    fn require(&self, name: &str, hint: &str) -> Result<()> {
        if self.path(name).exists() {
            Ok(())
        } else {
            Err(Error::MissingStageInput(format!("{name} not found in {} ({hint})", self.run_dir.display())))
        }
    }

    fn first_existing(&self, names: &[&'static str], stage: &str) -> Result<&'static str> {
        names.iter().copied().find(|n| self.path(n).exists()).ok_or_else(|| {
            Error::MissingStageInput(format!("{stage} needs one of {} in {}", names.join(", "), self.run_dir.display()))
        })
    }

    fn expected(&self, stage: &str, inputs: Vec<Digest>, hash: String) -> Manifest {
        Manifest {
            stage: stage.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config_hash: hash,
            seed: self.config.seed,
            inputs,
            outputs: Vec::new(),
        }
    }

    fn current(&self, primary: &str, expected: &Manifest) -> Option<StageOutcome> {
        if self.force {
            return None;
        }
        let m = Manifest::load(&self.path(primary))?;
        m.is_current(expected, &self.run_dir).then(|| {
            info!("{}: up to date", expected.stage);
            StageOutcome {
                stage: expected.stage.clone(),
                skipped: true,
                outputs: m.outputs.iter().map(|d| d.path.clone()).collect(),
                summary: Value::Null,
            }
        })
    }

    fn commit(&self, mut manifest: Manifest, outputs: Vec<(&str, Vec<u8>)>, summary: Value) -> Result<StageOutcome> {
        for (name, bytes) in &outputs {
            write_atomic(&self.path(name), bytes)?;
            manifest.outputs.push(Digest {
                path: name.to_string(),
                sha256: sha256_hex(bytes),
            });
        }
        manifest.store(&self.path(outputs[0].0))?;
        Ok(StageOutcome {
            stage: manifest.stage.clone(),
            skipped: false,
            outputs: outputs.iter().map(|(n, _)| n.to_string()).collect(),
            summary,
        })
    }

    fn repo_roots(&self) -> Result<BTreeMap<String, PathBuf>> {
        let cfg = &self.config.ingest;
        if cfg.repos.is_empty() {
            return Err(Error::Config("no repositories configured (ingest.repos)".into()));
        }
        if cfg.repo_id.is_some() && cfg.repos.len() > 1 {
            return Err(Error::Config("ingest.repo_id only applies to a single repository".into()));
        }
        let mut roots = BTreeMap::new();
        for root in &cfg.repos {
            let id = repo_id_for(root, cfg);
            if roots.insert(id.clone(), root.clone()).is_some() {
                return Err(Error::Config(format!("two repositories share the id `{id}`")));
            }
        }
        Ok(roots)
    }

    pub fn ingest(&self) -> Result<StageOutcome> {
        let roots = self.repo_roots()?;
        let mut records = Vec::new();
        let mut edges = Vec::new();
        let mut reports = Vec::new();
        let mut inputs = Vec::new();
        for (id, root) in &roots {
            let (index, report) = ingest_repo(root, &self.config.ingest)?;
            let rows = index.records();
            inputs.push(Digest {
                path: id.clone(),
                sha256: sha256_hex(to_jsonl(&rows)?),
            });
            edges.extend(index.import_edges.iter().map(|e: &ImportEdge| EdgeRow {
                repo_id: id.clone(),
                from: e.from.clone(),
                to: Some(e.to.clone()),
                statement: Some(e.statement.clone()),
                external_module: None,
            }));
            edges.extend(index.external_imports.iter().map(|e: &ExternalImport| EdgeRow {
                repo_id: id.clone(),
                from: e.from.clone(),
                to: None,
                statement: None,
                external_module: Some(e.module.clone()),
            }));
            reports.push(json!({ "repo_id": id, "report": report }));
            records.extend(rows);
        }
        let expected = self.expected("ingest", inputs, config_hash(json!(self.config.ingest)));
        if let Some(done) = self.current(REPO_INDEX, &expected) {
            return Ok(done);
        }
        let retained = records.iter().filter(|r| !r.dropped).count();
        let summary = json!({
            "repos": roots.len(),
            "files": records.len(),
            "retained": retained,
            "import_edges": edges.iter().filter(|e| e.to.is_some()).count(),
        });
        self.commit(
            expected,
            vec![
                (REPO_INDEX, to_jsonl(&records)?),
                (IMPORT_EDGES, to_jsonl(&edges)?),
                (INGEST_REPORT, to_json_pretty(&reports)?),
            ],
            summary,
        )
    }

    /// Rebuilds repository indexes from the ingest artifacts, re-reading each
    /// retained file and checking it against its recorded hash.
    pub fn load_indexes(&self) -> Result<Vec<RepoIndex>> {
        self.require(REPO_INDEX, "run `ingest` first")?;
        let roots = self.repo_roots()?;
        let records: Vec<IndexRecord> = read_jsonl(&self.path(REPO_INDEX))?;
        let edges: Vec<EdgeRow> = if self.path(IMPORT_EDGES).exists() {
            read_jsonl(&self.path(IMPORT_EDGES))?
        } else {
            Vec::new()
        };
        let mut by_repo: BTreeMap<String, RepoIndex> = BTreeMap::new();
        for rec in records.into_iter().filter(|r| !r.dropped) {
            let root = roots.get(&rec.repo_id).ok_or_else(|| {
                Error::StaleInput(format!("repository `{}` is no longer configured; rerun ingest", rec.repo_id))
            })?;
            let path = root.join(&rec.path);
            let content = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let file = SourceFile::new(rec.repo_id.clone(), rec.path.clone(), rec.language, content);
            if file.sha256() != rec.sha256 {
                return Err(Error::StaleInput(format!("{} changed since ingest; rerun ingest", path.display())));
            }
            let index = by_repo.entry(rec.repo_id.clone()).or_insert_with(|| RepoIndex {
                repo_id: rec.repo_id.clone(),
                root: root.clone(),
                ..RepoIndex::default()
            });
            index.files.push(file);
        }
        for e in edges {
            let Some(index) = by_repo.get_mut(&e.repo_id) else { continue };
            match (e.to, e.external_module) {
                (Some(to), _) => index.import_edges.push(ImportEdge {
                    from: e.from,
                    to,
                    statement: e.statement.unwrap_or_default(),
                }),
                (None, Some(module)) => index.external_imports.push(ExternalImport { from: e.from, module }),
                (None, None) => {}
            }
        }
        let mut out: Vec<RepoIndex> = by_repo.into_values().collect();
        for index in &mut out {
            index.files.sort_by(|a, b| a.path.cmp(&b.path));
        }
        Ok(out)
    }

    pub fn synthesize(&self) -> Result<StageOutcome> {
        self.require(REPO_INDEX, "run `ingest` first")?;
        let expected = self.expected(
            "synthesize",
            vec![self.digest(REPO_INDEX)?],
            config_hash(json!({ "synth": self.config.synth, "weights": self.config.weights })),
        );
        if let Some(done) = self.current(SAMPLES, &expected) {
            return Ok(done);
        }
        let indexes = self.load_indexes()?;
        let files: Vec<&SourceFile> = indexes.iter().flat_map(|i| i.files.iter()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut samples = synthesize_files(&files, &self.config.weights, self.config.synth.budget, &mut rng)?;
        if self.config.synth.function_samples {
            let mut seen: HashSet<String> = samples.iter().map(|s| s.id.clone()).collect();
            samples.extend(function_samples(&files).into_iter().filter(|s| seen.insert(s.id.clone())));
        }
        let mut by_strategy: BTreeMap<Strategy, usize> = BTreeMap::new();
        for s in &samples {
            *by_strategy.entry(s.strategy).or_default() += 1;
        }
        let summary = json!({ "samples": samples.len(), "by_strategy": by_strategy });
        self.commit(expected, vec![(SAMPLES, to_jsonl(&samples)?)], summary)
    }

    fn chunk_tables(&self, indexes: &mut [RepoIndex]) -> Result<()> {
        let key = sha256_hex(
            json!({
                "context": self.config.context,
                "grammars": GRAMMAR_VERSIONS,
                "tool": TOOL_VERSION,
                "index": sha256_file(&self.path(REPO_INDEX))?,
            })
            .to_string(),
        );
        let cache = self.path(CHUNK_CACHE);
        if let Some(mut table) = read_chunk_cache(&cache, &key) {
            for index in indexes.iter_mut() {
                index.chunk_table = table.remove(&index.repo_id).unwrap_or_default();
            }
            return Ok(());
        }
        let mut table = BTreeMap::new();
        for index in indexes.iter_mut() {
            index.build_chunk_table();
            table.insert(index.repo_id.clone(), index.chunk_table.clone());
        }
        write_chunk_cache(&cache, &key, &table)
    }

    pub fn context(&self) -> Result<StageOutcome> {
        self.require(SAMPLES, "run `synthesize` first")?;
        let expected = self.expected(
            "context",
            vec![self.digest(SAMPLES)?, self.digest(REPO_INDEX)?, self.digest(IMPORT_EDGES)?],
            config_hash(json!(self.config.context)),
        );
        if let Some(done) = self.current(SAMPLES_CONTEXT, &expected) {
            return Ok(done);
        }
        let mut indexes = self.load_indexes()?;
        self.chunk_tables(&mut indexes)?;
        let builders: HashMap<&str, ContextBuilder> = indexes
            .iter()
            .map(|i| (i.repo_id.as_str(), ContextBuilder::new(i, self.config.context.clone())))
            .collect();
        let samples: Vec<FimSample> = read_jsonl(&self.path(SAMPLES))?;
        let samples: Vec<FimSample> = samples
            .into_par_iter()
            .map(|mut s| {
                match builders.get(s.repo_id.as_str()) {
                    Some(b) => s.context = b.snippets_for(&s, &LexicalTokenCounter),
                    None => warn!("sample {}: repository {} not indexed", s.id, s.repo_id),
                }
                s
            })
            .collect();
        let count = |ch: Channel| samples.iter().filter(|s| s.context.iter().any(|c| c.channel == ch)).count();
        let summary = json!({
            "samples": samples.len(),
            "with_bm25": count(Channel::Bm25),
            "with_dependency": count(Channel::Dependency),
        });
        self.commit(expected, vec![(SAMPLES_CONTEXT, to_jsonl(&samples)?)], summary)
    }

    fn scorer(&self) -> Result<Arc<dyn Scorer>> {
        match &self.scorer {
            Some(s) => Ok(s.clone()),
            None => Ok(Arc::new(HttpEndpoint::scorer_from_env(Some(self.cache_dir.clone()))?)),
        }
    }

    fn generator(&self) -> Result<Arc<dyn Generator>> {
        match &self.generator {
            Some(g) => Ok(g.clone()),
            None => Ok(Arc::new(HttpEndpoint::generator_from_env(Some(self.cache_dir.clone()))?)),
        }
    }

    pub fn filter(&self) -> Result<StageOutcome> {
        let input = self.first_existing(&[SAMPLES_CONTEXT, SAMPLES], "filter")?;
        let cfg = &self.config.filter;
        let expected = self.expected(
            "filter",
            vec![self.digest(input)?],
            config_hash(json!({ "filter": cfg, "profiles": self.config.eval.profiles })),
        );
        if let Some(done) = self.current(FILTERED, &expected) {
            return Ok(done);
        }
        let samples: Vec<FimSample> = read_jsonl(&self.path(input))?;
        let profile = resolve_profile(&cfg.profile, &self.config.eval.profiles)?;
        let scorer = self.scorer()?;
        let outcome = score_corpus(&samples, scorer.as_ref(), cfg, &profile, &LexicalTokenCounter, self.jobs)?;
        let (kept, pools) = filter_scored(&samples, &outcome.scored, cfg)?;
        let keep: HashSet<&str> = kept.iter().map(String::as_str).collect();
        let filtered: Vec<&FimSample> = samples.iter().filter(|s| keep.contains(s.id.as_str())).collect();
        let report = QualityReport {
            pools,
            failures: outcome.failures,
        };
        let summary = json!({
            "input": samples.len(),
            "scored": outcome.scored.len(),
            "kept": filtered.len(),
            "failures": report.failures.len(),
        });
        self.commit(
            expected,
            vec![
                (FILTERED, to_jsonl(&filtered)?),
                (SCORES, to_jsonl(&outcome.scored)?),
                (FILTER_REPORT, to_json_pretty(&report)?),
            ],
            summary,
        )
    }

    pub fn pairs(&self) -> Result<StageOutcome> {
        let input = self.first_existing(&[FILTERED, SAMPLES_CONTEXT, SAMPLES], "pairs")?;
        let cfg = &self.config.pairs;
        let expected = self.expected(
            "pairs",
            vec![self.digest(input)?],
            config_hash(json!({ "pairs": cfg, "profiles": self.config.eval.profiles })),
        );
        if let Some(done) = self.current(PAIRS, &expected) {
            return Ok(done);
        }
        let samples: Vec<FimSample> = read_jsonl(&self.path(input))?;
        let profile = resolve_profile(&cfg.profile, &self.config.eval.profiles)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(1);

        let (mut pairs, pool, failures) = if cfg.rejection_sampling {
            let generator = self.generator()?;
            let outcome = rejection_sampling(&samples, generator.as_ref(), cfg, &profile, &LexicalTokenCounter, self.jobs)?;
            let sampled: HashSet<&str> = outcome.sampled.iter().map(String::as_str).collect();
            let pool: Vec<&FimSample> = samples.iter().filter(|s| sampled.contains(s.id.as_str())).collect();
            (outcome.pairs, pool, outcome.failures)
        } else {
            (Vec::new(), samples.iter().collect(), Vec::new())
        };
        pairs.extend(make_repetition_pairs(&pool, &mut rng, cfg.suffix_frac, cfg.prefix_frac, &profile.name));
        let violations = validate_pairs(&pairs);
        if let Some(v) = violations.first() {
            return Err(Error::InvalidInput(format!(
                "{} emitted pair(s) violate their invariant; first {}: {}",
                violations.len(),
                v.id,
                v.message
            )));
        }
        let mut by_kind: BTreeMap<PairKind, usize> = BTreeMap::new();
        for p in &pairs {
            *by_kind.entry(p.pair_kind).or_default() += 1;
        }
        let report = json!({
            "input_samples": samples.len(),
            "rejection_sampled": pool.len(),
            "suffix_eligible": pool.iter().filter(|s| crate::preference::suffix_repetition_target(s).is_some()).count(),
            "prefix_eligible": pool.iter().filter(|s| crate::preference::prefix_repetition_target(s).is_some()).count(),
            "pairs": by_kind,
            "failures": failures,
        });
        self.commit(
            expected,
            vec![(PAIRS, to_jsonl(&pairs)?), (PAIRS_REPORT, to_json_pretty(&report)?)],
            json!({ "pairs": pairs.len(), "by_kind": by_kind }),
        )
    }

    pub fn curriculum(&self) -> Result<StageOutcome> {
        let input = self.first_existing(&[FILTERED, SAMPLES_CONTEXT, SAMPLES], "curriculum")?;
        let expected = self.expected(
            "curriculum",
            vec![self.digest(input)?],
            config_hash(json!(self.config.curriculum)),
        );
        if let Some(done) = self.current(CURRICULUM, &expected) {
            return Ok(done);
        }
        let samples: Vec<FimSample> = read_jsonl(&self.path(input))?;
        let entries = build_curriculum(&samples, &self.config.curriculum)?;
        let summary = json!({ "input": samples.len(), "selected": entries.len() });
        self.commit(expected, vec![(CURRICULUM, to_jsonl(&entries)?)], summary)
    }

    pub fn eval(&self, benchmark: Option<&Path>) -> Result<StageOutcome> {
        let path = benchmark
            .map(Path::to_path_buf)
            .or_else(|| self.config.eval.benchmark.clone())
            .ok_or_else(|| Error::MissingStageInput("benchmark JSONL (pass --benchmark or set eval.benchmark)".into()))?;
        if !path.exists() {
            return Err(Error::MissingStageInput(format!("benchmark {} not found", path.display())));
        }
        let expected = self.expected(
            "eval",
            vec![Digest {
                path: path.display().to_string(),
                sha256: sha256_file(&path)?,
            }],
            config_hash(json!(self.config.eval)),
        );
        if let Some(done) = self.current(EVAL_RECORDS, &expected) {
            return Ok(done);
        }
        let cases: Vec<EvalCase> = read_jsonl(&path)?;
        let generator = self.generator()?;
        let outcome = run_eval(&cases, Some(generator.as_ref()), &self.config.eval, &LexicalTokenCounter, self.jobs)?;
        let summary = json!({
            "cases": cases.len(),
            "em_pct": outcome.report.overall.em_pct,
            "es_pct": outcome.report.overall.es_pct,
        });
        self.commit(
            expected,
            vec![
                (EVAL_RECORDS, to_jsonl(&outcome.records)?),
                (EVAL_REPORT, to_json_pretty(&outcome.report)?),
                (EVAL_REPORT_MD, outcome.report.to_markdown().into_bytes()),
            ],
            summary,
        )
    }

    pub fn report(&self) -> Result<StageOutcome> {
        let present: Vec<&str> = [REPO_INDEX, SAMPLES, SAMPLES_CONTEXT, FILTER_REPORT, PAIRS, CURRICULUM, EVAL_REPORT]
            .into_iter()
            .filter(|n| self.path(n).exists())
            .collect();
        if present.is_empty() {
            return Err(Error::MissingStageInput(format!("no stage artifacts in {}", self.run_dir.display())));
        }
        let inputs = present.iter().map(|n| self.digest(n)).collect::<Result<Vec<_>>>()?;
        let expected = self.expected("report", inputs, String::new());
        if let Some(done) = self.current(REPORT, &expected) {
            return Ok(done);
        }
        let md = render_report(&self.run_dir)?;
        self.commit(expected, vec![(REPORT, md.into_bytes())], json!({ "sections": present }))
    }

    /// Runs one stage by name.
    pub fn run_stage(&self, stage: &str, benchmark: Option<&Path>) -> Result<StageOutcome> {
        match stage {
            "ingest" => self.ingest(),
            "synthesize" => self.synthesize(),
            "context" => self.context(),
            "filter" => self.filter(),
            "pairs" => self.pairs(),
            "curriculum" => self.curriculum(),
            "eval" => self.eval(benchmark),
            "report" => self.report(),
            other => Err(Error::Config(format!("unknown stage `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (tempfile::TempDir, Pipeline) {
        let dir = tempfile::tempdir().unwrap();
        let repo = dir.path().join("demo");
        fs::create_dir_all(repo.join("pkg")).unwrap();
        fs::write(
            repo.join("pkg/util.py"),
            "def helper(x):\n    \"\"\"Scale x.\"\"\"\n    return x * 2\n\n\ndef other(y):\n    return y + 1\n",
        )
        .unwrap();
        fs::write(
            repo.join("main.py"),
            "from pkg.util import helper\n\n\ndef run(values):\n    total = 0\n    for v in values:\n        total = total + helper(v)\n    return total\n",
        )
        .unwrap();
        let config = PipelineConfig {
            seed: 5,
            ingest: IngestConfig {
                repos: vec![repo],
                ..IngestConfig::default()
            },
            synth: SynthConfig {
                budget: 40,
                function_samples: true,
            },
            pairs: PairsConfig {
                rejection_sampling: false,
                suffix_frac: 0.5,
                prefix_frac: 0.5,
                ..PairsConfig::default()
            },
            ..PipelineConfig::default()
        };
        let p = Pipeline::new(config).unwrap().with_run_dir(dir.path().join("run")).with_jobs(2);
        (dir, p)
    }

    #[test]
    fn offline_stages_and_noop_rerun() {
        let (_dir, p) = fixture();
        let _lock = p.lock().unwrap();
        for stage in ["ingest", "synthesize", "context", "pairs", "curriculum", "report"] {
            let out = p.run_stage(stage, None).unwrap();
            assert!(!out.skipped, "{stage}");
        }
        let before = fs::read(p.path(SAMPLES)).unwrap();
        assert!(p.synthesize().unwrap().skipped);
        assert!(p.context().unwrap().skipped);
        assert_eq!(fs::read(p.path(SAMPLES)).unwrap(), before);
        let forced = Pipeline::new(p.config().clone()).unwrap().with_run_dir(p.run_dir().to_path_buf()).with_force(true);
        assert!(!forced.synthesize().unwrap().skipped);
        assert_eq!(fs::read(p.path(SAMPLES)).unwrap(), before);
        assert!(manifest_path(&p.path(SAMPLES)).exists());

        let samples: Vec<FimSample> = read_jsonl(&p.path(SAMPLES_CONTEXT)).unwrap();
        let main = samples.iter().find(|s| s.path == "main.py").unwrap();
        assert!(main.context.iter().any(|c| c.channel == Channel::Dependency && c.source_path == "pkg/util.py"));
        assert!(p.path(CHUNK_CACHE).exists());
        assert!(fs::read_to_string(p.path(REPORT)).unwrap().contains("## Samples"));
    }

    #[test]
    fn missing_inputs_and_stale_files() {
        let (_dir, p) = fixture();
        assert!(matches!(p.pairs(), Err(Error::MissingStageInput(_))));
        assert!(matches!(p.synthesize(), Err(Error::MissingStageInput(_))));
        assert!(matches!(p.eval(None), Err(Error::MissingStageInput(_))));
        p.ingest().unwrap();
        let root = &p.config().ingest.repos[0];
        fs::write(root.join("main.py"), "x = 1\n").unwrap();
        assert!(matches!(p.synthesize(), Err(Error::StaleInput(_))));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let (_dir, p) = fixture();
        let text = toml::to_string(p.config()).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(&back, p.config());
        assert!(toml::from_str::<PipelineConfig>("bogus = 1").is_err());
    }
}
