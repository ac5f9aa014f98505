//! FIM sample synthesis: strategy mixture, per-strategy target extraction,
//! and corpus-level drawing.

mod ops;
mod triggers;

use std::collections::{BTreeMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

pub use ops::{
    ast_cuts, function_cuts, intra_line_slots, parenthesized_cuts, post_comment_cuts, random_intra_cut,
    random_multi_line_cut, single_line_cuts, synthesize_ast_sample, synthesize_function_sample,
    synthesize_intra_line, synthesize_parenthesized, synthesize_post_comment, synthesize_random_lines,
    syntax_token_cuts, Cut, IntraLineMode,
};
pub use triggers::{trigger_cuts, TriggerSet};

use crate::context::ContextSnippet;
use crate::error::{Error, Result};
use crate::ingest::{RepoIndex, SourceFile};
use crate::language::Language;
use crate::parsing::parse;
use crate::strategy::{Strategy, StrategyFamily};
use crate::text::{is_blank, sha256_hex};

/// Upper bound on middle size in bytes.
pub const MAX_MIDDLE_BYTES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    /// Infilling samples from the strategy mixture.
    Infill,
    /// Standalone function-body completion samples.
    Completion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub pool: Pool,
    pub start_byte: usize,
    pub end_byte: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_kind: Option<String>,
    pub file_sha256: String,
}

/// One FIM training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimSample {
    pub id: String,
    pub repo_id: String,
    pub path: String,
    pub language: Language,
    pub strategy: Strategy,
    pub prefix: String,
    pub middle: String,
    pub suffix: String,
    #[serde(default)]
    pub context: Vec<ContextSnippet>,
    pub meta: SampleMeta,
}

impl FimSample {
    /// Splits `file` around `cut`. `None` for empty, blank or oversize middles.
    pub fn from_cut(file: &SourceFile, strategy: Strategy, cut: &Cut, pool: Pool) -> Option<Self> {
        FimSample::build(file, &file.sha256(), strategy, cut, pool)
    }

    fn build(file: &SourceFile, file_sha: &str, strategy: Strategy, cut: &Cut, pool: Pool) -> Option<Self> {
        let r = cut.range.clone();
        let text = &file.content;
        if r.is_empty() || r.end > text.len() || r.len() > MAX_MIDDLE_BYTES {
            return None;
        }
        if !text.is_char_boundary(r.start) || !text.is_char_boundary(r.end) || is_blank(&text[r.clone()]) {
            return None;
        }
        let key = format!(
            "{}\0{}\0{}\0{}\0{}\0{}",
            file.repo_id, file.path, strategy, r.start, r.end, file_sha
        );
        Some(FimSample {
            id: sha256_hex(key)[..32].to_string(),
            repo_id: file.repo_id.clone(),
            path: file.path.clone(),
            language: file.language,
            strategy,
            prefix: text[..r.start].to_string(),
            middle: text[r.clone()].to_string(),
            suffix: text[r.end..].to_string(),
            context: Vec::new(),
            meta: SampleMeta {
                pool,
                start_byte: r.start,
                end_byte: r.end,
                node_kind: cut.node_kind.map(String::from),
                file_sha256: file_sha.to_string(),
            },
        })
    }

    pub fn reconstructs(&self, content: &str) -> bool {
        content.len() == self.prefix.len() + self.middle.len() + self.suffix.len()
            && content.starts_with(&self.prefix)
            && content[self.prefix.len()..].starts_with(&self.middle)
            && content.ends_with(&self.suffix)
    }
}

/// Relative strategy weights; normalized when drawing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyWeights(pub BTreeMap<Strategy, f64>);

impl Default for StrategyWeights {
    /// Composition in percent. Strategies without a published share split the
    /// residual syntax-node mass evenly.
    fn default() -> Self {
        use Strategy::*;
        let named_ast = [
            (Expressions, 10.66),
            (OtherStatementBlocks, 9.90),
            (Methods, 8.90),
            (AssignmentAndDeclaration, 6.99),
            (ParametersAndArguments, 6.53),
            (Conditionals, 5.43),
            (AnnotationsOrDecorators, 0.46),
            (GoConcurrentStatements, 0.18),
        ];
        let residual_ast = [Loops, ReturnStatements, CallExpressions, ClassBodies, ImportStatements];
        let named_sum: f64 = named_ast.iter().map(|(_, w)| w).sum();
        let each = (AST_SHARE - named_sum) / residual_ast.len() as f64;

        let mut w: BTreeMap<Strategy, f64> = named_ast.into_iter().collect();
        w.extend(residual_ast.into_iter().map(|s| (s, each)));
        w.extend([
            (RandomIntraLine, 7.39),
            (SyntaxTokenTrigger, 7.39),
            (ParenthesesFragment, 4.86),
            (PostCommentBlock, 2.92),
            (RandomSingleLine, RANDOM_SHARE / 2.0),
            (RandomMultiLine, RANDOM_SHARE / 2.0),
            (FunctionBody, 0.0),
        ]);
        StrategyWeights(w)
    }
}

const AST_SHARE: f64 = 66.89;
const RANDOM_SHARE: f64 = 10.55;

impl StrategyWeights {
    pub fn only(strategy: Strategy) -> Self {
        StrategyWeights(BTreeMap::from([(strategy, 1.0)]))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((s, w)) = self.0.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::Config(format!("weight for {s} must be finite and nonnegative, got {w}")));
        }
        if self.0.values().sum::<f64>() <= 0.0 {
            return Err(Error::Config("strategy weights sum to zero".into()));
        }
        Ok(())
    }

    pub fn normalized(&self) -> BTreeMap<Strategy, f64> {
        let total: f64 = self.0.values().sum();
        self.0.iter().map(|(s, w)| (*s, w / total)).collect()
    }

    pub fn family_share(&self, family: StrategyFamily) -> f64 {
        self.normalized()
            .into_iter()
            .filter(|(s, _)| s.family() == family)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Categorical sampler over the positive-weight strategies.
#[derive(Debug, Clone)]
pub struct StrategySampler {
    strategies: Vec<Strategy>,
    dist: WeightedIndex<f64>,
}

impl StrategySampler {
    pub fn new(weights: &StrategyWeights) -> Result<Self> {
        weights.validate()?;
        let (strategies, w): (Vec<Strategy>, Vec<f64>) = weights.0.iter().filter(|(_, w)| **w > 0.0).unzip();
        let dist = WeightedIndex::new(&w).map_err(|e| Error::Config(format!("strategy weights: {e}")))?;
        Ok(StrategySampler { strategies, dist })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Strategy {
        self.strategies[self.dist.sample(rng)]
    }
}

/// A single draw proportional to `weights`.
pub fn draw_strategy<R: Rng + ?Sized>(weights: &StrategyWeights, rng: &mut R) -> Result<Strategy> {
    Ok(StrategySampler::new(weights)?.draw(rng))
}

/// Candidate targets of one file, computed once before drawing.
struct Prepared<'a> {
    file: &'a SourceFile,
    sha: String,
    cuts: BTreeMap<Strategy, Vec<Cut>>,
    intra_slots: Vec<(usize, usize, usize)>,
    line_count: usize,
}

impl<'a> Prepared<'a> {
    fn new(file: &'a SourceFile) -> Self {
        let mut cuts = BTreeMap::new();
        match parse(file) {
            Ok(tree) => {
                for s in Strategy::AST {
                    cuts.insert(s, ast_cuts(&tree, s));
                }
                cuts.insert(Strategy::ParenthesesFragment, parenthesized_cuts(&tree));
                cuts.insert(Strategy::PostCommentBlock, post_comment_cuts(&tree));
                cuts.insert(Strategy::FunctionBody, function_cuts(&tree));
            }
            Err(e) => warn!("{}: {e}; syntax strategies skipped", file.path),
        }
        cuts.insert(
            Strategy::SyntaxTokenTrigger,
            syntax_token_cuts(file, &TriggerSet::for_language(file.language)),
        );
        cuts.insert(Strategy::RandomSingleLine, single_line_cuts(&file.content));
        Prepared {
            sha: file.sha256(),
            intra_slots: intra_line_slots(&file.content),
            line_count: file.line_count,
            cuts,
            file,
        }
    }

    fn supports(&self, strategy: Strategy) -> bool {
        match strategy {
            Strategy::RandomIntraLine => !self.intra_slots.is_empty(),
            Strategy::RandomMultiLine => self.line_count >= 2,
            s => self.cuts.get(&s).is_some_and(|c| !c.is_empty()),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, strategy: Strategy, rng: &mut R) -> Option<FimSample> {
        let cut = match strategy {
            Strategy::RandomIntraLine => {
                let slot = *self.intra_slots.choose(rng)?;
                random_intra_cut(&self.file.content, slot, rng)
            }
            Strategy::RandomMultiLine => random_multi_line_cut(&self.file.content, rng)?,
            s => self.cuts.get(&s)?.choose(rng)?.clone(),
        };
        let pool = if strategy == Strategy::FunctionBody {
            Pool::Completion
        } else {
            Pool::Infill
        };
        FimSample::build(self.file, &self.sha, strategy, &cut, pool)
    }
}

/// Draws (strategy, file, target) until `budget` distinct samples exist or
/// attempts run out. Strategies with no eligible file anywhere are left out
/// of the mixture. Output order is generation order.
pub fn synthesize_files<R: Rng + ?Sized>(
    files: &[&SourceFile],
    weights: &StrategyWeights,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<FimSample>> {
    weights.validate()?;
    if budget == 0 || files.is_empty() {
        return Ok(Vec::new());
    }
    let prepared: Vec<Prepared> = files.par_iter().map(|f| Prepared::new(f)).collect();
    let mut eligible: BTreeMap<Strategy, Vec<usize>> = BTreeMap::new();
    for (i, p) in prepared.iter().enumerate() {
        for s in Strategy::all() {
            if p.supports(s) {
                eligible.entry(s).or_default().push(i);
            }
        }
    }
    let available = StrategyWeights(
        weights
            .0
            .iter()
            .filter(|(s, w)| **w > 0.0 && eligible.contains_key(s))
            .map(|(s, w)| (*s, *w))
            .collect(),
    );
    for s in weights.0.iter().filter(|(s, w)| **w > 0.0 && !eligible.contains_key(s)).map(|(s, _)| s) {
        debug!("strategy {s} has no eligible target in the corpus");
    }
    if available.0.is_empty() {
        return Ok(Vec::new());
    }
    let sampler = StrategySampler::new(&available)?;

    let mut out = Vec::with_capacity(budget);
    let mut seen = HashSet::new();
    let max_attempts = budget.saturating_mul(20).saturating_add(1000);
    let mut attempts = 0;
    while out.len() < budget && attempts < max_attempts {
        attempts += 1;
        let strategy = sampler.draw(rng);
        let files = &eligible[&strategy];
        let file = &prepared[files[rng.random_range(0..files.len())]];
        if let Some(sample) = file.draw(strategy, rng) {
            if seen.insert(sample.id.clone()) {
                out.push(sample);
            }
        }
    }
    if out.len() < budget {
        warn!("synthesized {} of {budget} samples before running out of distinct targets", out.len());
    }
    Ok(out)
}

/// [`synthesize_files`] over one repository.
pub fn synthesize_corpus<R: Rng + ?Sized>(
    index: &RepoIndex,
    weights: &StrategyWeights,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<FimSample>> {
    let files: Vec<&SourceFile> = index.files.iter().collect();
    synthesize_files(&files, weights, budget, rng)
}

/// Every documented-function sample across `files`, in file order.
pub fn function_samples(files: &[&SourceFile]) -> Vec<FimSample> {
    files
        .par_iter()
        .map(|f| match parse(f) {
            Ok(tree) => synthesize_function_sample(&tree, f),
            Err(_) => Vec::new(),
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Infill samples to draw across all repositories.
    pub budget: usize,
    /// Also emit one completion-pool sample per documented function.
    pub function_samples: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            budget: 1000,
            function_samples: true,
        }
    }
}
