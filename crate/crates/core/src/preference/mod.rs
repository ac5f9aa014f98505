//! DPO preference pairs: rejection-sampled negatives, repetition-suppression
//! pairs, a pair validator and the DPO loss.

mod bleu;

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use tracing::warn;

pub use bleu::{bleu4, text_bleu4};

use crate::context::ContextSnippet;
use crate::endpoint::{bounded_map, check_failure_rate, Generator};
use crate::error::{Error, Result};
use crate::eval::{assemble_prompt, FormatProfile, PromptInput};
use crate::synth::FimSample;
use crate::text::{first_non_empty_line, last_non_empty_line, sha256_hex, strip_all_whitespace, TokenCounter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Rejection,
    SuffixRepetition,
    PrefixRepetition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPrompt {
    pub prefix: String,
    pub suffix: String,
    pub context: Vec<ContextSnippet>,
    pub format: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub source_sample_id: String,
    pub pair_kind: PairKind,
    pub prompt: PairPrompt,
    pub chosen: String,
    pub rejected: String,
}

impl PreferencePair {
    pub fn new(sample: &FimSample, kind: PairKind, rejected: &str, format: &str) -> Self {
        let key = format!("{}\0{kind:?}\0{rejected}", sample.id);
        PreferencePair {
            id: sha256_hex(key)[..32].to_string(),
            source_sample_id: sample.id.clone(),
            pair_kind: kind,
            prompt: PairPrompt {
                prefix: sample.prefix.clone(),
                suffix: sample.suffix.clone(),
                context: sample.context.clone(),
                format: format.to_string(),
            },
            chosen: sample.middle.clone(),
            rejected: rejected.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateBatch {
    pub sample_id: String,
    /// Generation order.
    pub candidates: Vec<String>,
    pub temperature: f64,
    pub n: usize,
}

/// Requests `n` completions for the sample's prompt.
pub fn sample_candidates(
    sample: &FimSample,
    prompt: &str,
    generator: &dyn Generator,
    n: usize,
    temperature: f64,
    max_tokens: usize,
) -> Result<CandidateBatch> {
    let candidates = generator.generate(prompt, n, temperature, max_tokens)?;
    if candidates.len() != n {
        warn!("sample {}: asked for {n} candidates, got {}", sample.id, candidates.len());
    }
    Ok(CandidateBatch {
        sample_id: sample.id.clone(),
        candidates,
        temperature,
        n,
    })
}

/// One stage of the negative-candidate filter chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStep {
    Dedup,
    DropEmpty,
    DropGroundTruth,
    DropSimilar,
    KeepLowestBleu,
}

/// Step order used by [`filter_candidates`].
pub const FILTER_CHAIN: [FilterStep; 5] = [
    FilterStep::Dedup,
    FilterStep::DropEmpty,
    FilterStep::DropGroundTruth,
    FilterStep::DropSimilar,
    FilterStep::KeepLowestBleu,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub index: usize,
    pub text: String,
    pub bleu: f64,
    /// The step that removed the candidate, if any.
    pub dropped_by: Option<FilterStep>,
}

fn trim_line_ends(s: &str) -> String {
    s.lines().map(str::trim_end).collect::<Vec<_>>().join("\n")
}

/// Runs `steps` over `candidates` and reports, per candidate, which step dropped it.
pub fn run_filter_chain(
    ground_truth: &str,
    candidates: &[String],
    steps: &[FilterStep],
    bleu_threshold: f64,
    keep: usize,
) -> Vec<CandidateVerdict> {
    let gt = trim_line_ends(ground_truth);
    let mut verdicts: Vec<CandidateVerdict> = candidates
        .iter()
        .enumerate()
        .map(|(index, text)| CandidateVerdict {
            index,
            text: text.clone(),
            bleu: text_bleu4(text, ground_truth),
            dropped_by: None,
        })
        .collect();
    for &step in steps {
        let alive: Vec<usize> = (0..verdicts.len()).filter(|&i| verdicts[i].dropped_by.is_none()).collect();
        let drop: Vec<usize> = match step {
            FilterStep::Dedup => {
                let mut seen = HashSet::new();
                alive.into_iter().filter(|&i| !seen.insert(verdicts[i].text.clone())).collect()
            }
            FilterStep::DropEmpty => alive.into_iter().filter(|&i| verdicts[i].text.trim().is_empty()).collect(),
            FilterStep::DropGroundTruth => alive
                .into_iter()
                .filter(|&i| {
                    let c = trim_line_ends(&verdicts[i].text);
                    c == gt || (!gt.is_empty() && c.contains(&gt))
                })
                .collect(),
            FilterStep::DropSimilar => alive.into_iter().filter(|&i| verdicts[i].bleu >= bleu_threshold).collect(),
            FilterStep::KeepLowestBleu => {
                let mut order = alive;
                order.sort_by(|&a, &b| verdicts[a].bleu.total_cmp(&verdicts[b].bleu).then(a.cmp(&b)));
                order.into_iter().skip(keep).collect()
            }
        };
        for i in drop {
            verdicts[i].dropped_by = Some(step);
        }
    }
    verdicts
}

/// Surviving negatives, lowest BLEU first (ties in generation order).
pub fn survivors(verdicts: &[CandidateVerdict]) -> Vec<String> {
    let mut alive: Vec<&CandidateVerdict> = verdicts.iter().filter(|v| v.dropped_by.is_none()).collect();
    alive.sort_by(|a, b| a.bleu.total_cmp(&b.bleu).then(a.index.cmp(&b.index)));
    alive.into_iter().map(|v| v.text.clone()).collect()
}

/// Dedup, drop blanks, drop ground-truth matches, drop BLEU ≥ threshold, keep the 3 least similar.
pub fn filter_candidates(ground_truth: &str, batch: &CandidateBatch, bleu_threshold: f64) -> Vec<String> {
    survivors(&run_filter_chain(ground_truth, &batch.candidates, &FILTER_CHAIN, bleu_threshold, 3))
}

fn squash_eq(a: &str, b: &str) -> bool {
    strip_all_whitespace(a) == strip_all_whitespace(b)
}

/// First non-empty suffix line, when the middle does not already start with it.
pub fn suffix_repetition_target(sample: &FimSample) -> Option<&str> {
    let line = first_non_empty_line(&sample.suffix)?;
    let head = first_non_empty_line(&sample.middle)?;
    (!squash_eq(head, line)).then_some(line)
}

/// Last non-empty prefix line, when the middle does not start with it.
pub fn prefix_repetition_target(sample: &FimSample) -> Option<&str> {
    let line = last_non_empty_line(&sample.prefix)?;
    let head = first_non_empty_line(&sample.middle)?;
    (!squash_eq(head, line)).then_some(line)
}

/// `round(frac · |eligible|)` eligible samples drawn without replacement, in input order.
fn draw_fraction<'a, R: Rng + ?Sized>(eligible: &[&'a FimSample], frac: f64, rng: &mut R) -> Vec<&'a FimSample> {
    let k = ((frac * eligible.len() as f64).round() as usize).min(eligible.len());
    let mut picked = index::sample(rng, eligible.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| eligible[i]).collect()
}

/// Suffix- and prefix-repetition pairs over the rejection-sampled samples.
/// Fractions are of the samples eligible for each kind.
pub fn make_repetition_pairs<R: Rng + ?Sized>(
    samples: &[&FimSample],
    rng: &mut R,
    suffix_frac: f64,
    prefix_frac: f64,
    format: &str,
) -> Vec<PreferencePair> {
    let suffix_ok: Vec<&FimSample> = samples.iter().copied().filter(|s| suffix_repetition_target(s).is_some()).collect();
    let prefix_ok: Vec<&FimSample> = samples.iter().copied().filter(|s| prefix_repetition_target(s).is_some()).collect();
    let mut pairs: Vec<PreferencePair> = draw_fraction(&suffix_ok, suffix_frac, rng)
        .into_iter()
        .map(|s| PreferencePair::new(s, PairKind::SuffixRepetition, suffix_repetition_target(s).unwrap(), format))
        .collect();
    pairs.extend(
        draw_fraction(&prefix_ok, prefix_frac, rng)
            .into_iter()
            .map(|s| PreferencePair::new(s, PairKind::PrefixRepetition, prefix_repetition_target(s).unwrap(), format)),
    );
    pairs
}

/// Checks one pair against its kind's invariant.
pub fn validate_pair(pair: &PreferencePair) -> std::result::Result<(), String> {
    if pair.rejected.trim().is_empty() {
        return Err("rejected text is empty".into());
    }
    if pair.chosen == pair.rejected {
        return Err("chosen equals rejected".into());
    }
    match pair.pair_kind {
        PairKind::Rejection => {
            let (c, r) = (trim_line_ends(&pair.chosen), trim_line_ends(&pair.rejected));
            if r.contains(&c) {
                return Err("rejected contains the ground truth".into());
            }
        }
        PairKind::SuffixRepetition => {
            let line = first_non_empty_line(&pair.prompt.suffix);
            if line != Some(pair.rejected.as_str()) {
                return Err("rejected is not the first suffix line".into());
            }
            if first_non_empty_line(&pair.chosen).is_some_and(|h| squash_eq(h, &pair.rejected)) {
                return Err("ground truth starts with the first suffix line".into());
            }
        }
        PairKind::PrefixRepetition => {
            if last_non_empty_line(&pair.prompt.prefix) != Some(pair.rejected.as_str()) {
                return Err("rejected is not the last prefix line".into());
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub id: String,
    pub kind: PairKind,
    pub message: String,
}

pub fn validate_pairs(pairs: &[PreferencePair]) -> Vec<PairViolation> {
    pairs
        .iter()
        .filter_map(|p| {
            validate_pair(p).err().map(|message| PairViolation {
                id: p.id.clone(),
                kind: p.pair_kind,
                message,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoLoss {
    pub loss: f64,
    pub reward_margin: f64,
    pub reward_accuracy: bool,
}

/// `−ln σ(β·((πw − refw) − (πl − refl)))`, evaluated as a stable softplus.
pub fn dpo_loss(logp_w_policy: f64, logp_l_policy: f64, logp_w_ref: f64, logp_l_ref: f64, beta: f64) -> DpoLoss {
    let margin = beta * (logp_w_policy - logp_w_ref) - beta * (logp_l_policy - logp_l_ref);
    let x = -margin;
    let loss = if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    DpoLoss {
        loss,
        reward_margin: margin,
        reward_accuracy: margin > 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsConfig {
    /// Generate negatives; when off, only repetition pairs are built, over all samples.
    pub rejection_sampling: bool,
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: usize,
    pub bleu_threshold: f64,
    pub keep: usize,
    pub suffix_frac: f64,
    pub prefix_frac: f64,
    pub profile: String,
    pub intra_budget: usize,
    pub cross_budget: usize,
    pub max_failure_fraction: f64,
}

impl Default for PairsConfig {
    fn default() -> Self {
        PairsConfig {
            rejection_sampling: true,
            n: 10,
            temperature: 1.0,
            max_tokens: 128,
            bleu_threshold: 0.7,
            keep: 3,
            suffix_frac: 0.10,
            prefix_frac: 0.01,
            profile: "generic".into(),
            intra_budget: 4096,
            cross_budget: 4096,
            max_failure_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct RejectionOutcome {
    pub pairs: Vec<PreferencePair>,
    /// Samples that received a non-empty candidate batch, in input order.
    pub sampled: Vec<String>,
    pub failures: Vec<SampleFailure>,
}

/// Samples negatives for each sample and turns survivors into rejection pairs.
pub fn rejection_sampling(
    samples: &[FimSample],
    generator: &dyn Generator,
    config: &PairsConfig,
    profile: &FormatProfile,
    counter: &dyn TokenCounter,
    jobs: usize,
) -> Result<RejectionOutcome> {
    let batches = bounded_map(samples, jobs, |s| -> Result<CandidateBatch> {
        let prompt = assemble_prompt(
            &PromptInput {
                language: s.language.as_str(),
                prefix: &s.prefix,
                suffix: &s.suffix,
                context: &s.context,
            },
            profile,
            config.intra_budget,
            config.cross_budget,
            counter,
        )?;
        sample_candidates(s, &prompt, generator, config.n, config.temperature, config.max_tokens)
    })?;
    let mut out = RejectionOutcome::default();
    for (sample, batch) in samples.iter().zip(batches) {
        match batch {
            Ok(b) if b.candidates.is_empty() => {
                warn!("sample {}: empty candidate batch, skipped", sample.id);
                out.failures.push(SampleFailure {
                    sample_id: sample.id.clone(),
                    error: "empty candidate batch".into(),
                });
            }
            Ok(b) => {
                let verdicts = run_filter_chain(&sample.middle, &b.candidates, &FILTER_CHAIN, config.bleu_threshold, config.keep);
                out.pairs.extend(
                    survivors(&verdicts)
                        .iter()
                        .map(|neg| PreferencePair::new(sample, PairKind::Rejection, neg, &profile.name)),
                );
                out.sampled.push(sample.id.clone());
            }
            Err(e) => out.failures.push(SampleFailure {
                sample_id: sample.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    check_failure_rate(
        out.failures.len(),
        samples.len(),
        config.max_failure_fraction,
        out.failures.first().map(|f| f.error.as_str()),
    )?;
    Ok(out)
}

impl PairsConfig {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| (0.0..=1.0).contains(&f);
        if !frac_ok(self.suffix_frac) || !frac_ok(self.prefix_frac) || !frac_ok(self.bleu_threshold) {
            return Err(Error::Config("pair fractions and bleu_threshold must lie in [0, 1]".into()));
        }
        if self.rejection_sampling && self.n == 0 {
            return Err(Error::Config("pairs.n must be positive".into()));
        }
        Ok(())
    }
}
