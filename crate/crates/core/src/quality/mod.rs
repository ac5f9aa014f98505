//! Perplexity scoring against an external scorer and the two cutoff rules:
//! a log-normal kσ band for infill data, quantile trimming for completion data.

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::endpoint::{bounded_map, check_failure_rate, Scorer};
use crate::error::{Error, Result};
use crate::eval::{assemble_prompt, FormatProfile, PromptInput};
use crate::synth::{FimSample, Pool};
use crate::text::TokenCounter;

/// `exp(−mean(logprobs))`.
pub fn perplexity(logprobs: &[f64]) -> Result<f64> {
    if logprobs.is_empty() {
        return Err(Error::InvalidInput("perplexity of an empty token list".into()));
    }
    if let Some(bad) = logprobs.iter().find(|lp| !lp.is_finite() || **lp > 0.0) {
        return Err(Error::InvalidInput(format!("{bad} is not a log-probability")));
    }
    let mean = logprobs.iter().sum::<f64>() / logprobs.len() as f64;
    Ok((-mean).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sample_id: String,
    pub token_count: usize,
    pub sum_logprob: f64,
    pub ppl: f64,
}

impl ScoredSample {
    pub fn from_logprobs(sample_id: &str, logprobs: &[f64]) -> Result<Self> {
        Ok(ScoredSample {
            sample_id: sample_id.to_string(),
            token_count: logprobs.len(),
            sum_logprob: logprobs.iter().sum(),
            ppl: perplexity(logprobs)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    LognormalSigma,
    Quantile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffSpec {
    pub mode: CutoffMode,
    pub sigma_k: f64,
    pub q_low: f64,
    pub q_high: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec::lognormal(2.0)
    }
}

impl CutoffSpec {
    pub fn lognormal(sigma_k: f64) -> Self {
        CutoffSpec {
            mode: CutoffMode::LognormalSigma,
            sigma_k,
            q_low: 0.05,
            q_high: 0.95,
        }
    }

    pub fn quantile(q_low: f64, q_high: f64) -> Self {
        CutoffSpec {
            mode: CutoffMode::Quantile,
            sigma_k: 2.0,
            q_low,
            q_high,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_k.is_nan() || self.sigma_k <= 0.0 {
            return Err(Error::Config(format!("sigma_k must be positive, got {}", self.sigma_k)));
        }
        if !(0.0 <= self.q_low && self.q_low < self.q_high && self.q_high <= 1.0) {
            return Err(Error::Config(format!(
                "quantiles must satisfy 0 <= q_low < q_high <= 1, got {} and {}",
                self.q_low, self.q_high
            )));
        }
        Ok(())
    }

    pub fn cutoffs(&self, ppls: &[f64]) -> Result<(f64, f64)> {
        self.validate()?;
        match self.mode {
            CutoffMode::LognormalSigma => fit_lognormal_cutoffs(ppls, self.sigma_k),
            CutoffMode::Quantile => quantile_cutoffs(ppls, self.q_low, self.q_high),
        }
    }
}

/// `exp(μ ± kσ)` with μ, σ the mean and population standard deviation of `ln(ppl)`.
pub fn fit_lognormal_cutoffs(ppls: &[f64], sigma_k: f64) -> Result<(f64, f64)> {
    if ppls.len() < 2 {
        return Err(Error::InvalidInput(format!("log-normal fit needs at least 2 values, got {}", ppls.len())));
    }
    if let Some(bad) = ppls.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidInput(format!("perplexity {bad} is not a positive finite number")));
    }
    let logs: Vec<f64> = ppls.iter().map(|p| p.ln()).collect();
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let sigma = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n).sqrt();
    Ok(((mu - sigma_k * sigma).exp(), (mu + sigma_k * sigma).exp()))
}

/// Nearest-rank cutoffs: `low` is the value at 1-based rank `⌊q_low·N⌋ + 1`,
/// `high` the value at rank `⌈q_high·N⌉`, both clamped to `[1, N]`.
pub fn quantile_cutoffs(ppls: &[f64], q_low: f64, q_high: f64) -> Result<(f64, f64)> {
    if ppls.is_empty() {
        return Err(Error::InvalidInput("quantile cutoffs of an empty list".into()));
    }
    if ppls.iter().any(|p| p.is_nan()) {
        return Err(Error::InvalidInput("perplexity is NaN".into()));
    }
    let mut sorted = ppls.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // the epsilon keeps exact products such as 0.05 * 20 on their integer value
    let low_rank = ((q_low * n as f64 + 1e-9).floor() as usize + 1).clamp(1, n);
    let high_rank = ((q_high * n as f64 - 1e-9).ceil().max(0.0) as usize).clamp(1, n);
    Ok((sorted[low_rank - 1], sorted[high_rank - 1]))
}

pub fn within(ppl: f64, (low, high): (f64, f64)) -> bool {
    low <= ppl && ppl <= high
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PplScope {
    /// Middle tokens conditioned on the assembled FIM prompt.
    MiddleOnly,
    /// The whole file text with an empty prompt.
    FullSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub infill: CutoffSpec,
    pub completion: CutoffSpec,
    pub scope: PplScope,
    pub include_context: bool,
    pub profile: String,
    pub intra_budget: usize,
    pub cross_budget: usize,
    pub max_failure_fraction: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            infill: CutoffSpec::lognormal(2.0),
            completion: CutoffSpec::quantile(0.05, 0.95),
            scope: PplScope::MiddleOnly,
            include_context: true,
            profile: "generic".into(),
            intra_budget: 4096,
            cross_budget: 4096,
            max_failure_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFailure {
    pub sample_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScoreOutcome {
    pub scored: Vec<ScoredSample>,
    pub failures: Vec<ScoreFailure>,
}

/// The (prompt, completion) pair sent to the scorer for `sample`.
pub fn scoring_request(
    sample: &FimSample,
    config: &FilterConfig,
    profile: &FormatProfile,
    counter: &dyn TokenCounter,
) -> Result<(String, String)> {
    match config.scope {
        PplScope::FullSequence => Ok((String::new(), format!("{}{}{}", sample.prefix, sample.middle, sample.suffix))),
        PplScope::MiddleOnly => {
            let context: &[_] = if config.include_context { &sample.context } else { &[] };
            let prompt = assemble_prompt(
                &PromptInput {
                    language: sample.language.as_str(),
                    prefix: &sample.prefix,
                    suffix: &sample.suffix,
                    context,
                },
                profile,
                config.intra_budget,
                config.cross_budget,
                counter,
            )?;
            Ok((prompt, sample.middle.clone()))
        }
    }
}

/// Scores every sample; failures are recorded per sample and abort the run
/// when they exceed `max_failure_fraction`.
pub fn score_corpus(
    samples: &[FimSample],
    scorer: &dyn Scorer,
    config: &FilterConfig,
    profile: &FormatProfile,
    counter: &dyn TokenCounter,
    jobs: usize,
) -> Result<ScoreOutcome> {
    let results = bounded_map(samples, jobs, |s| -> Result<ScoredSample> {
        let (prompt, completion) = scoring_request(s, config, profile, counter)?;
        let logprobs = scorer.logprobs(&prompt, &completion)?;
        ScoredSample::from_logprobs(&s.id, &logprobs)
    })?;
    let mut out = ScoreOutcome::default();
    for (sample, r) in samples.iter().zip(results) {
        match r {
            Ok(s) => out.scored.push(s),
            Err(e) => {
                debug!("sample {}: {e}", sample.id);
                out.failures.push(ScoreFailure {
                    sample_id: sample.id.clone(),
                    error: e.to_string(),
                });
            }
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolReport {
    pub pool: Pool,
    pub mode: CutoffMode,
    pub scored: usize,
    pub kept: usize,
    pub dropped_low: usize,
    pub dropped_high: usize,
    /// Absent when the pool had too few scores to fit; then everything is kept.
    pub cutoffs: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub pools: Vec<PoolReport>,
    pub failures: Vec<ScoreFailure>,
}

/// Applies each pool's cutoff rule. Returns the ids to keep, in input order.
pub fn filter_scored(
    samples: &[FimSample],
    scored: &[ScoredSample],
    config: &FilterConfig,
) -> Result<(Vec<String>, Vec<PoolReport>)> {
    let pool_of: std::collections::HashMap<&str, Pool> =
        samples.iter().map(|s| (s.id.as_str(), s.meta.pool)).collect();
    let mut keep = std::collections::HashSet::new();
    let mut reports = Vec::new();
    for (pool, spec) in [(Pool::Infill, &config.infill), (Pool::Completion, &config.completion)] {
        let members: Vec<&ScoredSample> =
            scored.iter().filter(|s| pool_of.get(s.sample_id.as_str()) == Some(&pool)).collect();
        if members.is_empty() {
            continue;
        }
        let ppls: Vec<f64> = members.iter().map(|s| s.ppl).collect();
        let cutoffs = match spec.cutoffs(&ppls) {
            Ok(c) => Some(c),
            Err(Error::InvalidInput(msg)) => {
                warn!("{pool:?} pool: {msg}; keeping all scored samples");
                None
            }
            Err(e) => return Err(e),
        };
        let mut report = PoolReport {
            pool,
            mode: spec.mode,
            scored: members.len(),
            kept: 0,
            dropped_low: 0,
            dropped_high: 0,
            cutoffs,
        };
        for m in members {
            match cutoffs {
                Some((low, _)) if m.ppl < low => report.dropped_low += 1,
                Some((_, high)) if m.ppl > high => report.dropped_high += 1,
                _ => {
                    report.kept += 1;
                    keep.insert(m.sample_id.clone());
                }
            }
        }
        reports.push(report);
    }
    let kept = samples.iter().filter(|s| keep.contains(&s.id)).map(|s| s.id.clone()).collect();
    Ok((kept, reports))
}
