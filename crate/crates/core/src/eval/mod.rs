//! Benchmark evaluation: prompt assembly, generation, EM/ES scoring and the
//! repetition classifier, with per-language report tables.

mod metrics;
mod prompt;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tracing::debug;

pub use metrics::{
    classify_repetition, edit_similarity, exact_match, levenshtein, normalized_edit_similarity, Repetition,
};
pub use prompt::{
    assemble_prompt, builtin_profiles, resolve_profile, split_intra_budget, FormatProfile, Layout, PromptInput,
};

use crate::context::ContextSnippet;
use crate::endpoint::{bounded_map, check_failure_rate, Generator};
use crate::error::{Error, Result};
use crate::text::TokenCounter;

/// One benchmark case. `generated` may be supplied to score offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub language: String,
    pub prefix: String,
    pub suffix: String,
    pub ground_truth: String,
    #[serde(default)]
    pub context: Vec<ContextSnippet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Layout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub language: String,
    pub generated: String,
    pub em: u8,
    pub es: f64,
    pub repetition: Repetition,
}

/// Scores one generation against its case.
pub fn score_case(case: &EvalCase, generated: &str) -> EvalRecord {
    EvalRecord {
        id: case.id.clone(),
        language: case.language.clone(),
        generated: generated.to_string(),
        em: exact_match(generated, &case.ground_truth),
        es: normalized_edit_similarity(generated, &case.ground_truth),
        repetition: classify_repetition(generated, &case.prefix, &case.suffix, &case.ground_truth),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub profile: String,
    pub profiles: Vec<FormatProfile>,
    pub temperature: f64,
    pub max_tokens: usize,
    pub intra_budget: usize,
    pub cross_budget: usize,
    pub max_failure_fraction: f64,
    /// Benchmark JSONL used when the command line names none.
    pub benchmark: Option<std::path::PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            profile: "generic".into(),
            profiles: Vec::new(),
            temperature: 0.0,
            max_tokens: 64,
            intra_budget: 4096,
            cross_budget: 4096,
            max_failure_fraction: 0.1,
            benchmark: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFailure {
    pub id: String,
    pub error: String,
}

/// Means over a group of records. Fractions are unrounded; `*_pct` fields
/// are percentages rounded to one decimal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub cases: usize,
    pub em: f64,
    pub es: f64,
    pub suffix_rep: f64,
    pub prefix_rep: f64,
    pub em_pct: f64,
    pub es_pct: f64,
    pub suffix_rep_pct: f64,
    pub prefix_rep_pct: f64,
}

fn pct(x: f64) -> f64 {
    (x * 1000.0).round() / 10.0
}

impl GroupStats {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> Self {
        let (mut n, mut em, mut es, mut srep, mut prep) = (0usize, 0.0, 0.0, 0.0, 0.0);
        for r in records {
            n += 1;
            em += f64::from(r.em);
            es += r.es;
            srep += f64::from(u8::from(r.repetition == Repetition::SuffixRep));
            prep += f64::from(u8::from(r.repetition == Repetition::PrefixRep));
        }
        if n == 0 {
            return GroupStats::default();
        }
        let d = n as f64;
        let (em, es, suffix_rep, prefix_rep) = (em / d, es / d, srep / d, prep / d);
        GroupStats {
            cases: n,
            em,
            es,
            suffix_rep,
            prefix_rep,
            em_pct: pct(em),
            es_pct: pct(es),
            suffix_rep_pct: pct(suffix_rep),
            prefix_rep_pct: pct(prefix_rep),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub profile: String,
    pub overall: GroupStats,
    pub per_language: BTreeMap<String, GroupStats>,
    pub failures: Vec<EvalFailure>,
}

impl EvalReport {
    pub fn from_records(profile: &str, records: &[EvalRecord], failures: Vec<EvalFailure>) -> Self {
        let mut groups: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
        for r in records {
            groups.entry(r.language.clone()).or_default().push(r);
        }
        EvalReport {
            profile: profile.to_string(),
            overall: GroupStats::of(records),
            per_language: groups.into_iter().map(|(k, v)| (k, GroupStats::of(v))).collect(),
            failures,
        }
    }

    /// Metric table and repetition-rate table.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("# Evaluation ({})\n\n", self.profile);
        let rows: Vec<(&str, &GroupStats)> = self
            .per_language
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .chain(std::iter::once(("overall", &self.overall)))
            .collect();
        out.push_str("| Language | Cases | EM | ES |\n|---|---:|---:|---:|\n");
        for (lang, s) in &rows {
            let _ = writeln!(out, "| {lang} | {} | {:.1} | {:.1} |", s.cases, s.em_pct, s.es_pct);
        }
        out.push_str("\n## Repetition rate (%)\n\n| Language | Suffix | Prefix |\n|---|---:|---:|\n");
        for (lang, s) in &rows {
            let _ = writeln!(out, "| {lang} | {:.1} | {:.1} |", s.suffix_rep_pct, s.prefix_rep_pct);
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "\n{} case(s) failed to generate.", self.failures.len());
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub records: Vec<EvalRecord>,
    pub report: EvalReport,
}

/// Generates (or reuses a supplied generation) for every case and scores it.
/// Cases run with at most `jobs` requests in flight; records keep case order.
pub fn run_eval(
    cases: &[EvalCase],
    generator: Option<&dyn Generator>,
    config: &EvalConfig,
    counter: &dyn TokenCounter,
    jobs: usize,
) -> Result<EvalOutcome> {
    let profile = resolve_profile(&config.profile, &config.profiles)?;
    if let Some(bad) = cases.iter().find(|c| c.ground_truth.trim().is_empty()) {
        return Err(Error::InvalidInput(format!("case {} has an empty ground truth", bad.id)));
    }
    let generate = |case: &EvalCase| -> Result<String> {
        if let Some(g) = &case.generated {
            return Ok(g.clone());
        }
        let generator =
            generator.ok_or_else(|| Error::Endpoint(format!("case {} needs a generator endpoint", case.id)))?;
        let mut p = profile.clone();
        if let Some(layout) = case.format {
            p.layout = layout;
        }
        let prompt = assemble_prompt(
            &PromptInput {
                language: &case.language,
                prefix: &case.prefix,
                suffix: &case.suffix,
                context: &case.context,
            },
            &p,
            config.intra_budget,
            config.cross_budget,
            counter,
        )?;
        let max_tokens = case.max_output_tokens.unwrap_or(config.max_tokens);
        generator
            .generate(&prompt, 1, config.temperature, max_tokens)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Endpoint("generator returned no completion".into()))
    };
    let results = bounded_map(cases, jobs, |c| generate(c))?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (case, result) in cases.iter().zip(results) {
        match result {
            Ok(g) => records.push(score_case(case, &g)),
            Err(e) => {
                debug!("case {}: {e}", case.id);
                failures.push(EvalFailure {
                    id: case.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    check_failure_rate(
        failures.len(),
        cases.len(),
        config.max_failure_fraction,
        failures.first().map(|f| f.error.as_str()),
    )?;
    let report = EvalReport::from_records(&profile.name, &records, failures);
    Ok(EvalOutcome { records, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::LexicalTokenCounter;

    fn case(id: &str, lang: &str, gt: &str, generated: &str) -> EvalCase {
        EvalCase {
            id: id.into(),
            language: lang.into(),
            prefix: "a = 1\n".into(),
            suffix: "b = 2\n".into(),
            ground_truth: gt.into(),
            context: Vec::new(),
            max_output_tokens: None,
            format: None,
            generated: Some(generated.into()),
        }
    }

    #[test]
    fn report_means_match_hand_values() {
        let cases = [
            case("1", "python", "x = 1", "x = 1"),
            case("2", "python", "abcd", "abce"),
            case("3", "python", "y", "b = 2"),
            case("4", "java", "k", "a = 1"),
            case("5", "java", "foo", "bar"),
        ];
        let out = run_eval(&cases, None, &EvalConfig::default(), &LexicalTokenCounter, 2).unwrap();
        let r = &out.report;
        assert_eq!(r.overall.cases, 5);
        assert!((r.overall.em - 0.2).abs() < 1e-9);
        let es = (1.0 + 0.75 + 0.0 + 0.0 + 0.0) / 5.0;
        assert!((r.overall.es - es).abs() < 1e-9);
        assert!((r.overall.suffix_rep - 0.2).abs() < 1e-9);
        assert!((r.overall.prefix_rep - 0.2).abs() < 1e-9);
        assert!((r.per_language["python"].es - 1.75 / 3.0).abs() < 1e-9);
        assert_eq!(r.per_language["python"].es_pct, 58.3);
        assert_eq!(r.overall.em_pct, 20.0);
        let md = r.to_markdown();
        assert!(md.contains("| python | 3 | 33.3 | 58.3 |"));
        assert!(md.contains("| overall | 5 | 20.0 | 35.0 |"));
    }

    #[test]
    fn record_invariants() {
        let c = case("1", "go", "  x := 1\n", "x := 1");
        let r = score_case(&c, "x := 1");
        assert_eq!((r.em, r.es, r.repetition), (1, 1.0, Repetition::None));
    }

    #[test]
    fn missing_generator_counts_as_failure() {
        let mut c = case("1", "go", "x", "x");
        c.generated = None;
        let err = run_eval(&[c], None, &EvalConfig::default(), &LexicalTokenCounter, 1).unwrap_err();
        assert!(matches!(err, Error::TooManyFailures { failed: 1, total: 1, .. }));
    }
}
