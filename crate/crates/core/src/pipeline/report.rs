use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde_json::Value;

use super::io::read_jsonl;
use super::{CURRICULUM, EVAL_REPORT, FILTER_REPORT, PAIRS, REPO_INDEX, SAMPLES, SAMPLES_CONTEXT};
use crate::context::Channel;
use crate::error::{Error, Result};
use crate::ingest::IndexRecord;
use crate::preference::PreferencePair;
use crate::strategy::Strategy;
use crate::synth::{FimSample, Pool};

fn pct(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        (n as f64 * 1000.0 / total as f64).round() / 10.0
    }
}

/// Renders a Markdown summary of whichever artifacts exist in `run_dir`.
pub fn render_report(run_dir: &Path) -> Result<String> {
    let mut out = String::from("# Run report\n");
    let w = &mut out;

    let index = run_dir.join(REPO_INDEX);
    if index.exists() {
        let records: Vec<IndexRecord> = read_jsonl(&index)?;
        let mut langs: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let mut rules: BTreeMap<String, usize> = BTreeMap::new();
        for r in &records {
            let e = langs.entry(r.language.to_string()).or_default();
            if r.dropped {
                e.1 += 1;
                *rules.entry(r.drop_rule.clone().unwrap_or_default()).or_default() += 1;
            } else {
                e.0 += 1;
            }
        }
        let _ = writeln!(w, "\n## Ingest\n\n| Language | Retained | Dropped |\n|---|---:|---:|");
        for (lang, (kept, dropped)) in &langs {
            let _ = writeln!(w, "| {lang} | {kept} | {dropped} |");
        }
        if !rules.is_empty() {
            let _ = writeln!(w, "\n| Drop rule | Files |\n|---|---:|");
            for (rule, n) in &rules {
                let _ = writeln!(w, "| {rule} | {n} |");
            }
        }
    }

    let samples_path = run_dir.join(SAMPLES);
    if samples_path.exists() {
        let samples: Vec<FimSample> = read_jsonl(&samples_path)?;
        let mut by: BTreeMap<Strategy, usize> = BTreeMap::new();
        for s in &samples {
            *by.entry(s.strategy).or_default() += 1;
        }
        let infill = samples.iter().filter(|s| s.meta.pool == Pool::Infill).count();
        let _ = writeln!(
            w,
            "\n## Samples\n\n{} samples ({} infill, {} completion).\n\n| Strategy | Family | Count | Share (%) |\n|---|---|---:|---:|",
            samples.len(),
            infill,
            samples.len() - infill
        );
        for (s, n) in &by {
            let _ = writeln!(w, "| {} | {} | {n} | {:.1} |", s, format!("{:?}", s.family()).to_lowercase(), pct(*n, samples.len()));
        }
    }

    let ctx_path = run_dir.join(SAMPLES_CONTEXT);
    if ctx_path.exists() {
        let samples: Vec<FimSample> = read_jsonl(&ctx_path)?;
        let n = samples.len().max(1) as f64;
        let count = |ch: Channel| samples.iter().map(|s| s.context.iter().filter(|c| c.channel == ch).count()).sum::<usize>();
        let _ = writeln!(
            w,
            "\n## Context\n\nMean snippets per sample: {:.2} similar, {:.2} dependency.",
            count(Channel::Bm25) as f64 / n,
            count(Channel::Dependency) as f64 / n
        );
    }

    let filter_path = run_dir.join(FILTER_REPORT);
    if filter_path.exists() {
        let text = std::fs::read_to_string(&filter_path).map_err(|e| Error::io(&filter_path, e))?;
        let report: Value = serde_json::from_str(&text)?;
        let _ = writeln!(w, "\n## Perplexity filter\n\n| Pool | Scored | Kept | Low | High |\n|---|---:|---:|---:|---:|");
        for p in report["pools"].as_array().into_iter().flatten() {
            let bound = |i: usize| p["cutoffs"][i].as_f64().map_or("-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(
                w,
                "| {} | {} | {} | {} | {} |",
                p["pool"].as_str().unwrap_or("?"),
                p["scored"],
                p["kept"],
                bound(0),
                bound(1)
            );
        }
        let failures = report["failures"].as_array().map_or(0, Vec::len);
        let _ = writeln!(w, "\nScoring failures: {failures}.");
    }

    let pairs_path = run_dir.join(PAIRS);
    if pairs_path.exists() {
        let pairs: Vec<PreferencePair> = read_jsonl(&pairs_path)?;
        let mut by: BTreeMap<String, usize> = BTreeMap::new();
        for p in &pairs {
            *by.entry(serde_json::to_value(p.pair_kind)?.as_str().unwrap_or("?").to_string()).or_default() += 1;
        }
        let _ = writeln!(w, "\n## Preference pairs\n\n| Kind | Pairs |\n|---|---:|");
        for (k, n) in &by {
            let _ = writeln!(w, "| {k} | {n} |");
        }
    }

    let cur_path = run_dir.join(CURRICULUM);
    if cur_path.exists() {
        let entries: Vec<Value> = read_jsonl(&cur_path)?;
        let _ = writeln!(w, "\n## Curriculum\n\n{} samples selected.", entries.len());
    }

    let eval_path = run_dir.join(EVAL_REPORT);
    if eval_path.exists() {
        let text = std::fs::read_to_string(&eval_path).map_err(|e| Error::io(&eval_path, e))?;
        let report: Value = serde_json::from_str(&text)?;
        let o = &report["overall"];
        let _ = writeln!(
            w,
            "\n## Evaluation\n\nProfile `{}`: {} cases, EM {}%, ES {}%.",
            report["profile"].as_str().unwrap_or("?"),
            o["cases"],
            o["em_pct"],
            o["es_pct"]
        );
    }
    Ok(out)
}
