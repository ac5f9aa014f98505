//! Complexity ordering: rank samples by identifier count and keep the most
//! complex fraction.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::language::Language;
use crate::parsing::{count_identifiers, parse_text};
use crate::synth::{FimSample, Pool};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityRecord {
    pub sample_id: String,
    pub identifier_count: usize,
    /// 1-based position after sorting.
    pub rank: usize,
}

/// Descending by count, ties by id ascending.
pub fn rank_by_complexity(counts: &[(String, usize)]) -> Vec<ComplexityRecord> {
    let mut sorted: Vec<&(String, usize)> = counts.iter().collect();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, (id, n))| ComplexityRecord {
            sample_id: id.clone(),
            identifier_count: *n,
            rank: i + 1,
        })
        .collect()
}

/// `⌈k·N⌉`, guarded against products such as `0.3 · 10` landing just above an integer.
pub fn top_count(k_fraction: f64, n: usize) -> usize {
    ((k_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// The first `⌈k·N⌉` records.
pub fn select_top_fraction(records: &[ComplexityRecord], k_fraction: f64) -> Vec<String> {
    records[..top_count(k_fraction, records.len())]
        .iter()
        .map(|r| r.sample_id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityScope {
    /// The whole source file the sample was cut from.
    File,
    Middle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    pub k_fraction: f64,
    pub complexity_scope: ComplexityScope,
    /// Rank and select the infill and completion pools separately.
    pub per_pool: bool,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            k_fraction: 0.3,
            complexity_scope: ComplexityScope::File,
            per_pool: true,
        }
    }
}

/// One line of `curriculum.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumEntry {
    pub sample_id: String,
    pub pool: Pool,
    pub identifier_count: usize,
    /// Rank within the group the sample was selected from.
    pub rank: usize,
}

/// Identifier counts per sample. Each distinct text is parsed once.
pub fn sample_complexities(samples: &[FimSample], scope: ComplexityScope) -> Result<Vec<usize>> {
    let text_of = |s: &FimSample| match scope {
        ComplexityScope::File => format!("{}{}{}", s.prefix, s.middle, s.suffix),
        ComplexityScope::Middle => s.middle.clone(),
    };
    let mut slot: HashMap<(Language, String), usize> = HashMap::new();
    let mut distinct: Vec<(Language, String)> = Vec::new();
    let keys: Vec<usize> = samples
        .iter()
        .map(|s| {
            let key = match scope {
                ComplexityScope::File if !s.meta.file_sha256.is_empty() => s.meta.file_sha256.clone(),
                _ => text_of(s),
            };
            *slot.entry((s.language, key)).or_insert_with(|| {
                distinct.push((s.language, text_of(s)));
                distinct.len() - 1
            })
        })
        .collect();
    let counts: Vec<usize> = distinct
        .par_iter()
        .map(|(lang, text)| parse_text(*lang, text).map(|t| count_identifiers(&t)))
        .collect::<Result<_>>()?;
    Ok(keys.into_iter().map(|k| counts[k]).collect())
}

/// Ranks, selects the top fraction (per pool by default) and merges the
/// selections by (count desc, id asc).
pub fn build_curriculum(samples: &[FimSample], config: &CurriculumConfig) -> Result<Vec<CurriculumEntry>> {
    if !(0.0..=1.0).contains(&config.k_fraction) {
        return Err(Error::Config(format!("k_fraction must lie in [0, 1], got {}", config.k_fraction)));
    }
    let counts = sample_complexities(samples, config.complexity_scope)?;
    let pool_of: HashMap<&str, Pool> = samples.iter().map(|s| (s.id.as_str(), s.meta.pool)).collect();
    let groups: Vec<Option<Pool>> = if config.per_pool {
        vec![Some(Pool::Infill), Some(Pool::Completion)]
    } else {
        vec![None]
    };
    let mut out = Vec::new();
    for group in groups {
        let members: Vec<(String, usize)> = samples
            .iter()
            .zip(&counts)
            .filter(|(s, _)| group.is_none_or(|g| s.meta.pool == g))
            .map(|(s, c)| (s.id.clone(), *c))
            .collect();
        let ranked = rank_by_complexity(&members);
        let take = top_count(config.k_fraction, ranked.len());
        out.extend(ranked.into_iter().take(take).map(|r| CurriculumEntry {
            pool: pool_of[r.sample_id.as_str()],
            sample_id: r.sample_id,
            identifier_count: r.identifier_count,
            rank: r.rank,
        }));
    }
    out.sort_by(|a, b| b.identifier_count.cmp(&a.identifier_count).then_with(|| a.sample_id.cmp(&b.sample_id)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(v: &[(&str, usize)]) -> Vec<(String, usize)> {
        v.iter().map(|(a, b)| (a.to_string(), *b)).collect()
    }

    fn ids(r: &[ComplexityRecord]) -> Vec<&str> {
        r.iter().map(|x| x.sample_id.as_str()).collect()
    }

    #[test]
    fn rank_examples() {
        let r = rank_by_complexity(&counts(&[("a", 5), ("b", 3), ("c", 9)]));
        assert_eq!(ids(&r), ["c", "a", "b"]);
        assert_eq!(r.iter().map(|x| x.rank).collect::<Vec<_>>(), [1, 2, 3]);
        let r = rank_by_complexity(&counts(&[("z", 1), ("m", 1), ("a", 1)]));
        assert_eq!(ids(&r), ["a", "m", "z"]);
        assert!(rank_by_complexity(&[]).is_empty());
    }

    #[test]
    fn select_examples() {
        let r = rank_by_complexity(&counts(&[("a", 5), ("b", 3), ("c", 9)]));
        assert_eq!(select_top_fraction(&r, 0.3), ["c"]);
        assert_eq!(select_top_fraction(&r, 1.0).len(), 3);
        assert_eq!(top_count(0.3, 10), 3);
        assert_eq!(top_count(0.3, 11), 4);
        assert_eq!(top_count(0.0, 11), 0);
    }

    proptest! {
        #[test]
        fn selection_is_top_counts(v in proptest::collection::vec(0usize..50, 0..80), k in 0.0f64..=1.0) {
            let c: Vec<(String, usize)> = v.iter().enumerate().map(|(i, n)| (format!("s{i:03}"), *n)).collect();
            let r = rank_by_complexity(&c);
            prop_assert!(r.windows(2).all(|w| w[0].identifier_count >= w[1].identifier_count));
            let sel = select_top_fraction(&r, k);
            let chosen: std::collections::HashSet<&String> = sel.iter().collect();
            let min_sel = c.iter().filter(|x| chosen.contains(&x.0)).map(|x| x.1).min();
            let max_rest = c.iter().filter(|x| !chosen.contains(&x.0)).map(|x| x.1).max();
            if let (Some(a), Some(b)) = (min_sel, max_rest) {
                prop_assert!(b <= a);
            }
            let once = select_top_fraction(&r, k);
            let twice_records: Vec<ComplexityRecord> = r.iter().filter(|x| once.contains(&x.sample_id)).cloned().collect();
            prop_assert_eq!(select_top_fraction(&twice_records, 1.0), once);
        }
    }
}
