use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::chunk::Chunk;

/// Corpus statistics for Okapi BM25 over a set of chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Stats {
    pub n: usize,
    pub avgdl: f64,
    pub df: BTreeMap<String, usize>,
    pub k1: f64,
    pub b: f64,
}

impl Bm25Stats {
    pub fn from_chunks<'a>(chunks: impl IntoIterator<Item = &'a Chunk>, k1: f64, b: f64) -> Self {
        let mut n = 0;
        let mut total_len = 0usize;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for chunk in chunks {
            n += 1;
            total_len += chunk.term_count();
            for term in chunk.term_frequencies.keys() {
                *df.entry(term.clone()).or_insert(0) += 1;
            }
        }
        let avgdl = if n == 0 { 0.0 } else { total_len as f64 / n as f64 };
        Bm25Stats { n, avgdl, df, k1, b }
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        (1.0 + (self.n as f64 - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, idf: f64, tf: f64, dl: f64) -> f64 {
        let ratio = if self.avgdl > 0.0 { dl / self.avgdl } else { 0.0 };
        idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * ratio))
    }
}

/// Okapi BM25 of `chunk` against the distinct terms of `query_terms`.
pub fn bm25_score(query_terms: &[String], chunk: &Chunk, stats: &Bm25Stats) -> f64 {
    let dl = chunk.term_count() as f64;
    let distinct: BTreeSet<&str> = query_terms.iter().map(String::as_str).collect();
    distinct
        .into_iter()
        .filter_map(|t| chunk.term_frequencies.get(t).map(|&tf| (t, tf)))
        .map(|(t, tf)| stats.term_weight(stats.idf(t), tf as f64, dl))
        .sum()
}

/// Chunks plus postings lists, so a query only touches chunks sharing a term.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    chunks: Vec<Chunk>,
    lengths: Vec<f64>,
    postings: HashMap<String, Vec<(usize, u32)>>,
    stats: Bm25Stats,
}

impl Bm25Index {
    pub fn new(chunks: Vec<Chunk>, k1: f64, b: f64) -> Self {
        let stats = Bm25Stats::from_chunks(&chunks, k1, b);
        let mut postings: HashMap<String, Vec<(usize, u32)>> = HashMap::new();
        for (i, chunk) in chunks.iter().enumerate() {
            for (term, &tf) in &chunk.term_frequencies {
                postings.entry(term.clone()).or_default().push((i, tf));
            }
        }
        let lengths = chunks.iter().map(|c| c.term_count() as f64).collect();
        Bm25Index {
            chunks,
            lengths,
            postings,
            stats,
        }
    }

    pub fn stats(&self) -> &Bm25Stats {
        &self.stats
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    /// Positive scores for every chunk sharing at least one query term, in chunk order.
    pub fn score_all(&self, query_terms: &[String]) -> Vec<(usize, f64)> {
        let distinct: BTreeSet<&str> = query_terms.iter().map(String::as_str).collect();
        let mut scores = vec![0.0f64; self.chunks.len()];
        let mut touched = vec![false; self.chunks.len()];
        // Terms are visited in sorted order so floating-point sums match `bm25_score`.
        for term in distinct {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.stats.idf(term);
            for &(i, tf) in list {
                scores[i] += self.stats.term_weight(idf, tf as f64, self.lengths[i]);
                touched[i] = true;
            }
        }
        scores
            .into_iter()
            .enumerate()
            .filter(|(i, s)| touched[*i] && *s > 0.0)
            .collect()
    }
}
