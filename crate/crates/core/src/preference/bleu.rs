use std::collections::HashMap;

use crate::text::lex_tokens;

fn ngram_counts<'a, 'b>(tokens: &'b [&'a str], n: usize) -> HashMap<&'b [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU-4: geometric mean of clipped 1..4-gram precisions times the
/// brevity penalty. A zero match count for order n becomes `1 / (l_n + 1)`,
/// `l_n` being the candidate's n-gram count. No shared unigram at all scores 0.
pub fn bleu4(candidate: &[&str], reference: &[&str]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let total = candidate.len().saturating_sub(n - 1);
        let matched: usize = cand.iter().map(|(g, c)| (*c).min(*refs.get(g).unwrap_or(&0))).sum();
        if n == 1 && matched == 0 {
            return 0.0;
        }
        let p = if matched > 0 {
            matched as f64 / total as f64
        } else {
            1.0 / (total as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * (log_sum / 4.0).exp()
}

/// [`bleu4`] over lexical tokens of two texts.
pub fn text_bleu4(candidate: &str, reference: &str) -> f64 {
    bleu4(&lex_tokens(candidate), &lex_tokens(reference))
}
