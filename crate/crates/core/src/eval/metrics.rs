//! Exact match, edit similarity and the line-repetition classifier.

use serde::{Deserialize, Serialize};

use crate::text::{first_non_empty_line, last_non_empty_line, strip_all_whitespace};

fn normalize(s: &str) -> String {
    s.replace("\r\n", "\n").trim().to_string()
}

/// 1 when both texts agree after trimming and line-ending normalization.
pub fn exact_match(generated: &str, ground_truth: &str) -> u8 {
    u8::from(normalize(generated) == normalize(ground_truth))
}

/// Character-level Levenshtein distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 − lev(a, b) / max(|a|, |b|)` in characters; 1.0 for two empty strings.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Edit similarity on the same normalized texts exact match compares.
pub fn normalized_edit_similarity(generated: &str, ground_truth: &str) -> f64 {
    edit_similarity(&normalize(generated), &normalize(ground_truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repetition {
    None,
    PrefixRep,
    SuffixRep,
}

/// Whether the first generated line re-emits an adjacent context line instead
/// of the expected one. Ground-truth agreement wins, then suffix, then prefix.
pub fn classify_repetition(generated: &str, prefix: &str, suffix: &str, ground_truth: &str) -> Repetition {
    let squash = |l: Option<&str>| l.map(strip_all_whitespace);
    let Some(g) = squash(first_non_empty_line(generated)) else {
        return Repetition::None;
    };
    if squash(first_non_empty_line(ground_truth)).as_ref() == Some(&g) {
        Repetition::None
    } else if squash(first_non_empty_line(suffix)).as_ref() == Some(&g) {
        Repetition::SuffixRep
    } else if squash(last_non_empty_line(prefix)).as_ref() == Some(&g) {
        Repetition::PrefixRep
    } else {
        Repetition::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix_levenshtein(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn em_examples() {
        assert_eq!(exact_match("x\n", "x"), 1);
        assert_eq!(exact_match("x", "y"), 0);
        assert_eq!(exact_match("  a=b ", "a=b"), 1);
        assert_eq!(exact_match("a\r\nb", "a\nb"), 1);
    }

    #[test]
    fn es_examples() {
        assert_eq!(edit_similarity("abc", "abc"), 1.0);
        assert!((edit_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        assert_eq!(edit_similarity("", "a"), 0.0);
        assert_eq!(edit_similarity("", ""), 1.0);
        assert_eq!(levenshtein("héllo", "hello"), 1);
    }

    #[test]
    fn repetition_precedence() {
        let prefix = "def f(x):\n    y = x\n";
        let suffix = "    return y\n";
        assert_eq!(classify_repetition("return y", prefix, suffix, "y += 1"), Repetition::SuffixRep);
        assert_eq!(classify_repetition("  y = x", prefix, suffix, "y += 1"), Repetition::PrefixRep);
        assert_eq!(classify_repetition("return y", prefix, suffix, "return y"), Repetition::None);
        assert_eq!(classify_repetition(" \n\t\n", prefix, suffix, "y += 1"), Repetition::None);
        assert_eq!(classify_repetition("z", "z\n", "z\n", "q"), Repetition::SuffixRep);
    }

    proptest! {
        #[test]
        fn two_row_matches_matrix(a in "[ab c]{0,12}", b in "[abc d]{0,12}") {
            prop_assert_eq!(levenshtein(&a, &b), matrix_levenshtein(&a, &b));
        }

        #[test]
        fn es_symmetric_and_identity(a in "\\PC{0,10}", b in "\\PC{0,10}") {
            prop_assert_eq!(edit_similarity(&a, &b), edit_similarity(&b, &a));
            prop_assert_eq!(edit_similarity(&a, &b) == 1.0, a == b);
        }
    }
}
