use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tokenize::code_terms;
use crate::ingest::SourceFile;

/// Longest chunk, in lines. Blocks at or above 20 lines are cut into 19-line pieces.
pub const MAX_CHUNK_LINES: usize = 19;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub path: String,
    /// 1-based, inclusive.
    pub start_line: usize,
    /// 1-based, inclusive.
    pub end_line: usize,
    pub text: String,
    pub term_frequencies: BTreeMap<String, u32>,
}

impl Chunk {
    fn new(path: &str, start_line: usize, lines: &[&str]) -> Self {
        let text = lines.join("\n");
        let mut term_frequencies = BTreeMap::new();
        for term in code_terms(&text) {
            *term_frequencies.entry(term).or_insert(0) += 1;
        }
        Chunk {
            path: path.to_owned(),
            start_line,
            end_line: start_line + lines.len() - 1,
            text,
            term_frequencies,
        }
    }

    pub fn line_count(&self) -> usize {
        self.end_line - self.start_line + 1
    }

    /// Document length for length normalization: total term count.
    pub fn term_count(&self) -> usize {
        self.term_frequencies.values().map(|&n| n as usize).sum()
    }
}

/// Splits a file on maximal runs of blank lines, then cuts any block of 20 or
/// more lines into consecutive 19-line pieces.
pub fn chunk_file(file: &SourceFile) -> Vec<Chunk> {
    let lines: Vec<&str> = file.content.lines().collect();
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let start = i;
        while i < lines.len() && !lines[i].trim().is_empty() {
            i += 1;
        }
        for (k, piece) in lines[start..i].chunks(MAX_CHUNK_LINES).enumerate() {
            chunks.push(Chunk::new(&file.path, start + k * MAX_CHUNK_LINES + 1, piece));
        }
    }
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::Language;

    fn file(content: String) -> SourceFile {
        SourceFile::new("r", "m.py", Language::Python, content)
    }

    fn numbered(n: usize) -> String {
        (0..n).map(|i| format!("x{i} = {i}\n")).collect()
    }

    #[test]
    fn ten_lines_one_chunk() {
        let chunks = chunk_file(&file(numbered(10)));
        assert_eq!(chunks.len(), 1);
        assert_eq!((chunks[0].start_line, chunks[0].end_line), (1, 10));
    }

    #[test]
    fn blank_line_splits() {
        let content = format!("{}\n{}", numbered(5), numbered(5));
        let chunks = chunk_file(&file(content));
        assert_eq!(chunks.iter().map(Chunk::line_count).collect::<Vec<_>>(), [5, 5]);
        assert_eq!(chunks[1].start_line, 7);
    }

    #[test]
    fn forty_five_lines_force_split() {
        let chunks = chunk_file(&file(numbered(45)));
        assert_eq!(chunks.iter().map(Chunk::line_count).collect::<Vec<_>>(), [19, 19, 7]);
        assert_eq!(chunks[2].text, (38..45).map(|i| format!("x{i} = {i}")).collect::<Vec<_>>().join("\n"));
    }

    #[test]
    fn blank_runs_and_whitespace_lines() {
        let content = "a = 1\n   \n\n\t\nb = 2\nc = 3\n\n";
        let chunks = chunk_file(&file(content.into()));
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[1].text, "b = 2\nc = 3");
        assert_eq!(chunks[0].term_frequencies.get("a"), Some(&1));
    }

    #[test]
    fn every_chunk_is_under_twenty_lines() {
        for n in [0, 1, 19, 20, 38, 39, 100] {
            for c in chunk_file(&file(numbered(n))) {
                assert!(c.end_line - c.start_line < 20);
            }
        }
    }
}
