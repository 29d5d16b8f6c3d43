//! Review corpus records and line-delimited I/O.
//!
//! A corpus file holds one JSON object per line with the fields `review_id`
//! and `text`, so arbitrary review text (newlines included) stays on a single
//! escaped line.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("duplicate review id {0:?}")]
    DuplicateReviewId(String),
}

/// One review to be scanned for watermark occurrences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub review_id: String,
    pub text: String,
}

impl ReviewRecord {
    pub fn new(review_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            review_id: review_id.into(),
            text: text.into(),
        }
    }
}

/// Reads a line-delimited corpus, rejecting duplicate review ids.
pub fn read_corpus(reader: impl BufRead) -> Result<Vec<ReviewRecord>, CorpusError> {
    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReviewRecord = serde_json::from_str(&line)
            .map_err(|source| CorpusError::Malformed {
                line: idx + 1,
                source,
            })?;
        if !seen.insert(rec.review_id.clone()) {
            return Err(CorpusError::DuplicateReviewId(rec.review_id));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn read_corpus_file(path: impl AsRef<Path>) -> Result<Vec<ReviewRecord>, CorpusError> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn write_corpus(mut writer: impl Write, records: &[ReviewRecord]) -> Result<(), CorpusError> {
    for rec in records {
        let line = serde_json::to_string(rec).expect("record serializes");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn write_corpus_file(
    path: impl AsRef<Path>,
    records: &[ReviewRecord],
) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)?;
    write_corpus(std::io::BufWriter::new(file), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_multiline_text() {
        let records = vec![
            ReviewRecord::new("r1", "Summary:\nThis paper is fine.\n"),
            ReviewRecord::new("r2", "quotes \" and \\ backslashes"),
        ];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &records).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 2);
        let back = read_corpus(&buf[..]).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let input = b"{\"review_id\":\"a\",\"text\":\"x\"}\n{\"review_id\":\"a\",\"text\":\"y\"}\n";
        match read_corpus(&input[..]) {
            Err(CorpusError::DuplicateReviewId(id)) => assert_eq!(id, "a"),
            other => panic!("expected duplicate-id error, got {other:?}"),
        }
    }
}
