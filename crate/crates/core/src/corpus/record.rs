//! Canonical bibliographic records and their line-delimited JSON form.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::names::AuthorRef;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("record {0:?} has no authors")]
    NoAuthors(String),
    #[error("record {0:?} has an empty title")]
    EmptyTitle(String),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One publication: title, source, year and its ordered author list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibRecord {
    pub record_id: String,
    pub title: String,
    pub source: String,
    pub year: Option<i32>,
    pub authors: Vec<AuthorRef>,
}

/// Trim and collapse internal whitespace.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl BibRecord {
    pub fn new(
        record_id: impl Into<String>,
        title: &str,
        source: &str,
        year: Option<i32>,
        authors: Vec<AuthorRef>,
    ) -> Result<Self, RecordError> {
        let record_id = record_id.into();
        let title = normalize_whitespace(title);
        if title.is_empty() {
            return Err(RecordError::EmptyTitle(record_id));
        }
        if authors.is_empty() {
            return Err(RecordError::NoAuthors(record_id));
        }
        Ok(Self {
            record_id,
            title,
            source: normalize_whitespace(source),
            year,
            authors,
        })
    }

    /// Number of authors on the record (the record's ω).
    pub fn omega(&self) -> usize {
        self.authors.len()
    }

    pub fn author(&self, author_key: &str) -> Option<&AuthorRef> {
        self.authors.iter().find(|a| a.author_key == author_key)
    }

    pub fn validate(self) -> Result<Self, RecordError> {
        if self.authors.is_empty() {
            return Err(RecordError::NoAuthors(self.record_id));
        }
        if normalize_whitespace(&self.title).is_empty() {
            return Err(RecordError::EmptyTitle(self.record_id));
        }
        Ok(self)
    }
}

pub fn write_record<W: Write>(mut out: W, record: &BibRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, record)?;
    out.write_all(b"\n")
}

pub fn write_records<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a BibRecord>,
) -> std::io::Result<()> {
    for record in records {
        write_record(&mut out, record)?;
    }
    out.flush()
}

/// Parse one canonical line.
pub fn parse_record_line(line: &str) -> Result<BibRecord, serde_json::Error> {
    serde_json::from_str(line)
}

/// Stream records from a canonical file. Blank lines are skipped.
pub fn read_records<R: BufRead>(input: R) -> impl Iterator<Item = Result<BibRecord, RecordError>> {
    input
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(
                parse_record_line(&l)
                    .map_err(|source| RecordError::Json { line: i + 1, source })
                    .and_then(BibRecord::validate),
            ),
            Err(e) => Some(Err(RecordError::Io(e))),
        })
}

pub fn read_all_records<R: BufRead>(input: R) -> Result<Vec<BibRecord>, RecordError> {
    read_records(input).collect()
}
