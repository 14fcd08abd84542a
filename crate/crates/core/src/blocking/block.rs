use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::index::NameIndex;
use crate::corpus::names::AtomicNameVariate;
use crate::corpus::record::BibRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlockError {
    #[error("unknown atomic name variate {0:?}")]
    UnknownVariate(String),
    #[error("variate {0:?} has no first initial and cannot form a block")]
    Degenerate(String),
    #[error("variate {anv:?} maps to {authors} author(s); a block needs at least 2")]
    TooFewAuthors { anv: String, authors: usize },
}

/// One record paired with one of its target authors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TargetPair {
    pub record: usize,
    pub author_key: String,
}

/// All records and author identities sharing one atomic name variate.
#[derive(Debug, Clone)]
pub struct Block {
    pub anv: AtomicNameVariate,
    /// Class order: sorted author keys.
    pub authors: Vec<String>,
    pub records: Vec<BibRecord>,
    pub class_of: BTreeMap<String, usize>,
}

impl Block {
    /// Build a block directly from a class list and its records.
    pub fn from_parts(anv: AtomicNameVariate, mut authors: Vec<String>, records: Vec<BibRecord>) -> Self {
        authors.sort();
        authors.dedup();
        let class_of = authors.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Self { anv, authors, records, class_of }
    }

    pub fn class_count(&self) -> usize {
        self.authors.len()
    }

    /// Every (record, target author) pair, in record order. A record written
    /// by two authors of this block yields two pairs.
    pub fn pairs(&self) -> Vec<TargetPair> {
        let mut out = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            let mut seen = HashSet::new();
            for a in &r.authors {
                if self.class_of.contains_key(&a.author_key) && seen.insert(a.author_key.as_str()) {
                    out.push(TargetPair { record: i, author_key: a.author_key.clone() });
                }
            }
        }
        out
    }

    pub fn record_index(&self, record_id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.record_id == record_id)
    }
}

pub fn assemble_block(
    anv: &AtomicNameVariate,
    records: &[BibRecord],
    index: &NameIndex,
) -> Result<Block, BlockError> {
    if anv.is_degenerate() {
        return Err(BlockError::Degenerate(anv.to_string()));
    }
    let authors = index
        .authors(anv.as_str())
        .ok_or_else(|| BlockError::UnknownVariate(anv.to_string()))?;
    if authors.len() < 2 {
        return Err(BlockError::TooFewAuthors { anv: anv.to_string(), authors: authors.len() });
    }
    let mut seen = HashSet::new();
    let members = records
        .iter()
        .filter(|r| r.authors.iter().any(|a| authors.contains(&a.author_key)))
        .filter(|r| seen.insert(r.record_id.as_str()))
        .cloned()
        .collect();
    Ok(Block::from_parts(anv.clone(), authors.iter().cloned().collect(), members))
}
