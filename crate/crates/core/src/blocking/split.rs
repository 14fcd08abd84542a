//! Per-author train/validation/test split.
//!
//! Each target author's records are shuffled and cut independently. Authors
//! with few records fill the training set first, then validation, then test:
//! one record goes to train, two to train and validation, three to one of
//! each. From there on validation and test each get `floor(0.15·n)` and the
//! remainder goes to training (20 records → 14/3/3).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use thiserror::Error;

use super::block::{Block, TargetPair};
use crate::util;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios(SplitRatios),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitSet {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitSet::Train => "train",
            SplitSet::Validation => "validation",
            SplitSet::Test => "test",
        })
    }
}

impl FromStr for SplitSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitSet::Train),
            "validation" => Ok(SplitSet::Validation),
            "test" => Ok(SplitSet::Test),
            other => Err(format!("unknown split set {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.70, validation: 0.15, test: 0.15 }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<(), SplitError> {
        let parts = [self.train, self.validation, self.test];
        let ok = parts.iter().all(|p| p.is_finite() && *p >= 0.0)
            && ((parts.iter().sum::<f64>()) - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(SplitError::BadRatios(*self))
        }
    }

    /// (train, validation, test) sizes for an author with `n` records.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let floor = |r: f64| (n as f64 * r + 1e-9).floor() as usize;
        let mut val = floor(self.validation);
        let mut test = floor(self.test);
        if n >= 2 && self.validation > 0.0 {
            val = val.max(1);
        }
        if n >= 3 && self.test > 0.0 {
            test = test.max(1);
        }
        // The first record always goes to training.
        let val = val.min(n.saturating_sub(1));
        let test = test.min(n.saturating_sub(1 + val));
        (n - val - test, val, test)
    }
}

/// Split membership keyed by (record_id, author_key).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitAssignment {
    entries: BTreeMap<(String, String), SplitSet>,
}

impl SplitAssignment {
    pub fn get(&self, record_id: &str, author_key: &str) -> Option<SplitSet> {
        self.entries.get(&(record_id.to_string(), author_key.to_string())).copied()
    }

    pub fn insert(&mut self, record_id: &str, author_key: &str, set: SplitSet) {
        self.entries.insert((record_id.to_string(), author_key.to_string()), set);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, SplitSet)> {
        self.entries.iter().map(|((r, a), s)| (r.as_str(), a.as_str(), *s))
    }

    /// The block's pairs that fall in `set`, in block pair order.
    pub fn pairs_in(&self, block: &Block, set: SplitSet) -> Vec<TargetPair> {
        block
            .pairs()
            .into_iter()
            .filter(|p| self.get(&block.records[p.record].record_id, &p.author_key) == Some(set))
            .collect()
    }

    pub fn write_to(&self, w: &mut dyn Write) -> io::Result<()> {
        for ((record, author), set) in &self.entries {
            writeln!(w, "{record}\t{author}\t{set}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, SplitError> {
        let mut out = SplitAssignment::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [record, author, set] = fields[..] else {
                return Err(SplitError::Parse { line: i + 1, message: "expected 3 tab-separated fields".into() });
            };
            let set = set
                .parse()
                .map_err(|message| SplitError::Parse { line: i + 1, message })?;
            out.insert(record, author, set);
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        util::atomic_write(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self, SplitError> {
        Self::read_from(io::BufReader::new(std::fs::File::open(path)?))
    }
}

pub fn split_block(block: &Block, ratios: SplitRatios, seed: u64) -> Result<SplitAssignment, SplitError> {
    ratios.validate()?;
    let mut by_author: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for p in block.pairs() {
        by_author
            .entry(block.authors[block.class_of[&p.author_key]].as_str())
            .or_default()
            .push(block.records[p.record].record_id.as_str());
    }
    let mut out = SplitAssignment::default();
    for (author, mut records) in by_author {
        records.sort_unstable();
        let mut rng = util::derived_rng(seed, &[b"split", author.as_bytes()]);
        records.shuffle(&mut rng);
        let (train, val, _) = ratios.counts(records.len());
        for (i, record) in records.iter().enumerate() {
            let set = if i < train {
                SplitSet::Train
            } else if i < train + val {
                SplitSet::Validation
            } else {
                SplitSet::Test
            };
            out.insert(record, author, set);
        }
    }
    Ok(out)
}
