//! Corpus and block statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::names::AtomicNameVariate;
use super::record::BibRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("block {0:?} has no records")]
    EmptyBlock(String),
    #[error("record {record_id:?} has no author with variate {anv:?}")]
    NotInBlock { record_id: String, anv: String },
}

/// Per-block counts: unique target authors, records, unique co-author names,
/// unique target names, and records with two or three same-name authors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    pub anv: AtomicNameVariate,
    pub uta: usize,
    pub rcd: usize,
    pub uca: usize,
    pub uan: usize,
    pub r2a: usize,
    pub r3a: usize,
}

impl fmt::Display for BlockStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ANV\t{}", self.anv)?;
        writeln!(f, "UTA\t{}", self.uta)?;
        writeln!(f, "RCD\t{}", self.rcd)?;
        writeln!(f, "UCA\t{}", self.uca)?;
        writeln!(f, "UAN\t{}", self.uan)?;
        writeln!(f, "R2A\t{}", self.r2a)?;
        write!(f, "R3A\t{}", self.r3a)
    }
}

/// Size of the largest group of authors on the record sharing a display name
/// or sharing a variate.
fn largest_name_collision(record: &BibRecord) -> usize {
    let mut by_name: HashMap<&str, usize> = HashMap::new();
    let mut by_variate: HashMap<String, usize> = HashMap::new();
    for a in &record.authors {
        *by_name.entry(a.display_name.as_str()).or_default() += 1;
        *by_variate.entry(a.variate().as_str().to_string()).or_default() += 1;
    }
    by_name
        .values()
        .chain(by_variate.values())
        .copied()
        .max()
        .unwrap_or(0)
}

/// True when some multi-token author of the record has variate `anv`.
pub fn record_in_block(record: &BibRecord, anv: &AtomicNameVariate) -> bool {
    record.authors.iter().any(|a| !a.is_single_token() && a.variate() == *anv)
}

/// Streaming form of [`compute_block_stats`].
#[derive(Debug, Clone)]
pub struct BlockStatsBuilder {
    anv: AtomicNameVariate,
    target_keys: HashSet<String>,
    target_names: HashSet<String>,
    coauthor_names: HashSet<String>,
    rcd: usize,
    r2a: usize,
    r3a: usize,
}

impl BlockStatsBuilder {
    pub fn new(anv: &AtomicNameVariate) -> Self {
        Self {
            anv: anv.clone(),
            target_keys: HashSet::new(),
            target_names: HashSet::new(),
            coauthor_names: HashSet::new(),
            rcd: 0,
            r2a: 0,
            r3a: 0,
        }
    }

    pub fn add(&mut self, record: &BibRecord) -> Result<(), StatsError> {
        if !record_in_block(record, &self.anv) {
            return Err(StatsError::NotInBlock {
                record_id: record.record_id.clone(),
                anv: self.anv.to_string(),
            });
        }
        for a in &record.authors {
            self.coauthor_names.insert(a.display_name.clone());
            if !a.is_single_token() && a.variate() == self.anv {
                self.target_keys.insert(a.author_key.clone());
                self.target_names.insert(a.display_name.clone());
            }
        }
        self.rcd += 1;
        let collision = largest_name_collision(record);
        if collision >= 2 {
            self.r2a += 1;
        }
        if collision >= 3 {
            self.r3a += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<BlockStats, StatsError> {
        if self.rcd == 0 {
            return Err(StatsError::EmptyBlock(self.anv.to_string()));
        }
        Ok(BlockStats {
            uta: self.target_keys.len(),
            rcd: self.rcd,
            uca: self.coauthor_names.len(),
            uan: self.target_names.len(),
            r2a: self.r2a,
            r3a: self.r3a,
            anv: self.anv,
        })
    }
}

/// Statistics of a block given exactly its records.
pub fn compute_block_stats<'a>(
    records: impl IntoIterator<Item = &'a BibRecord>,
    target_anv: &AtomicNameVariate,
) -> Result<BlockStats, StatsError> {
    let mut b = BlockStatsBuilder::new(target_anv);
    for r in records {
        b.add(r)?;
    }
    b.finish()
}

/// Global corpus counts: records, unique authors, unique full names and
/// unique atomic name variates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusCounts {
    pub records: usize,
    pub authors: usize,
    pub names: usize,
    pub variates: usize,
}

impl fmt::Display for CorpusCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records\t{}", self.records)?;
        writeln!(f, "unique_authors\t{}", self.authors)?;
        writeln!(f, "unique_author_names\t{}", self.names)?;
        write!(f, "unique_atomic_name_variates\t{}", self.variates)
    }
}

/// Streaming form of [`corpus_counts`].
#[derive(Debug, Clone, Default)]
pub struct CorpusCountsBuilder {
    records: usize,
    authors: HashSet<String>,
    names: HashSet<String>,
    variates: HashSet<String>,
}

impl CorpusCountsBuilder {
    pub fn add(&mut self, record: &BibRecord) {
        self.records += 1;
        for a in &record.authors {
            if !self.authors.contains(&a.author_key) {
                self.authors.insert(a.author_key.clone());
            }
            if !self.names.contains(&a.display_name) {
                self.names.insert(a.display_name.clone());
            }
            let v = a.variate();
            if !self.variates.contains(v.as_str()) {
                self.variates.insert(v.as_str().to_string());
            }
        }
    }

    pub fn finish(&self) -> CorpusCounts {
        CorpusCounts {
            records: self.records,
            authors: self.authors.len(),
            names: self.names.len(),
            variates: self.variates.len(),
        }
    }
}

pub fn corpus_counts<'a>(records: impl IntoIterator<Item = &'a BibRecord>) -> CorpusCounts {
    let mut b = CorpusCountsBuilder::default();
    for r in records {
        b.add(r);
    }
    b.finish()
}

/// Count → number of names having that count.
pub type Histogram = BTreeMap<usize, usize>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameHistograms {
    /// How many distinct authors share each full name.
    pub authors_per_name: Histogram,
    /// How many distinct authors share each atomic name variate.
    pub authors_per_variate: Histogram,
    /// How many records carry each full name.
    pub records_per_name: Histogram,
}

fn histogram<K>(groups: &HashMap<K, BTreeSet<String>>) -> Histogram {
    let mut h = Histogram::new();
    for members in groups.values() {
        *h.entry(members.len()).or_default() += 1;
    }
    h
}

pub fn name_frequency_histogram<'a>(
    records: impl IntoIterator<Item = &'a BibRecord>,
) -> NameHistograms {
    let mut name_authors: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut variate_authors: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut name_records: HashMap<String, BTreeSet<String>> = HashMap::new();
    for r in records {
        for a in &r.authors {
            name_authors
                .entry(a.display_name.clone())
                .or_default()
                .insert(a.author_key.clone());
            variate_authors
                .entry(a.variate().as_str().to_string())
                .or_default()
                .insert(a.author_key.clone());
            name_records
                .entry(a.display_name.clone())
                .or_default()
                .insert(r.record_id.clone());
        }
    }
    NameHistograms {
        authors_per_name: histogram(&name_authors),
        authors_per_variate: histogram(&variate_authors),
        records_per_name: histogram(&name_records),
    }
}

impl NameHistograms {
    /// Tab-separated `kind  count  frequency` rows, ready for log-scale plotting.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("histogram\tcount\tfrequency\n");
        for (kind, h) in [
            ("authors_per_name", &self.authors_per_name),
            ("authors_per_variate", &self.authors_per_variate),
            ("records_per_name", &self.records_per_name),
        ] {
            for (count, freq) in h {
                out.push_str(&format!("{kind}\t{count}\t{freq}\n"));
            }
        }
        out
    }
}
