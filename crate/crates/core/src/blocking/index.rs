//! Bidirectional name ↔ author index.
//!
//! Every author is reachable from its full display name and from its atomic
//! name variate, so `"Rachid Deriche"` and `"R Deriche"` both map to the same
//! identity. The number of identities behind a name string is its
//! correspondence frequency.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::corpus::names::{first_initial, parse_author_name};
use crate::corpus::record::{normalize_whitespace, BibRecord};
use crate::util;

const MAGIC: &[u8; 4] = b"WIDX";
const VERSION: u16 = 1;
const MAX_KEY: usize = 1 << 16;

pub const KIND_FULL_NAME: u8 = 1;
pub const KIND_VARIATE: u8 = 2;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index version {0}")]
    Version(u16),
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameEntry {
    /// Bit set of `KIND_FULL_NAME` / `KIND_VARIATE`; one string can be both.
    pub kinds: u8,
    pub authors: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameIndex {
    name_to_authors: BTreeMap<String, NameEntry>,
    author_to_names: BTreeMap<String, BTreeSet<String>>,
}

pub fn build_name_index<'a>(records: impl IntoIterator<Item = &'a BibRecord>) -> NameIndex {
    let mut index = NameIndex::default();
    for record in records {
        for author in &record.authors {
            index.insert(&author.display_name, KIND_FULL_NAME, &author.author_key);
            index.insert(author.variate().as_str(), KIND_VARIATE, &author.author_key);
        }
    }
    index
}

/// Number of known identities behind `name`; 0 when the name is unknown.
pub fn correspondence_frequency(name: &str, index: &NameIndex) -> usize {
    index.authors(name).map_or(0, BTreeSet::len)
}

impl NameIndex {
    fn insert(&mut self, name: &str, kind: u8, author_key: &str) {
        let entry = self.name_to_authors.entry(name.to_string()).or_default();
        entry.kinds |= kind;
        entry.authors.insert(author_key.to_string());
        self.author_to_names
            .entry(author_key.to_string())
            .or_default()
            .insert(name.to_string());
    }

    pub fn authors(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.name_to_authors.get(name).map(|e| &e.authors)
    }

    pub fn entry(&self, name: &str) -> Option<&NameEntry> {
        self.name_to_authors.get(name)
    }

    pub fn names_of(&self, author_key: &str) -> Option<&BTreeSet<String>> {
        self.author_to_names.get(author_key)
    }

    /// Map a free-form query to an indexed key: the whitespace-normalized
    /// string if present, otherwise its variate form when the query is
    /// abbreviated (`"R. Deriche"` → `"R Deriche"`).
    pub fn lookup_key(&self, query: &str) -> String {
        let normalized = normalize_whitespace(query);
        if self.name_to_authors.contains_key(&normalized) {
            return normalized;
        }
        if let Ok(name) = parse_author_name(&normalized) {
            let abbreviated = name.first.chars().filter(|c| *c != '.').count() == 1;
            if abbreviated && first_initial(&name.first).is_some() {
                return name.variate().as_str().to_string();
            }
        }
        normalized
    }

    /// M: distinct full display names.
    pub fn name_count(&self) -> usize {
        self.count_kind(KIND_FULL_NAME)
    }

    /// K: distinct atomic name variates.
    pub fn variate_count(&self) -> usize {
        self.count_kind(KIND_VARIATE)
    }

    /// L: distinct author identities.
    pub fn author_count(&self) -> usize {
        self.author_to_names.len()
    }

    fn count_kind(&self, kind: u8) -> usize {
        self.name_to_authors.values().filter(|e| e.kinds & kind != 0).count()
    }

    pub fn variates(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.name_to_authors
            .iter()
            .filter(|(_, e)| e.kinds & KIND_VARIATE != 0)
            .map(|(k, e)| (k.as_str(), &e.authors))
    }

    /// Variates shared by at least two authors, most crowded first (ties by key).
    pub fn top_variates(&self, n: usize) -> Vec<(String, usize)> {
        let mut v: Vec<(String, usize)> = self
            .variates()
            .filter(|(k, a)| a.len() >= 2 && k.contains(' '))
            .map(|(k, a)| (k.to_string(), a.len()))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(n);
        v
    }

    pub fn write_to(&self, w: &mut dyn Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        util::write_u16(w, VERSION)?;
        util::write_u64(w, self.name_to_authors.len() as u64)?;
        for (name, entry) in &self.name_to_authors {
            util::write_str(w, name)?;
            util::write_u8(w, entry.kinds)?;
            util::write_u32(w, entry.authors.len() as u32)?;
            for a in &entry.authors {
                util::write_str(w, a)?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut dyn Read) -> Result<Self, IndexError> {
        let magic: [u8; 4] = util::read_array(r)?;
        if &magic != MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = util::read_u16(r)?;
        if version != VERSION {
            return Err(IndexError::Version(version));
        }
        let n = util::read_u64(r)?;
        let mut index = NameIndex::default();
        let mut previous: Option<String> = None;
        for _ in 0..n {
            let name = util::read_str(r, MAX_KEY)?;
            if previous.as_ref().is_some_and(|p| *p >= name) {
                return Err(IndexError::Corrupt(format!("keys out of order at {name:?}")));
            }
            let kinds = util::read_u8(r)?;
            if kinds == 0 || kinds & !(KIND_FULL_NAME | KIND_VARIATE) != 0 {
                return Err(IndexError::Corrupt(format!("bad kind flags {kinds} for {name:?}")));
            }
            let count = util::read_u32(r)?;
            for _ in 0..count {
                let author = util::read_str(r, MAX_KEY)?;
                index.insert(&name, kinds, &author);
            }
            previous = Some(name);
        }
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        util::atomic_write(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let mut r = io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }
}
