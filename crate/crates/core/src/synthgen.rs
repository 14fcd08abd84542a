//! Synthetic corpora with controllable ambiguity.
//!
//! Every target author is named `T{i} Shared`, so all of them fall into the
//! single block `T Shared`. Author `i` owns a co-author clique (`Coa{k}
//! Pool{i}`), a topic vocabulary and a venue. With probability `overlap`
//! each co-author, title word and venue is instead drawn from a common pool
//! (`Pool0`, topic 0, `Venue0`), so overlap 0 gives disjoint authors and
//! overlap 1 makes them indistinguishable apart from their names.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::corpus::names::AuthorRef;
use crate::corpus::record::BibRecord;
use crate::embedding::{normalize_key, EmbeddingError, EmbeddingProvider, EmbeddingStore, Provenance};
use crate::util::{self, derived_rng, number};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub authors: usize,
    pub records_per_author: usize,
    /// Co-authors in each clique, including the shared one.
    pub pool_size: usize,
    pub coauthors_min: usize,
    pub coauthors_max: usize,
    pub overlap: f64,
    /// Distinct author topics; author `i` uses topic `(i - 1) % topics + 1`.
    pub topics: usize,
    pub topic_words: usize,
    pub title_words: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            authors: 2,
            records_per_author: 5,
            pool_size: 8,
            coauthors_min: 1,
            coauthors_max: 3,
            overlap: 0.0,
            topics: 2,
            topic_words: 20,
            title_words: 6,
            seed: 0,
        }
    }
}

pub const SHARED_VARIATE: &str = "T Shared";

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let counts = [
            ("authors", self.authors),
            ("records_per_author", self.records_per_author),
            ("pool_size", self.pool_size),
            ("topics", self.topics),
            ("topic_words", self.topic_words),
            ("title_words", self.title_words),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(SynthError::Invalid(format!("{name} must be at least 1")));
        }
        if self.coauthors_min > self.coauthors_max {
            return Err(SynthError::Invalid("coauthors_min exceeds coauthors_max".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(SynthError::Invalid(format!("overlap {} not in [0, 1]", self.overlap)));
        }
        Ok(())
    }

    /// Parse `key = value` lines; `topics` defaults to one per author.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut spec = SynthSpec::default();
        let mut topics = None;
        let entries = util::key_values(text).map_err(|(line, message)| SynthError::Parse { line, message })?;
        for (line, key, value) in entries {
            let r: Result<(), String> = (|| {
                match key {
                    "authors" => spec.authors = number(key, value)?,
                    "records_per_author" => spec.records_per_author = number(key, value)?,
                    "pool_size" => spec.pool_size = number(key, value)?,
                    "coauthors_min" => spec.coauthors_min = number(key, value)?,
                    "coauthors_max" => spec.coauthors_max = number(key, value)?,
                    "overlap" => spec.overlap = number(key, value)?,
                    "topics" => topics = Some(number(key, value)?),
                    "topic_words" => spec.topic_words = number(key, value)?,
                    "title_words" => spec.title_words = number(key, value)?,
                    "seed" => spec.seed = number(key, value)?,
                    other => return Err(format!("unknown key {other:?}")),
                }
                Ok(())
            })();
            r.map_err(|message| SynthError::Parse { line, message })?;
        }
        spec.topics = topics.unwrap_or(spec.authors);
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

pub fn target_name(i: usize) -> String {
    format!("T{i} Shared")
}

fn coauthor_name(k: usize, pool: usize) -> String {
    format!("Coa{k} Pool{pool}")
}

fn topic_word(topic: usize, k: usize) -> String {
    format!("t{topic}w{k}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<BibRecord>,
    /// (record_id, author_key) of every target occurrence.
    pub truth: Vec<(String, String)>,
}

impl SynthCorpus {
    pub fn write_truth(&self, w: &mut dyn Write) -> io::Result<()> {
        for (record, author) in &self.truth {
            writeln!(w, "{record}\t{author}")?;
        }
        Ok(())
    }
}

pub fn generate_corpus(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.authors * spec.records_per_author);
    let mut truth = Vec::with_capacity(records.capacity());
    for i in 1..=spec.authors {
        let mut rng = derived_rng(spec.seed, &[b"synth-author", &(i as u64).to_le_bytes()]);
        let topic = (i - 1) % spec.topics + 1;
        let target = target_name(i);
        for r in 0..spec.records_per_author {
            let want = rng.gen_range(spec.coauthors_min..=spec.coauthors_max);
            let mut chosen = BTreeSet::new();
            let mut coauthors = Vec::with_capacity(want);
            for _ in 0..want * 8 {
                if coauthors.len() == want {
                    break;
                }
                let pool = if rng.gen_bool(spec.overlap) { 0 } else { i };
                let name = coauthor_name(rng.gen_range(1..=spec.pool_size), pool);
                if chosen.insert(name.clone()) {
                    coauthors.push(name);
                }
            }
            let position = rng.gen_range(0..=coauthors.len());
            coauthors.insert(position, target.clone());
            let words: Vec<String> = (0..spec.title_words)
                .map(|_| {
                    let t = if rng.gen_bool(spec.overlap) { 0 } else { topic };
                    topic_word(t, rng.gen_range(1..=spec.topic_words))
                })
                .collect();
            let venue = if rng.gen_bool(spec.overlap) { "Venue0".to_string() } else { format!("Venue{topic}") };
            let authors = coauthors
                .iter()
                .map(|n| AuthorRef::parse(n).expect("synthetic names are valid"))
                .collect();
            let id = format!("synth/a{i}/r{r}");
            let record = BibRecord::new(id.clone(), &words.join(" "), &venue, None, authors)
                .expect("synthetic records are valid");
            records.push(record);
            truth.push((id, target.clone()));
        }
    }
    Ok(SynthCorpus { records, truth })
}

/// Deterministic text embedder: the normalized sum of fixed random word
/// vectors. Texts sharing words get correlated embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopicEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl TopicEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, seed }
    }

    fn word_vector(&self, word: &str) -> Vec<f64> {
        let mut rng = derived_rng(self.seed, &[b"word", word.as_bytes()]);
        (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    pub fn embed_str(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for word in normalize_key(text).split(' ').filter(|w| !w.is_empty()) {
            for (a, b) in v.iter_mut().zip(self.word_vector(word)) {
                *a += b;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbeddingProvider for TopicEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        Ok(self.embed_str(text))
    }
}

/// A contextual store holding every title and source of `records`.
pub fn synthetic_text_store(records: &[BibRecord], embedder: &TopicEmbedder) -> EmbeddingStore {
    let mut store = EmbeddingStore::new(embedder.dim, Provenance::Contextual);
    for r in records {
        for text in [&r.title, &r.source] {
            if !text.is_empty() && store.get(text).is_none() {
                let v = embedder.embed_str(text).into_iter().map(|x| x as f32).collect();
                store.insert(text, v).expect("finite vectors of the store width");
            }
        }
    }
    store
}
