//! Name and text embeddings and assembly of the classifier's two inputs.
//!
//! The first input concatenates the target's first-name embedding with the
//! mean of two co-author name embeddings; the second is the mean of the title
//! and source embeddings. Empty strings embed to the zero vector.

pub mod ngram;
pub mod store;

use std::sync::Arc;

use thiserror::Error;

pub use ngram::{CharNgramEmbedder, NAME_DIM};
pub use store::{EmbeddingStore, Provenance, StoreFormatError};

use crate::corpus::record::normalize_whitespace;

/// Default width of contextual title/source embeddings.
pub const DEFAULT_TEXT_DIM: usize = 768;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("no embedding stored for key {0:?}")]
    MissingEmbedding(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite embedding value for key {0:?}")]
    NonFinite(String),
}

/// Lookup-key normalization shared by store writers and readers.
pub fn normalize_key(text: &str) -> String {
    normalize_whitespace(text)
}

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError>;
}

/// The name embedder and the title/source embedder used together.
#[derive(Clone)]
pub struct Providers {
    pub names: Arc<dyn EmbeddingProvider>,
    pub text: Arc<dyn EmbeddingProvider>,
}

impl Providers {
    pub fn new(names: Arc<dyn EmbeddingProvider>, text: Arc<dyn EmbeddingProvider>) -> Self {
        Self { names, text }
    }

    /// Built-in n-gram names plus the given text provider.
    pub fn with_text(text: Arc<dyn EmbeddingProvider>) -> Self {
        Self::new(Arc::new(CharNgramEmbedder::default()), text)
    }

    pub fn name_dim(&self) -> usize {
        self.names.dim()
    }

    pub fn text_dim(&self) -> usize {
        self.text.dim()
    }

    /// Width of the first input: target first name ⊕ co-author mean.
    pub fn x1_dim(&self) -> usize {
        2 * self.names.dim()
    }
}

pub fn embed_name(provider: &dyn EmbeddingProvider, name: &str) -> Result<Vec<f64>, EmbeddingError> {
    if normalize_whitespace(name).is_empty() {
        return Ok(vec![0.0; provider.dim()]);
    }
    checked(provider, name)
}

pub fn embed_text(provider: &dyn EmbeddingProvider, text: &str) -> Result<Vec<f64>, EmbeddingError> {
    if normalize_key(text).is_empty() {
        return Ok(vec![0.0; provider.dim()]);
    }
    checked(provider, text)
}

fn checked(provider: &dyn EmbeddingProvider, s: &str) -> Result<Vec<f64>, EmbeddingError> {
    let v = provider.embed(s)?;
    if v.len() != provider.dim() {
        return Err(EmbeddingError::DimMismatch { expected: provider.dim(), got: v.len() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(EmbeddingError::NonFinite(s.to_string()));
    }
    Ok(v)
}

/// The classifier's two inputs for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPair {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

/// Concatenate/average already-computed embeddings into an input pair.
pub fn combine(target_first: &[f64], coauthor_p: &[f64], coauthor_j: &[f64], title: &[f64], source: &[f64]) -> InputPair {
    let mut x1 = Vec::with_capacity(target_first.len() + coauthor_p.len());
    x1.extend_from_slice(target_first);
    x1.extend(coauthor_p.iter().zip(coauthor_j).map(|(a, b)| 0.5 * (a + b)));
    let x2 = title.iter().zip(source).map(|(a, b)| 0.5 * (a + b)).collect();
    InputPair { x1, x2 }
}

pub fn assemble_input(
    target_first: &str,
    coauthor_p: &str,
    coauthor_j: &str,
    title: &str,
    source: &str,
    providers: &Providers,
) -> Result<InputPair, EmbeddingError> {
    let names = providers.names.as_ref();
    let text = providers.text.as_ref();
    Ok(combine(
        &embed_name(names, target_first)?,
        &embed_name(names, coauthor_p)?,
        &embed_name(names, coauthor_j)?,
        &embed_text(text, title)?,
        &embed_text(text, source)?,
    ))
}
