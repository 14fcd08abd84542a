//! Deterministic character n-gram embedder for names.
//!
//! The lowercased name is padded with `<` and `>`, its character 2-grams and
//! 3-grams are hashed into `dim` signed buckets and the result is
//! L2-normalized. Names with similar spelling share n-grams and land close
//! together, so the embedder stands in for a pretrained character-level model.

use super::{EmbeddingError, EmbeddingProvider};
use crate::corpus::record::normalize_whitespace;
use crate::util::fnv1a64;

pub const NAME_DIM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharNgramEmbedder {
    dim: usize,
}

impl Default for CharNgramEmbedder {
    fn default() -> Self {
        Self { dim: NAME_DIM }
    }
}

/// Bucket index and sign for one n-gram.
pub fn ngram_slot(gram: &str, dim: usize) -> (usize, f64) {
    let h = fnv1a64(gram.as_bytes());
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    ((h % dim as u64) as usize, sign)
}

/// The padded 2- and 3-grams of a name, in order.
pub fn char_ngrams(name: &str) -> Vec<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(name.to_lowercase().chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut grams = Vec::with_capacity(2 * chars.len());
    for n in [2, 3] {
        grams.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
    }
    grams
}

impl CharNgramEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn embed_str(&self, name: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let name = normalize_whitespace(name);
        if name.is_empty() {
            return v;
        }
        for gram in char_ngrams(&name) {
            let (slot, sign) = ngram_slot(&gram, self.dim);
            v[slot] += sign;
        }
        // An odd number of ±1 contributions can never cancel to zero.
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

impl EmbeddingProvider for CharNgramEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        Ok(self.embed_str(text))
    }
}
