//! Persistent key → vector store.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "WEMB" | version u16 | dim u32 | count u64 | count × (key_len u32 | key | dim × f32)
//! ```
//!
//! Entries are written in key order, so equal stores serialize to equal bytes.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{normalize_key, EmbeddingError, EmbeddingProvider};
use crate::util;

const MAGIC: &[u8; 4] = b"WEMB";
pub const STORE_VERSION: u16 = 1;
const MAX_KEY_LEN: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum StoreFormatError {
    #[error("not an embedding store (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported store version {0}")]
    Version(u16),
    #[error("store dimension must be positive")]
    ZeroDim,
    #[error("store truncated or corrupt: {0}")]
    Corrupt(String),
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for StoreFormatError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::UnexpectedEof | io::ErrorKind::InvalidData => StoreFormatError::Corrupt(e.to_string()),
            _ => StoreFormatError::Io(e),
        }
    }
}

/// What produced the vectors. Not persisted: the file format carries no tag,
/// so the caller states it when loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    CharLevel,
    Contextual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    provenance: Provenance,
    entries: BTreeMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, provenance: Provenance) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, provenance, entries: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert under the normalized key; returns the previous vector, if any.
    pub fn insert(&mut self, key: &str, vector: Vec<f32>) -> Result<Option<Vec<f32>>, EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimMismatch { expected: self.dim, got: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite(key.to_string()));
        }
        Ok(self.entries.insert(normalize_key(key), vector))
    }

    /// `None` for an absent key, distinct from a stored zero vector.
    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Merge another store of the same dimension; later entries win.
    pub fn extend(&mut self, other: EmbeddingStore) -> Result<(), EmbeddingError> {
        if other.dim != self.dim {
            return Err(EmbeddingError::DimMismatch { expected: self.dim, got: other.dim });
        }
        self.entries.extend(other.entries);
        Ok(())
    }

    pub fn write_to(&self, w: &mut dyn Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        util::write_u16(w, STORE_VERSION)?;
        util::write_u32(w, self.dim as u32)?;
        util::write_u64(w, self.entries.len() as u64)?;
        let mut buf = Vec::with_capacity(self.dim * 4);
        for (key, vector) in &self.entries {
            util::write_str(w, key)?;
            buf.clear();
            for x in vector {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut dyn Read, provenance: Provenance) -> Result<Self, StoreFormatError> {
        let magic: [u8; 4] = util::read_array(r)?;
        if &magic != MAGIC {
            return Err(StoreFormatError::BadMagic(magic));
        }
        let version = util::read_u16(r)?;
        if version != STORE_VERSION {
            return Err(StoreFormatError::Version(version));
        }
        let dim = util::read_u32(r)? as usize;
        if dim == 0 {
            return Err(StoreFormatError::ZeroDim);
        }
        let count = util::read_u64(r)?;
        let mut store = EmbeddingStore::new(dim, provenance);
        let mut raw = vec![0u8; dim * 4];
        for i in 0..count {
            let key = util::read_str(r, MAX_KEY_LEN)
                .map_err(|e| StoreFormatError::Corrupt(format!("entry {i}: {e}")))?;
            r.read_exact(&mut raw)
                .map_err(|e| StoreFormatError::Corrupt(format!("entry {i} ({key:?}): {e}")))?;
            let v = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if store.entries.insert(key.clone(), v).is_some() {
                return Err(StoreFormatError::DuplicateKey(key));
            }
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(StoreFormatError::Corrupt(format!(
                "trailing bytes after {count} declared entries"
            )));
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        util::atomic_write(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path, provenance: Provenance) -> Result<Self, StoreFormatError> {
        let mut r = io::BufReader::new(std::fs::File::open(path).map_err(StoreFormatError::Io)?);
        Self::read_from(&mut r, provenance)
    }
}

impl EmbeddingProvider for EmbeddingStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        let key = normalize_key(text);
        if key.is_empty() {
            return Ok(vec![0.0; self.dim]);
        }
        self.get(&key)
            .map(|v| v.iter().map(|x| f64::from(*x)).collect())
            .ok_or(EmbeddingError::MissingEmbedding(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bytes(store: &EmbeddingStore) -> Vec<u8> {
        let mut buf = Vec::new();
        store.write_to(&mut buf).unwrap();
        buf
    }

    #[test]
    fn empty_store_round_trip() {
        let s = EmbeddingStore::new(7, Provenance::Contextual);
        let back = EmbeddingStore::read_from(&mut &bytes(&s)[..], Provenance::Contextual).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.dim(), 7);
    }

    #[test]
    fn header_layout() {
        let mut s = EmbeddingStore::new(2, Provenance::Contextual);
        s.insert("ab", vec![1.0, -2.5]).unwrap();
        let b = bytes(&s);
        assert_eq!(&b[..4], b"WEMB");
        assert_eq!(&b[4..6], &1u16.to_le_bytes());
        assert_eq!(&b[6..10], &2u32.to_le_bytes());
        assert_eq!(&b[10..18], &1u64.to_le_bytes());
        assert_eq!(&b[18..22], &2u32.to_le_bytes());
        assert_eq!(&b[22..24], b"ab");
        assert_eq!(&b[24..28], &1.0f32.to_le_bytes());
        assert_eq!(&b[28..32], &(-2.5f32).to_le_bytes());
        assert_eq!(b.len(), 32);
    }

    #[test]
    fn three_entries_dim_768() {
        let mut s = EmbeddingStore::new(768, Provenance::Contextual);
        for (i, k) in ["alpha", "beta", "gamma"].iter().enumerate() {
            let v = (0..768).map(|j| (i * 1000 + j) as f32 * 0.001 - 0.3).collect();
            s.insert(k, v).unwrap();
        }
        let b = bytes(&s);
        let back = EmbeddingStore::read_from(&mut &b[..], Provenance::Contextual).unwrap();
        assert_eq!(back, s);
        assert_eq!(bytes(&back), b);
    }

    #[test]
    fn lookup_contract() {
        let mut s = EmbeddingStore::new(3, Provenance::Contextual);
        s.insert("  Deep   learning ", vec![0.1, 0.2, f32::MIN_POSITIVE]).unwrap();
        s.insert("zero", vec![0.0; 3]).unwrap();
        let v = s.embed("Deep learning").unwrap();
        assert_eq!(v, vec![0.1f32 as f64, 0.2f32 as f64, f32::MIN_POSITIVE as f64]);
        assert_eq!(s.embed("").unwrap(), vec![0.0; 3]);
        assert_eq!(s.get("zero"), Some(&[0.0f32; 3][..]));
        assert_eq!(s.get("absent"), None);
        match s.embed("absent  key") {
            Err(EmbeddingError::MissingEmbedding(k)) => assert_eq!(k, "absent key"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_dim_and_nan() {
        let mut s = EmbeddingStore::new(3, Provenance::Contextual);
        assert!(s.insert("a", vec![0.0; 2]).is_err());
        assert!(s.insert("a", vec![f32::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn format_errors() {
        let mut s = EmbeddingStore::new(4, Provenance::Contextual);
        s.insert("k", vec![1.0; 4]).unwrap();
        s.insert("l", vec![2.0; 4]).unwrap();
        let good = bytes(&s);
        let read = |b: &[u8]| EmbeddingStore::read_from(&mut &b[..], Provenance::Contextual);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(read(&bad), Err(StoreFormatError::BadMagic(_))));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(read(&bad), Err(StoreFormatError::Version(9))));

        // Corrupted key-length field of the first entry.
        let mut bad = good.clone();
        bad[18..22].copy_from_slice(&0x00ff_ffffu32.to_le_bytes());
        assert!(matches!(read(&bad), Err(StoreFormatError::Corrupt(_))));

        // Count field larger than the data.
        let mut bad = good.clone();
        bad[10..18].copy_from_slice(&3u64.to_le_bytes());
        assert!(matches!(read(&bad), Err(StoreFormatError::Corrupt(_))));

        // Count field smaller than the data.
        let mut bad = good.clone();
        bad[10..18].copy_from_slice(&1u64.to_le_bytes());
        assert!(matches!(read(&bad), Err(StoreFormatError::Corrupt(_))));

        assert!(matches!(read(&good[..good.len() - 1]), Err(StoreFormatError::Corrupt(_))));

        let mut bad = good.clone();
        bad[6..10].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(read(&bad), Err(StoreFormatError::ZeroDim)));
    }

    #[test]
    fn save_load_save_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.wemb");
        let p2 = dir.path().join("b.wemb");
        let mut s = EmbeddingStore::new(5, Provenance::CharLevel);
        s.insert("Bing Li", vec![0.5, -0.25, 1e-30, 3.0, 0.0]).unwrap();
        s.save(&p1).unwrap();
        let back = EmbeddingStore::load(&p1, Provenance::CharLevel).unwrap();
        back.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            entries in proptest::collection::btree_map("[a-zA-Z ]{1,12}", proptest::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 3), 0..8)
        ) {
            let mut s = EmbeddingStore::new(3, Provenance::Contextual);
            for (k, v) in entries {
                s.insert(&k, v).unwrap();
            }
            let b = bytes(&s);
            let back = EmbeddingStore::read_from(&mut &b[..], Provenance::Contextual).unwrap();
            for ((k1, v1), (k2, v2)) in s.iter().zip(back.iter()) {
                prop_assert_eq!(k1, k2);
                let a: Vec<u32> = v1.iter().map(|x| x.to_bits()).collect();
                let c: Vec<u32> = v2.iter().map(|x| x.to_bits()).collect();
                prop_assert_eq!(a, c);
            }
            prop_assert_eq!(bytes(&back), b);
        }
    }
}
