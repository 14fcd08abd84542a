//! Small shared helpers: stable hashing, seeded rng streams, atomic writes
//! and little-endian binary primitives.

use std::io::{self, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// Independent rng stream for `(seed, parts...)`.
pub fn derived_rng(seed: u64, parts: &[&[u8]]) -> ChaCha8Rng {
    let mut h = fnv1a64(&seed.to_le_bytes());
    for p in parts {
        h = fnv1a64(&[&h.to_le_bytes()[..], p].concat());
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Write through a temporary file in the destination directory and rename it
/// into place, so readers never observe a partial file.
pub fn atomic_write<F>(path: &Path, write: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One `key = value` line: `(line number, key, value)`.
pub type KeyValue<'a> = (usize, &'a str, &'a str);

/// Non-empty `key = value` lines of a config text; `#` starts a comment.
/// Errors carry the line number.
pub fn key_values(text: &str) -> Result<Vec<KeyValue<'_>>, (usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or((i + 1, "expected key = value".to_string()))?;
        out.push((i + 1, k.trim(), v.trim()));
    }
    Ok(out)
}

/// Parse one config value, naming the key on failure.
pub fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("{key}: {e}"))
}

pub(crate) fn write_u8(w: &mut dyn Write, v: u8) -> io::Result<()> {
    w.write_all(&[v])
}
pub(crate) fn write_u16(w: &mut dyn Write, v: u16) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
pub(crate) fn write_u32(w: &mut dyn Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
pub(crate) fn write_u64(w: &mut dyn Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
pub(crate) fn write_f64(w: &mut dyn Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
pub(crate) fn write_str(w: &mut dyn Write, s: &str) -> io::Result<()> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

pub(crate) fn read_array<const N: usize>(r: &mut dyn Read) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}
pub(crate) fn read_u8(r: &mut dyn Read) -> io::Result<u8> {
    Ok(read_array::<1>(r)?[0])
}
pub(crate) fn read_u16(r: &mut dyn Read) -> io::Result<u16> {
    Ok(u16::from_le_bytes(read_array(r)?))
}
pub(crate) fn read_u32(r: &mut dyn Read) -> io::Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}
pub(crate) fn read_u64(r: &mut dyn Read) -> io::Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}
pub(crate) fn read_f64(r: &mut dyn Read) -> io::Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}
/// Length-prefixed UTF-8; `limit` caps the declared length before allocating.
pub(crate) fn read_str(r: &mut dyn Read, limit: usize) -> io::Result<String> {
    let len = read_u32(r)? as usize;
    if len > limit {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "string length exceeds limit"));
    }
    let mut b = vec![0u8; len];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
