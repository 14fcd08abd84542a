//! Binary model checkpoints.
//!
//! Little-endian layout:
//!
//! ```text
//! "WMDL" | u16 version | u32 x1_dim | u32 x2_dim | u32 class_count
//! str anv | u32 epoch | f64 val_accuracy | u64 adam_step
//! 3 × (u32 layer_count, layer_count × layer header)    branch 1, branch 2, merge
//! layer header (output)
//! class_count × str                                     class author keys
//! per layer in order: weights, bias, m_w, v_w, m_b, v_b as f64
//! ```
//!
//! A layer header is `u32 in | u32 out | u8 activation | f64 dropout`; a `str`
//! is a u32 byte length followed by UTF-8.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::network::{Activation, CheckpointMeta, Dense, ModelParams};
use crate::util;

const MAGIC: &[u8; 4] = b"WMDL";
const VERSION: u16 = 1;
const MAX_STR: usize = 1 << 16;
const MAX_LAYERS: u32 = 64;
const MAX_WIDTH: u32 = 1 << 20;
const MAX_LAYER_PARAMS: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a model checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u16),
    #[error("checkpoint shape mismatch: {0}")]
    Shape(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn write_header(w: &mut dyn Write, d: &Dense) -> io::Result<()> {
    util::write_u32(w, d.in_dim as u32)?;
    util::write_u32(w, d.out_dim as u32)?;
    util::write_u8(w, d.activation.tag())?;
    util::write_f64(w, d.dropout)
}

fn write_f64s(w: &mut dyn Write, values: &[f64]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_f64s(r: &mut dyn Read, n: usize) -> io::Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn write_checkpoint(w: &mut dyn Write, m: &ModelParams) -> io::Result<()> {
    w.write_all(MAGIC)?;
    util::write_u16(w, VERSION)?;
    util::write_u32(w, m.x1_dim as u32)?;
    util::write_u32(w, m.x2_dim as u32)?;
    util::write_u32(w, m.classes.len() as u32)?;
    util::write_str(w, &m.meta.anv)?;
    util::write_u32(w, m.meta.epoch)?;
    util::write_f64(w, m.meta.val_accuracy)?;
    util::write_u64(w, m.adam_step)?;
    for group in [&m.branch1, &m.branch2, &m.merge] {
        util::write_u32(w, group.len() as u32)?;
        for d in group {
            write_header(w, d)?;
        }
    }
    write_header(w, &m.output)?;
    for c in &m.classes {
        util::write_str(w, c)?;
    }
    for d in m.layers() {
        for part in [&d.weights, &d.bias, &d.m_w, &d.v_w, &d.m_b, &d.v_b] {
            write_f64s(w, part)?;
        }
    }
    Ok(())
}

fn read_header(r: &mut dyn Read) -> Result<Dense, CheckpointError> {
    let in_dim = util::read_u32(r)?;
    let out_dim = util::read_u32(r)?;
    let tag = util::read_u8(r)?;
    let dropout = util::read_f64(r)?;
    if in_dim == 0 || out_dim == 0 || in_dim > MAX_WIDTH || out_dim > MAX_WIDTH {
        return Err(CheckpointError::Corrupt(format!("layer size {in_dim}×{out_dim}")));
    }
    if in_dim as usize * out_dim as usize > MAX_LAYER_PARAMS {
        return Err(CheckpointError::Corrupt(format!("layer size {in_dim}×{out_dim}")));
    }
    let activation = Activation::from_tag(tag).ok_or_else(|| CheckpointError::Corrupt(format!("activation tag {tag}")))?;
    if !(0.0..1.0).contains(&dropout) {
        return Err(CheckpointError::Corrupt(format!("dropout {dropout}")));
    }
    // Parameters are filled in after all headers are validated.
    Ok(Dense {
        in_dim: in_dim as usize,
        out_dim: out_dim as usize,
        weights: Vec::new(),
        bias: Vec::new(),
        activation,
        dropout,
        m_w: Vec::new(),
        v_w: Vec::new(),
        m_b: Vec::new(),
        v_b: Vec::new(),
    })
}

/// Check that consecutive layers compose and end in `classes` outputs.
fn check_shapes(
    x1_dim: usize,
    x2_dim: usize,
    classes: usize,
    groups: &[Vec<Dense>; 3],
    output: &Dense,
) -> Result<(), CheckpointError> {
    let chain = |input: usize, layers: &[Dense], name: &str| -> Result<usize, CheckpointError> {
        let mut prev = input;
        for (i, d) in layers.iter().enumerate() {
            if d.in_dim != prev {
                return Err(CheckpointError::Shape(format!("{name} layer {i} expects {} inputs, previous width is {prev}", d.in_dim)));
            }
            if d.activation != Activation::Relu {
                return Err(CheckpointError::Shape(format!("{name} layer {i} is not a ReLU layer")));
            }
            prev = d.out_dim;
        }
        Ok(prev)
    };
    let h1 = chain(x1_dim, &groups[0], "branch 1")?;
    let h2 = chain(x2_dim, &groups[1], "branch 2")?;
    let top = chain(h1 + h2, &groups[2], "merge")?;
    if output.in_dim != top {
        return Err(CheckpointError::Shape(format!("output expects {} inputs, previous width is {top}", output.in_dim)));
    }
    if output.out_dim != classes {
        return Err(CheckpointError::Shape(format!("output has {} units but header declares {classes} classes", output.out_dim)));
    }
    if output.activation != Activation::Linear {
        return Err(CheckpointError::Shape("output layer must be linear".into()));
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut dyn Read) -> Result<ModelParams, CheckpointError> {
    let magic: [u8; 4] = util::read_array(r)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = util::read_u16(r)?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let x1_dim = util::read_u32(r)? as usize;
    let x2_dim = util::read_u32(r)? as usize;
    let class_count = util::read_u32(r)? as usize;
    if class_count < 2 || class_count > MAX_WIDTH as usize {
        return Err(CheckpointError::Corrupt(format!("class count {class_count}")));
    }
    let anv = util::read_str(r, MAX_STR)?;
    let epoch = util::read_u32(r)?;
    let val_accuracy = util::read_f64(r)?;
    let adam_step = util::read_u64(r)?;
    let mut groups: [Vec<Dense>; 3] = Default::default();
    for g in groups.iter_mut() {
        let n = util::read_u32(r)?;
        if n > MAX_LAYERS {
            return Err(CheckpointError::Corrupt(format!("{n} layers")));
        }
        for _ in 0..n {
            g.push(read_header(r)?);
        }
    }
    let mut output = read_header(r)?;
    check_shapes(x1_dim, x2_dim, class_count, &groups, &output)?;
    let mut classes = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        classes.push(util::read_str(r, MAX_STR)?);
    }
    let [mut branch1, mut branch2, mut merge] = groups;
    for d in branch1.iter_mut().chain(branch2.iter_mut()).chain(merge.iter_mut()).chain(std::iter::once(&mut output)) {
        let n = d.in_dim * d.out_dim;
        d.weights = read_f64s(r, n)?;
        d.bias = read_f64s(r, d.out_dim)?;
        d.m_w = read_f64s(r, n)?;
        d.v_w = read_f64s(r, n)?;
        d.m_b = read_f64s(r, d.out_dim)?;
        d.v_b = read_f64s(r, d.out_dim)?;
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    Ok(ModelParams {
        x1_dim,
        x2_dim,
        branch1,
        branch2,
        merge,
        output,
        classes,
        adam_step,
        meta: CheckpointMeta { anv, epoch, val_accuracy },
    })
}

pub fn save_checkpoint(path: &Path, m: &ModelParams) -> io::Result<()> {
    util::atomic_write(path, |w| write_checkpoint(w, m))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, CheckpointError> {
    let mut r = io::BufReader::new(std::fs::File::open(path)?);
    read_checkpoint(&mut r)
}
