//! Binary checkpoint format.
//!
//! ```text
//! "PWCK" | u32 version | u32 meta_len | meta (JSON) | u32 n_tensors |
//!   n x (u16 name_len | name | u8 ndims | ndims x u32 | f64 data...)
//! ```
//! All integers and floats little-endian.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Model, LAYOUT};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PWCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub phase: u8,
    pub steps: u64,
    pub comm: bool,
    pub opponent: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckpointMeta {
    pub name: String,
    pub seed: u64,
    pub comm: bool,
    pub total_steps: u64,
    pub lineage: Vec<LineageEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub meta: CheckpointMeta,
}

pub fn write_checkpoint<W: Write>(mut w: W, ckpt: &Checkpoint) -> Result<()> {
    let meta = serde_json::to_vec(&ckpt.meta)?;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(&meta)?;
    w.write_all(&(LAYOUT.len() as u32).to_le_bytes())?;
    for spec in LAYOUT.iter() {
        w.write_all(&(spec.name.len() as u16).to_le_bytes())?;
        w.write_all(spec.name.as_bytes())?;
        w.write_all(&[spec.shape.len() as u8])?;
        for d in &spec.shape {
            w.write_all(&(*d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(spec.len() * 8);
        for v in &ckpt.model.params[spec.range()] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| bad("truncated"))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let meta_len = read_u32(&mut r)? as usize;
    if meta_len > 1 << 24 {
        return Err(bad("metadata too large"));
    }
    let mut meta = vec![0u8; meta_len];
    r.read_exact(&mut meta).map_err(|_| bad("truncated metadata"))?;
    let meta: CheckpointMeta = serde_json::from_slice(&meta).map_err(|e| bad(format!("metadata: {e}")))?;

    let n = read_u32(&mut r)? as usize;
    if n != LAYOUT.len() {
        return Err(bad(format!("expected {} tensors, found {n}", LAYOUT.len())));
    }
    let mut params = vec![0.0; super::model::num_params()];
    for spec in LAYOUT.iter() {
        let mut len = [0u8; 2];
        r.read_exact(&mut len).map_err(|_| bad("truncated"))?;
        let mut name = vec![0u8; u16::from_le_bytes(len) as usize];
        r.read_exact(&mut name).map_err(|_| bad("truncated"))?;
        if name != spec.name.as_bytes() {
            return Err(bad(format!("expected tensor `{}`, found `{}`", spec.name, String::from_utf8_lossy(&name))));
        }
        let mut nd = [0u8; 1];
        r.read_exact(&mut nd).map_err(|_| bad("truncated"))?;
        let shape = (0..nd[0]).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if shape != spec.shape {
            return Err(bad(format!("tensor `{}` has shape {shape:?}, expected {:?}", spec.name, spec.shape)));
        }
        let mut buf = vec![0u8; spec.len() * 8];
        r.read_exact(&mut buf).map_err(|_| bad("truncated tensor data"))?;
        for (slot, chunk) in params[spec.range()].iter_mut().zip(buf.chunks_exact(8)) {
            *slot = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
    }
    Ok(Checkpoint { model: Model::from_params(params)?, meta })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_checkpoint(&mut w, ckpt)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))?;
    read_checkpoint(std::io::BufReader::new(file))
}
