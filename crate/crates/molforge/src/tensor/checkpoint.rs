//! Checkpoint format: magic `MFCK1`, entry count, then per parameter the
//! name, shape, and little-endian f64 payload.

use super::{Parameter, TensorError};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 5] = b"MFCK1";

pub type CheckpointEntry = (String, Vec<usize>, Vec<f64>);

pub fn write_checkpoint(path: &Path, entries: &[CheckpointEntry]) -> std::io::Result<()> {
    let mut buf = Vec::new();
    buf.write_all(MAGIC)?;
    buf.write_all(&(entries.len() as u32).to_le_bytes())?;
    for (name, shape, data) in entries {
        let name_bytes = name.as_bytes();
        buf.write_all(&(name_bytes.len() as u32).to_le_bytes())?;
        buf.write_all(name_bytes)?;
        buf.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &dim in shape {
            buf.write_all(&(dim as u64).to_le_bytes())?;
        }
        for &v in data {
            buf.write_all(&v.to_le_bytes())?;
        }
    }
    // write-temp-then-rename keeps partial files out of the artifact dir
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &buf)?;
    std::fs::rename(&tmp, path)
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<CheckpointEntry>, TensorError> {
    let bytes =
        std::fs::read(path).map_err(|e| TensorError::BadCheckpoint(format!("{path:?}: {e}")))?;
    let mut r = bytes.as_slice();
    let mut magic = [0u8; 5];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(TensorError::BadCheckpoint(format!("bad magic {magic:?}")));
    }
    let count = read_u32(&mut r)?;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact(&mut r, &mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| TensorError::BadCheckpoint(e.to_string()))?;
        let ndim = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u64(&mut r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            data.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        entries.push((name, shape, data));
    }
    Ok(entries)
}

/// Saves a parameter list; names must be unique.
pub fn save_parameters(path: &Path, params: &[Parameter]) -> std::io::Result<()> {
    super::check_unique_names(params);
    let entries: Vec<CheckpointEntry> = params
        .iter()
        .map(|p| (p.name().to_string(), p.shape().to_vec(), p.value().clone()))
        .collect();
    write_checkpoint(path, &entries)
}

/// Loads values into an existing parameter list by name.
pub fn load_parameters(path: &Path, params: &[Parameter]) -> Result<(), TensorError> {
    let entries = read_checkpoint(path)?;
    for p in params {
        let entry = entries
            .iter()
            .find(|(name, _, _)| name == p.name())
            .ok_or_else(|| TensorError::BadCheckpoint(format!("missing parameter {}", p.name())))?;
        if entry.1 != p.shape() {
            return Err(TensorError::BadCheckpoint(format!(
                "parameter {} shape {:?} does not match checkpoint {:?}",
                p.name(),
                p.shape(),
                entry.1
            )));
        }
        p.set_value(entry.2.clone());
    }
    Ok(())
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<(), TensorError> {
    r.read_exact(buf).map_err(|_| TensorError::BadCheckpoint("truncated".into()))
}

fn read_array<const N: usize>(r: &mut &[u8]) -> Result<[u8; N], TensorError> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

fn read_u32(r: &mut &[u8]) -> Result<u32, TensorError> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64(r: &mut &[u8]) -> Result<u64, TensorError> {
    Ok(u64::from_le_bytes(read_array(r)?))
}
