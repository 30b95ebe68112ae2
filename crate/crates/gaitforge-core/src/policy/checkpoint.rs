//! Binary checkpoint format.
//!
//! Layout, all little-endian:
//!   magic  4 bytes  "GFPK"
//!   version u32
//!   obs dim, hidden dim, action dim  u32 each
//!   parameter values as f64, in the policy's frozen block order

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{GfError, Result};

use super::Policy;

pub const MAGIC: [u8; 4] = *b"GFPK";
pub const VERSION: u32 = 1;

pub fn save(policy: &Policy, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(policy.dims.obs as u32).to_le_bytes());
    buf.extend_from_slice(&(policy.dims.hidden as u32).to_le_bytes());
    buf.extend_from_slice(&(policy.dims.action as u32).to_le_bytes());
    let mut flat = Vec::new();
    policy.flatten_into(&mut flat);
    for v in flat {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Policy> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 20 {
        return Err(GfError::CorruptCheckpoint("file shorter than header".into()));
    }
    if bytes[..4] != MAGIC {
        return Err(GfError::CorruptCheckpoint("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(GfError::CorruptCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    let obs = word(8) as usize;
    let hidden = word(12) as usize;
    let action = word(16) as usize;
    let mut policy = Policy::with_dims(super::Dims { obs, hidden, action });
    let expected = policy.param_count();
    let body = &bytes[20..];
    if body.len() != expected * 8 {
        return Err(GfError::CorruptCheckpoint(format!(
            "expected {} parameter bytes, found {}",
            expected * 8,
            body.len()
        )));
    }
    let flat: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(v) = flat.iter().find(|v| !v.is_finite()) {
        return Err(GfError::CorruptCheckpoint(format!(
            "non-finite parameter value {v}"
        )));
    }
    policy.unflatten_from(&flat)?;
    Ok(policy)
}
