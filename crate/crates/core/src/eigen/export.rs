//! Eigenfunction arrays: magic, vertex count, pair count, the 64-character
//! mesh checksum, then the functions as little-endian `f64`, one after another.

use std::fs;
use std::path::Path;

use super::Spectrum;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"L1EIGFN1";

pub fn write_eigenfunctions(spectrum: &Spectrum, path: &Path) -> Result<()> {
    let n = spectrum.eigenfunctions.first().map_or(0, Vec::len);
    let mut buf = Vec::with_capacity(88 + 8 * n * spectrum.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(spectrum.len() as u64).to_le_bytes());
    let mut tag = [b' '; 64];
    let cs = spectrum.mesh_checksum.as_bytes();
    tag[..cs.len().min(64)].copy_from_slice(&cs[..cs.len().min(64)]);
    buf.extend_from_slice(&tag);
    for u in &spectrum.eigenfunctions {
        for x in u {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Returns the mesh checksum and the functions.
pub fn read_eigenfunctions(path: &Path) -> Result<(String, Vec<Vec<f64>>)> {
    let buf = fs::read(path)?;
    if buf.len() < 88 || &buf[..8] != MAGIC {
        return Err(Error::Format("not an eigenfunction file".into()));
    }
    let word = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap()) as usize;
    let (n, count) = (word(8), word(16));
    let checksum = String::from_utf8_lossy(&buf[24..88]).trim_end().to_string();
    if buf.len() != 88 + 8 * n * count {
        return Err(Error::Format("eigenfunction file is truncated".into()));
    }
    let funcs = (0..count)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let o = 88 + 8 * (j * n + i);
                    f64::from_le_bytes(buf[o..o + 8].try_into().unwrap())
                })
                .collect()
        })
        .collect();
    Ok((checksum, funcs))
}
