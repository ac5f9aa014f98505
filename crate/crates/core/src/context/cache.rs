//! `chunks.idx`: a versioned binary container for chunk tables.
//!
//! Layout: 8-byte magic `FIMCHUNK`, u32 LE version, 32-byte key digest,
//! u64 LE payload length, JSON payload. A key or version mismatch reads as a miss.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::Chunk;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"FIMCHUNK";
pub const CHUNK_CACHE_VERSION: u32 = 1;

type Table = BTreeMap<String, BTreeMap<String, Vec<Chunk>>>;

pub fn write_chunk_cache(path: &Path, key: &str, table: &Table) -> Result<()> {
    let payload = serde_json::to_vec(table)?;
    let mut buf = Vec::with_capacity(payload.len() + 52);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHUNK_CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&Sha256::digest(key.as_bytes()));
    buf.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    buf.extend_from_slice(&payload);
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Returns the cached table when the file exists and was written under `key`.
pub fn read_chunk_cache(path: &Path, key: &str) -> Option<Table> {
    let bytes = fs::read(path).ok()?;
    let (magic, rest) = bytes.split_at_checked(8)?;
    if magic != MAGIC {
        return None;
    }
    let (version, rest) = rest.split_at_checked(4)?;
    if u32::from_le_bytes(version.try_into().ok()?) != CHUNK_CACHE_VERSION {
        return None;
    }
    let (digest, rest) = rest.split_at_checked(32)?;
    if digest != Sha256::digest(key.as_bytes()).as_slice() {
        return None;
    }
    let (len, payload) = rest.split_at_checked(8)?;
    let len = u64::from_le_bytes(len.try_into().ok()?) as usize;
    if payload.len() != len {
        return None;
    }
    serde_json::from_slice(payload).ok()
}
