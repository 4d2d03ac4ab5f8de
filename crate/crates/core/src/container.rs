//! Binary framing shared by the tagger and CRF checkpoints:
//!
//! ```text
//! magic      8 bytes
//! version    u32 LE
//! header_len u64 LE
//! header     header_len bytes of UTF-8 JSON
//! count      u64 LE
//! values     count x f64 LE
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) const FORMAT_VERSION: u32 = 1;

pub(crate) fn encode<H: Serialize>(magic: &[u8; 8], header: &H, values: &[f64]) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + 4 + 8 + header.len() + 8 + values.len() * 8);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated file: missing {what} at byte {}", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub(crate) fn decode<H: DeserializeOwned>(magic: &[u8; 8], bytes: &[u8]) -> Result<(H, Vec<f64>)> {
    let mut r = Reader { bytes, pos: 0 };
    let found = r.take(8, "magic bytes")?;
    if found != magic {
        return Err(Error::Checkpoint(format!(
            "bad magic bytes {:?}, expected {:?}",
            String::from_utf8_lossy(found),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u32::from_le_bytes(r.take(4, "format version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {version} is not supported (this build reads version {FORMAT_VERSION})"
        )));
    }
    let header_len = usize::try_from(r.u64("header length")?)
        .map_err(|_| Error::Checkpoint("header length overflows".into()))?;
    let header_bytes = r.take(header_len, "header")?;
    let header: H = serde_json::from_slice(header_bytes)
        .map_err(|e| Error::Checkpoint(format!("invalid header: {e}")))?;
    let count = usize::try_from(r.u64("value count")?)
        .map_err(|_| Error::Checkpoint("value count overflows".into()))?;
    let raw = r.take(
        count
            .checked_mul(8)
            .ok_or_else(|| Error::Checkpoint("value count overflows".into()))?,
        "parameter values",
    )?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} unexpected trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
