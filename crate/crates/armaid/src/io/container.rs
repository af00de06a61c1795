//! Self-describing binary tensor container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic (4 bytes) | version u32 | header_len u32 | header (UTF-8 key=value lines)
//! | tensor_count u32 | tensors... | crc32 u32
//! ```
//!
//! Each tensor is `ndim u32 | dims u64 x ndim | data f64 x prod(dims)`.
//! The trailing CRC-32 covers every preceding byte; loaders verify magic,
//! version and checksum before touching the payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u64>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            dims: vec![data.len() as u64],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Tensor {
            dims: vec![rows as u64, cols as u64],
            data,
        }
    }
}

pub fn write_container(
    path: &Path,
    magic: [u8; 4],
    header: &[(String, String)],
    tensors: &[Tensor],
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&magic);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let mut header_text = String::new();
    for (k, v) in header {
        header_text.push_str(k);
        header_text.push('=');
        header_text.push_str(v);
        header_text.push('\n');
    }
    let header_bytes = header_text.as_bytes();
    buf.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
    buf.extend_from_slice(header_bytes);
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        let count: u64 = t.dims.iter().product();
        assert_eq!(
            count as usize,
            t.data.len(),
            "tensor dims disagree with data"
        );
        buf.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for d in &t.dims {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    fs::write(path, buf)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Truncated(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn read_container(
    path: &Path,
    expected_magic: [u8; 4],
) -> Result<(Vec<(String, String)>, Vec<Tensor>)> {
    let buf = fs::read(path)?;
    if buf.len() < 4 {
        return Err(Error::Truncated("checksum"));
    }
    let (payload, crc_bytes) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32fast::hash(payload);
    // Magic is checked before the checksum so that reading the wrong kind of
    // file reports the clearer error.
    if payload.len() < 4 {
        return Err(Error::Truncated("magic"));
    }
    let found: [u8; 4] = payload[..4].try_into().unwrap();
    if found != expected_magic {
        return Err(Error::BadMagic {
            expected: expected_magic,
            found,
        });
    }
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let mut cur = Cursor {
        buf: payload,
        pos: 4,
    };
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let header_len = cur.u32("header length")? as usize;
    let header_bytes = cur.take(header_len, "header")?;
    let header_text = std::str::from_utf8(header_bytes)
        .map_err(|_| Error::HeaderParse("non-UTF-8 header".into()))?;
    let mut header = Vec::new();
    for line in header_text.lines() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::HeaderParse(line.to_string()))?;
        header.push((k.to_string(), v.to_string()));
    }

    let count = cur.u32("tensor count")? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let ndim = cur.u32("tensor rank")? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(cur.u64("tensor dims")?);
        }
        let n: u64 = dims.iter().product();
        let bytes = cur.take(n as usize * 8, "tensor data")?;
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Tensor { dims, data });
    }
    Ok((header, tensors))
}

/// Looks up a required header key.
pub fn header_get<'a>(header: &'a [(String, String)], key: &str) -> Result<&'a str> {
    header
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::HeaderParse(format!("missing key `{key}`")))
}

pub fn header_parse<T: std::str::FromStr>(header: &[(String, String)], key: &str) -> Result<T> {
    header_get(header, key)?
        .parse::<T>()
        .map_err(|_| Error::HeaderParse(format!("key `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample() -> (Vec<(String, String)>, Vec<Tensor>) {
        (
            vec![("alpha".into(), "1".into()), ("name".into(), "x=y".into())],
            vec![
                Tensor::vector(vec![1.0, -2.5, 3.25]),
                Tensor::matrix(2, 2, vec![0.0; 4]),
            ],
        )
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let (header, tensors) = sample();
        write_container(&path, *b"TEST", &header, &tensors).unwrap();
        let (h2, t2) = read_container(&path, *b"TEST").unwrap();
        assert_eq!(header, h2);
        assert_eq!(tensors, t2);
        // Writing again yields byte-identical files.
        let bytes1 = std::fs::read(&path).unwrap();
        write_container(&path, *b"TEST", &h2, &t2).unwrap();
        assert_eq!(bytes1, std::fs::read(&path).unwrap());
    }

    #[test]
    fn wrong_magic_is_reported_first() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let (header, tensors) = sample();
        write_container(&path, *b"AAAA", &header, &tensors).unwrap();
        assert!(matches!(
            read_container(&path, *b"BBBB"),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn truncation_fails_the_checksum() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let (header, tensors) = sample();
        write_container(&path, *b"TEST", &header, &tensors).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 9);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_container(&path, *b"TEST"),
            Err(Error::ChecksumMismatch { .. }) | Err(Error::Truncated(_))
        ));
    }

    #[test]
    fn corrupted_payload_fails_the_checksum() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let (header, tensors) = sample();
        write_container(&path, *b"TEST", &header, &tensors).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_container(&path, *b"TEST"),
            Err(Error::ChecksumMismatch { .. })
        ));
    }
}
