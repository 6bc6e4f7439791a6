//! Self-describing binary container for named tensors.
//!
//! Layout, all integers little-endian:
//! ```text
//! magic        8 bytes  "SIGCATCK"
//! version      u32 length + UTF-8 text
//! config       u32 length + UTF-8 text (opaque to this module)
//! count        u32
//! per tensor   u32 name length + name, u32 rank, rank x u64 dims,
//!              product(dims) x f64
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::Tensor;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SIGCATCK";
pub const FORMAT_VERSION: &str = "sigcat-checkpoint/1";

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub version: String,
    pub config: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl Container {
    pub fn new(config: String, tensors: Vec<(String, Tensor)>) -> Self {
        Self {
            version: FORMAT_VERSION.into(),
            config,
            tensors,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let payload: usize = self.tensors.iter().map(|(n, t)| n.len() + 8 * (t.shape().len() + t.numel()) + 8).sum();
        let mut out = Vec::with_capacity(32 + self.version.len() + self.config.len() + payload);
        out.extend_from_slice(MAGIC);
        put_str(&mut out, &self.version);
        put_str(&mut out, &self.config);
        put_u32(&mut out, self.tensors.len());
        for (name, t) in &self.tensors {
            put_str(&mut out, name);
            put_u32(&mut out, t.shape().len());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a sigcat checkpoint (bad magic)".into()));
        }
        let version = r.string()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format {version:?}, expected {FORMAT_VERSION:?}"
            )));
        }
        let config = r.string()?;
        let count = r.u32()?;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name = r.string()?;
            let rank = r.u32()?;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                let d = u64::from_le_bytes(r.take(8)?.try_into().unwrap_or_default());
                shape.push(usize::try_from(d).map_err(|_| Error::Checkpoint(format!("tensor {name}: dimension {d} too large")))?);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .filter(|n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| Error::Checkpoint(format!("tensor {name}: data truncated")))?;
            let data = r
                .take(8 * numel)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap_or_default()))
                .collect();
            tensors.push((name, Tensor::new(shape, data)?));
        }
        if r.remaining() != 0 {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Self {
            version,
            config,
            tensors,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u32).to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Checkpoint(format!("unexpected end of data at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::Checkpoint(format!("invalid UTF-8 at byte {}", self.pos - n)))
    }
}
