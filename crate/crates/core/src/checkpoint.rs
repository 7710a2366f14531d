//! Binary model checkpoint.
//!
//! ```text
//! "ATLC" | u32 version | u32 n | n×f64 mean | n×f64 std | u8 mode | u32 tensors
//! per tensor: u32 name_len | name (UTF-8) | u32 rank | rank×u64 dims | f64 payload
//! ```
//! Integers and floats are little-endian. Biases are stored with rank 1.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::NormStats;
use crate::model::{is_bias, ModelMode, ModelParams};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 4] = b"ATLC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub mode: ModelMode,
    pub norm: NormStats,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.norm.mean.len() as u32).to_le_bytes());
        for v in self.norm.mean.iter().chain(&self.norm.std) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.mode.code());
        let tensors = self.params.named_tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, m) in tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            let dims: Vec<usize> = if is_bias(&name) { vec![m.cols()] } else { vec![m.rows(), m.cols()] };
            out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
            for d in dims {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (this build reads version {FORMAT_VERSION})"
            )));
        }
        let n = r.u32()? as usize;
        let mean = r.f64s(n)?;
        let std = r.f64s(n)?;
        let norm = NormStats::new(mean, std).map_err(|e| Error::Checkpoint(format!("norm stats: {e}")))?;
        let code = r.u8()?;
        let mode = ModelMode::from_code(code).ok_or_else(|| Error::Checkpoint(format!("unknown mode code {code}")))?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
            let rank = r.u32()? as usize;
            let dims = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let (rows, cols) = match dims[..] {
                [c] => (1, c),
                [rows, cols] => (rows, cols),
                _ => return Err(Error::Checkpoint(format!("tensor `{name}` has unsupported rank {rank}"))),
            };
            let size = rows
                .checked_mul(cols)
                .filter(|s| s.saturating_mul(8) <= r.remaining())
                .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` is truncated")))?;
            let data = r.f64s(size)?;
            tensors.push((name, Matrix::from_vec(rows, cols, data)?));
        }
        if r.remaining() != 0 {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.remaining())));
        }
        let params = ModelParams::from_named(tensors).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Checkpoint { mode, norm, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(format!("writing checkpoint {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(format!("reading checkpoint {}", path.display()), e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }
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
            return Err(Error::Checkpoint("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("length overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect())
    }
}
