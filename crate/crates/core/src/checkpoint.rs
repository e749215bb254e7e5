//! Binary tensor container (`.lprb`).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "LPRB" | version: u16 | count: u32
//! per tensor: name_len: u16 | name: utf-8 | rank: u8 | dims: u32 × rank | data: f32 × Π dims
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"LPRB";
pub const VERSION: u16 = 1;

/// Ordered list of named tensors.
pub type NamedTensors = Vec<(String, Tensor)>;

pub fn encode(tensors: &[(String, Tensor)]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        let bytes = name.as_bytes();
        let len = u16::try_from(bytes.len())
            .map_err(|_| Error::invalid(format!("tensor name too long: {} bytes", bytes.len())))?;
        let rank = u8::try_from(t.rank()).map_err(|_| Error::invalid("tensor rank exceeds 255"))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(bytes);
        out.push(rank);
        for &d in t.dims() {
            let d = u32::try_from(d).map_err(|_| Error::invalid("tensor dim exceeds u32"))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.reserve(t.len() * 4);
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).ok_or("length overflow")?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> std::result::Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<NamedTensors, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|e| format!("tensor name: {e}"))?
            .to_string();
        let rank = r.take(1)?[0] as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32()? as usize);
        }
        let n: usize = dims.iter().product();
        let raw = r.take(n.checked_mul(4).ok_or("tensor too large")?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::new(dims, data).map_err(|e| format!("tensor {name}: {e}"))?;
        out.push((name, t));
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(out)
}

pub fn save(path: &Path, tensors: &[(String, Tensor)]) -> Result<()> {
    let bytes = encode(tensors)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<NamedTensors> {
    let bytes = fs::read(path).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    decode(&bytes).map_err(|reason| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    })
}

/// Looks up a tensor by name.
/// Splits a `u64` into four 16-bit parts, each exact in `f32`.
pub fn pack_u64(value: u64) -> [f32; 4] {
    std::array::from_fn(|i| ((value >> (16 * i)) & 0xffff) as f32)
}

pub fn unpack_u64(parts: &[f32]) -> u64 {
    parts.iter().take(4).enumerate().fold(0, |acc, (i, &p)| acc | ((p as u64) << (16 * i)))
}

pub fn find<'a>(tensors: &'a [(String, Tensor)], name: &str) -> Option<&'a Tensor> {
    tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
}
