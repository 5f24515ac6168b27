//! Binary tensor fragments.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! "BSO1"
//! header_len, header bytes (UTF-8, free-form `key = value` lines)
//! tensor_count
//! per tensor: name_len, name bytes, ndim, dims..., f32 data (row-major, LE)
//! ```

use std::io::{Read, Write};

use super::tensor::Tensor;
use crate::error::{BsoError, Result};

pub const MAGIC: &[u8; 4] = b"BSO1";

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub header: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl Fragment {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| BsoError::Checkpoint(format!("value {v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_string<R: Read>(r: &mut R, len: usize) -> Result<String> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| BsoError::Checkpoint(format!("invalid UTF-8: {e}")))
}

pub fn write_fragment<W: Write>(w: &mut W, fragment: &Fragment) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, fragment.header.len())?;
    w.write_all(fragment.header.as_bytes())?;
    put_u32(w, fragment.tensors.len())?;
    for (name, t) in &fragment.tensors {
        put_u32(w, name.len())?;
        w.write_all(name.as_bytes())?;
        put_u32(w, t.shape().len())?;
        for &d in t.shape() {
            put_u32(w, d)?;
        }
        let mut bytes = Vec::with_capacity(4 * t.len());
        for v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    Ok(())
}

pub fn read_fragment<R: Read>(r: &mut R) -> Result<Fragment> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(BsoError::Checkpoint(format!("bad magic {magic:?}, expected BSO1")));
    }
    let header_len = get_u32(r)?;
    let header = get_string(r, header_len)?;
    let count = get_u32(r)?;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = get_u32(r)?;
        let name = get_string(r, name_len)?;
        let ndim = get_u32(r)?;
        let shape = (0..ndim).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let mut bytes = vec![0u8; 4 * len];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        tensors.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(Fragment { header, tensors })
}
