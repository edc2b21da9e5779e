//! `LGT1` layout: the 4 magic bytes, `u32` rank, `rank` × `u32` dims, then
//! `Π dims` little-endian `f32` values in row-major order. Everything is
//! little-endian; nothing may follow the payload.

use std::path::Path;

use crate::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"LGT1";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

fn element_count(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Tensor("rank must be at least 1".into()));
    }
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::Tensor(format!("dims {dims:?} overflow the element count")))
    })
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n = element_count(&dims)?;
        if let Some(d) = dims.iter().find(|&&d| u32::try_from(d).is_err()) {
            return Err(Error::Tensor(format!("dimension {d} does not fit in u32")));
        }
        if n != data.len() {
            return Err(Error::Tensor(format!(
                "dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

pub fn write_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.dims.len() + 4 * t.data.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
    for &d in &t.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Tensor(format!(
            "truncated {what}: need {n} bytes, {} left",
            bytes.len()
        )));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn take_u32(bytes: &mut &[u8], what: &str) -> Result<u32> {
    let b = take(bytes, 4, what)?;
    Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
}

pub fn read_tensor(mut bytes: &[u8]) -> Result<Tensor> {
    let magic = take(&mut bytes, 4, "magic")?;
    if magic != TENSOR_MAGIC {
        return Err(Error::Tensor(format!("bad magic {magic:?}, expected LGT1")));
    }
    let rank = take_u32(&mut bytes, "rank")? as usize;
    if rank == 0 {
        return Err(Error::Tensor("rank must be at least 1".into()));
    }
    // Each dim needs 4 bytes; checking first keeps a hostile rank from
    // allocating.
    if bytes.len() / 4 < rank {
        return Err(Error::Tensor(format!("truncated header: rank {rank}")));
    }
    let dims = (0..rank)
        .map(|_| take_u32(&mut bytes, "dims").map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let n = element_count(&dims)?;
    let payload_len = n
        .checked_mul(4)
        .ok_or_else(|| Error::Tensor(format!("dims {dims:?} overflow the payload size")))?;
    let payload = take(&mut bytes, payload_len, "payload")?;
    if !bytes.is_empty() {
        return Err(Error::Tensor(format!(
            "{} trailing bytes after payload",
            bytes.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(Tensor { dims, data })
}

pub fn write_tensor_file(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_tensor(t))?;
    Ok(())
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    read_tensor(&bytes)
}
