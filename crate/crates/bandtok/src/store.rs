//! "BPRM" named-tensor checkpoint container.
//!
//! Layout: magic "BPRM", u32 version, u32 tensor count, then per tensor:
//! u32 name length, name bytes, u32 rank, rank x u32 dims, little-endian
//! f32 data in row-major order. Tensors keep insertion order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const BPRM_MAGIC: &[u8; 4] = b"BPRM";
pub const BPRM_VERSION: u32 = 1;

/// One named tensor; values are held as f64 and serialized as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::invalid(format!(
                "tensor data length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Tensor {
            name: name.into(),
            dims,
            data,
        })
    }
}

/// An ordered collection of named tensors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorStore {
    tensors: Vec<Tensor>,
}

impl TensorStore {
    pub fn new() -> Self {
        TensorStore::default()
    }

    pub fn push(&mut self, t: Tensor) {
        self.tensors.push(t);
    }

    pub fn insert(&mut self, name: &str, dims: Vec<usize>, data: Vec<f64>) -> Result<()> {
        self.push(Tensor::new(name, dims, data)?);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::format(format!("checkpoint is missing tensor '{name}'"), 8))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.iter().any(|t| t.name == name)
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BPRM_MAGIC);
        out.extend_from_slice(&BPRM_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
            for &d in &t.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in &t.data {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize, what: &str| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(Error::format(
                    format!("truncated BPRM while reading {what}: need {n} bytes"),
                    *pos as u64,
                ));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let take_u32 = |pos: &mut usize, what: &str| -> Result<u32> {
            let b = take(pos, 4, what)?;
            Ok(u32::from_le_bytes(b.try_into().unwrap()))
        };

        if take(&mut pos, 4, "magic")? != BPRM_MAGIC {
            return Err(Error::format("missing BPRM magic", 0));
        }
        let version = take_u32(&mut pos, "version")?;
        if version != BPRM_VERSION {
            return Err(Error::format(format!("unknown BPRM version {version}"), 4));
        }
        let count = take_u32(&mut pos, "tensor count")? as usize;
        let mut store = TensorStore::new();
        for i in 0..count {
            let name_at = pos;
            let name_len = take_u32(&mut pos, "name length")? as usize;
            let name_bytes = take(&mut pos, name_len, "tensor name")?;
            let name = std::str::from_utf8(name_bytes)
                .map_err(|_| Error::format(format!("tensor {i} name is not utf-8"), name_at as u64))?
                .to_string();
            let rank = take_u32(&mut pos, "rank")? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(take_u32(&mut pos, "dimension")? as usize);
            }
            let len: usize = dims.iter().product();
            let raw = take(&mut pos, len * 4, "tensor data")?;
            let data = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                .collect();
            store.push(Tensor { name, dims, data });
        }
        Ok(store)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_store() -> TensorStore {
        let mut s = TensorStore::new();
        s.insert("codes", vec![4, 2], (0..8).map(|i| i as f64 * 0.5).collect())
            .unwrap();
        s.insert("bias", vec![3], vec![1.0, -1.0, 0.25]).unwrap();
        s
    }

    #[test]
    fn write_read_write_is_bitwise_stable() {
        let bytes = sample_store().encode();
        let decoded = TensorStore::decode(&bytes).unwrap();
        assert_eq!(decoded.encode(), bytes);
    }

    #[test]
    fn lookup_by_name_preserves_dims() {
        let s = sample_store();
        let t = s.get("codes").unwrap();
        assert_eq!(t.dims, vec![4, 2]);
        assert_eq!(t.data.len(), 8);
        assert!(s.get("nope").is_err());
    }

    #[test]
    fn corrupt_payload_reports_offset() {
        let bytes = sample_store().encode();
        let err = TensorStore::decode(&bytes[..bytes.len() - 2]).unwrap_err();
        match err {
            Error::Format { offset, .. } => assert!(offset > 0),
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = sample_store().encode();
        bytes[0] = b'X';
        assert!(matches!(
            TensorStore::decode(&bytes),
            Err(Error::Format { offset: 0, .. })
        ));
    }
}
