//! Versioned little-endian container for named tensors and opaque blobs.
//!
//! Layout:
//!
//! ```text
//! magic    8 bytes  "DSQNCKPT"
//! version  u32
//! tensors  u32 count, then per entry: u32 name length, name bytes,
//!          u32 rank, rank × u64 extents, product × f64 values
//! blobs    u32 count, then per entry: u32 name length, name bytes,
//!          u64 byte length, bytes
//! crc32    u32 over every preceding byte
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::params::ParameterStore;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"DSQNCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Container {
    pub tensors: Vec<(String, Tensor)>,
    pub blobs: Vec<(String, Vec<u8>)>,
}

fn bad(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends every entry of `store` under `prefix/`.
    pub fn push_store(&mut self, prefix: &str, store: &ParameterStore) {
        for (_, name, value) in store.iter() {
            self.tensors.push((format!("{prefix}/{name}"), value.clone()));
        }
    }

    /// Rebuilds a store from the entries under `prefix/`, in file order.
    pub fn store(&self, prefix: &str) -> Result<ParameterStore> {
        let head = format!("{prefix}/");
        ParameterStore::from_entries(
            self.tensors
                .iter()
                .filter_map(|(n, t)| n.strip_prefix(&head).map(|s| (s.to_string(), t.clone()))),
        )
    }

    pub fn push_blob(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.blobs.push((name.into(), bytes));
    }

    pub fn blob(&self, name: &str) -> Result<&[u8]> {
        self.blobs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
            .ok_or_else(|| bad(format!("missing blob `{name}`")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            put_name(&mut out, name);
            out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.blobs.len() as u32).to_le_bytes());
        for (name, b) in &self.blobs {
            put_name(&mut out, name);
            out.extend_from_slice(&(b.len() as u64).to_le_bytes());
            out.extend_from_slice(b);
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 8 {
            return Err(bad("file too short"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(bad("checksum mismatch"));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(bad("bad magic header"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let mut c = Container::new();
        for _ in 0..r.u32()? {
            let name = r.name()?;
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(8).ok_or_else(|| bad("tensor too large"))?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            c.tensors.push((name, Tensor::new(shape, data)?));
        }
        for _ in 0..r.u32()? {
            let name = r.name()?;
            let len = r.u64()? as usize;
            c.blobs.push((name, r.take(len)?.to_vec()));
        }
        if r.pos != body.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Container::from_bytes(&bytes)
    }
}

fn put_name(out: &mut Vec<u8>, name: &str) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| bad("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn name(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| bad("name is not utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Container {
        let mut store = ParameterStore::new();
        store.insert("w", Tensor::mat(2, 2, vec![1.0, -2.5, 3.0, 1e-300])).unwrap();
        store.insert("b", Tensor::scalar(f64::MIN_POSITIVE)).unwrap();
        let mut c = Container::new();
        c.push_store("online", &store);
        c.push_blob("meta", b"{\"step\":3}".to_vec());
        c
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let back = Container::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        let store = back.store("online").unwrap();
        assert_eq!(store.by_name("w").unwrap().data()[1], -2.5);
        assert_eq!(back.blob("meta").unwrap(), b"{\"step\":3}");
    }

    #[test]
    fn header_is_fixed() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..8], b"DSQNCKPT");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = sample().to_bytes();
        bytes[20] ^= 0x40;
        assert!(matches!(
            Container::from_bytes(&bytes),
            Err(TensorError::Checkpoint(m)) if m.contains("checksum")
        ));
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        let n = bytes.len();
        let crc = crc32fast::hash(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(Container::from_bytes(&bytes).is_err());
    }
}
