use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::mlp::{Layer, MlpParams};
use super::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"MVAC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic: expected \"MVAC\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated checkpoint: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
}

/// Little-endian record writer.
#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    /// Starts a buffer with the magic bytes and format version.
    pub fn with_header() -> Self {
        let mut w = Self::default();
        w.buf.extend_from_slice(MAGIC);
        w.put_u32(FORMAT_VERSION);
        w
    }

    pub fn put_u8(&mut self, x: u8) {
        self.buf.push(x);
    }

    pub fn put_u32(&mut self, x: u32) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn put_u64(&mut self, x: u64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn put_f64(&mut self, x: f64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn put_f64s(&mut self, xs: &[f64]) {
        xs.iter().for_each(|x| self.put_f64(*x));
    }

    /// Length-prefixed f64 array.
    pub fn put_vec(&mut self, xs: &[f64]) {
        self.put_u32(xs.len() as u32);
        self.put_f64s(xs);
    }

    pub fn put_str(&mut self, s: &str) {
        self.put_u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    /// Layer count, then per layer rows, cols, row-major weights, biases.
    pub fn put_mlp(&mut self, p: &MlpParams) {
        self.put_u32(p.layers.len() as u32);
        for l in &p.layers {
            self.put_u32(l.outputs() as u32);
            self.put_u32(l.inputs() as u32);
            self.put_f64s(l.weight.data());
            self.put_f64s(l.bias.data());
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

/// Little-endian record reader over a byte slice.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Checks magic and version.
    pub fn with_header(bytes: &'a [u8]) -> Result<Self, CheckpointError> {
        let mut r = Self::new(bytes);
        let magic = r.take(4).map_err(|_| {
            let mut found = [0u8; 4];
            found[..bytes.len()].copy_from_slice(bytes);
            CheckpointError::BadMagic(found)
        })?;
        if magic != MAGIC {
            return Err(CheckpointError::BadMagic(magic.try_into().unwrap()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() - self.pos < n {
            return Err(CheckpointError::Truncated { offset: self.pos, needed: n });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        if n.checked_mul(8).is_none_or(|b| b > self.remaining()) {
            return Err(CheckpointError::Truncated { offset: self.pos, needed: n.saturating_mul(8) });
        }
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn vec(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let n = self.u32()? as usize;
        self.f64s(n)
    }

    pub fn str(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|e| CheckpointError::Invalid(e.to_string()))
    }

    pub fn mlp(&mut self) -> Result<MlpParams, CheckpointError> {
        let count = self.u32()? as usize;
        let mut layers = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let rows = self.u32()? as usize;
            let cols = self.u32()? as usize;
            let weight = Tensor::matrix(rows, cols, self.f64s(rows * cols)?)
                .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
            let bias = Tensor::vector(self.f64s(rows)?);
            layers.push(Layer { weight, bias });
        }
        MlpParams::from_layers(layers).map_err(|e| CheckpointError::Invalid(e.to_string()))
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn finish(&self) -> Result<(), CheckpointError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(CheckpointError::Invalid(format!("{n} trailing bytes"))),
        }
    }
}

pub fn encode_params(p: &MlpParams) -> Vec<u8> {
    let mut w = Writer::with_header();
    w.put_mlp(p);
    w.into_bytes()
}

pub fn decode_params(bytes: &[u8]) -> Result<MlpParams, CheckpointError> {
    let mut r = Reader::with_header(bytes)?;
    let p = r.mlp()?;
    r.finish()?;
    Ok(p)
}

/// Writes through a sibling temp file and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CheckpointError> {
    let name = path
        .file_name()
        .ok_or_else(|| CheckpointError::Invalid(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_params(path: &Path, p: &MlpParams) -> Result<(), CheckpointError> {
    write_atomic(path, &encode_params(p))
}

pub fn load_params(path: &Path) -> Result<MlpParams, CheckpointError> {
    decode_params(&fs::read(path)?)
}
