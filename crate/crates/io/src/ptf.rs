//! Portable tensor file (PTF).
//!
//! Layout, all little-endian:
//!
//! ```text
//! "PTF1" | rank: u32 | dims: rank × u32 | dtype: u8 | payload
//! ```
//!
//! dtype 0 is real `f32`, dtype 1 is complex `f32` stored as interleaved
//! `(re, im)` pairs. The payload holds `prod(dims)` elements.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{IoError, Result};

pub const MAGIC: &[u8; 4] = b"PTF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    F32Real = 0,
    F32Complex = 1,
}

impl DType {
    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(DType::F32Real),
            1 => Ok(DType::F32Complex),
            t => Err(IoError::UnknownDType(t)),
        }
    }

    /// Number of `f32` values per element.
    pub fn lanes(self) -> usize {
        match self {
            DType::F32Real => 1,
            DType::F32Complex => 2,
        }
    }
}

/// A tensor as it lives on disk. Complex payloads keep the interleaved
/// layout so `values.len() == prod(dims) * dtype.lanes()`.
#[derive(Debug, Clone, PartialEq)]
pub struct PtfTensor {
    pub dims: Vec<usize>,
    pub dtype: DType,
    pub values: Vec<f32>,
}

impl PtfTensor {
    pub fn real(dims: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        Self::new(dims, DType::F32Real, values)
    }

    /// Build a complex tensor from interleaved `(re, im)` values.
    pub fn complex(dims: Vec<usize>, interleaved: Vec<f32>) -> Result<Self> {
        Self::new(dims, DType::F32Complex, interleaved)
    }

    pub fn new(dims: Vec<usize>, dtype: DType, values: Vec<f32>) -> Result<Self> {
        let count: usize = dims.iter().product();
        if count * dtype.lanes() != values.len() {
            return Err(IoError::LengthMismatch { dims, got: values.len() });
        }
        Ok(Self { dims, dtype, values })
    }

    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        w.write_all(&[self.dtype as u8])?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(IoError::BadMagic(magic));
        }
        let rank = read_u32(&mut r)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut r)? as usize);
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let dtype = DType::from_tag(tag[0])?;
        let n = dims.iter().product::<usize>() * dtype.lanes();
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes)?;
        // Trailing bytes mean the header lied about the payload.
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(IoError::LengthMismatch { dims, got: n + 1 });
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { dims, dtype, values })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
