//! Binary checkpoint format.
//!
//! ```text
//! "ICNN"                      magic
//! u16                         format version
//! u32                         trainable layer count L
//! 2L x { u32 rank, rank x u32 dims }   tensor manifest (weights, bias per layer)
//! f32 data                    every tensor, in manifest order
//! f64 lr, u32 batch, u32 epochs, u64 seed   SgdConfig
//! u32                         completed epochs
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::network::{LayerParams, ModelParams, SgdConfig};
use super::NnError;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ICNN";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub sgd: SgdConfig,
    /// Number of completed training epochs.
    pub epoch: u32,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.params.num_values());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.params.layers.len() as u32).to_le_bytes());
        for t in self.params.tensors() {
            out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
        }
        for t in self.params.tensors() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.sgd.learning_rate.to_le_bytes());
        out.extend_from_slice(&(self.sgd.batch_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.sgd.epochs as u32).to_le_bytes());
        out.extend_from_slice(&self.sgd.seed.to_le_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(NnError::Checkpoint("bad magic, not an ICNN checkpoint".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!("unsupported version {version}")));
        }
        let layer_count = r.u32()? as usize;
        let mut shapes = Vec::with_capacity(2 * layer_count);
        for _ in 0..2 * layer_count {
            let rank = r.u32()? as usize;
            if rank == 0 || rank > 8 {
                return Err(NnError::Checkpoint(format!("implausible tensor rank {rank}")));
            }
            let dims = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            shapes.push(dims);
        }
        let mut tensors = Vec::with_capacity(shapes.len());
        for shape in shapes {
            let len: usize = shape.iter().product();
            let raw = r.take(
                len.checked_mul(4)
                    .ok_or_else(|| NnError::Checkpoint("tensor too large".into()))?,
            )?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(Tensor::new(shape, data)?);
        }
        let sgd = SgdConfig {
            learning_rate: f64::from_le_bytes(r.array()?),
            batch_size: r.u32()? as usize,
            epochs: r.u32()? as usize,
            seed: u64::from_le_bytes(r.array()?),
        };
        let epoch = r.u32()?;
        if r.pos != bytes.len() {
            return Err(NnError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let mut it = tensors.into_iter();
        let layers = (0..layer_count)
            .map(|_| LayerParams {
                weights: it.next().unwrap(),
                bias: it.next().unwrap(),
            })
            .collect();
        Ok(Self {
            params: ModelParams { layers },
            sgd,
            epoch,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| NnError::Checkpoint(format!("truncated at byte {} (needed {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], NnError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.array()?))
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), NnError> {
    std::fs::write(path, checkpoint.to_bytes())?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
