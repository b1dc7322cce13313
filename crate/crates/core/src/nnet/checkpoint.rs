//! Checkpoint file layout, all integers and floats little-endian:
//!
//! ```text
//! magic     8 bytes  "CASRCKPT"
//! version   u32      1
//! config    u32 length + UTF-8 JSON of the model configuration
//! epoch     u32
//! rng_seed  u64
//! flags     u8       bit 0: CNN frozen, bit 1: optimizer state present
//! arrays    u32 count, then per array:
//!             u16 name length, name, u8 rank, u32 per dimension,
//!             u8 dtype (0 = f32, 1 = f64), values row-major
//! optimizer (if flagged) u64 step, then the first and second moment
//!             arrays in the same array layout
//! ```
//!
//! Arrays are written as f64 so a save/load cycle is bit-exact; f32 arrays
//! are accepted on read.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::ArrayView2;
use sha2::{Digest, Sha256};

use super::model::{forward, posteriors, ForwardPass};
use super::params::init_params;
use super::{AdamState, ModelConfig, NnetError, Param, ParamStore};
use crate::ctc::PosteriorMatrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CASRCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const DTYPE_F32: u8 = 0;
const DTYPE_F64: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub optimizer: Option<AdamState>,
    /// Completed training epochs.
    pub epoch: u32,
    pub rng_seed: u64,
    /// CNN parameters are excluded from updates.
    pub freeze_cnn: bool,
}

/// Freshly initialized model.
pub fn build_model(cfg: &ModelConfig, seed: u64) -> Result<Checkpoint, NnetError> {
    cfg.validate()?;
    Ok(Checkpoint {
        config: cfg.clone(),
        params: init_params(cfg, seed),
        optimizer: None,
        epoch: 0,
        rng_seed: seed,
        freeze_cnn: false,
    })
}

/// Copies every CNN array of `from` into `to`. Both must share the same
/// convolution configuration and input width.
pub fn transfer_cnn_weights(from: &Checkpoint, mut to: Checkpoint, freeze: bool) -> Result<Checkpoint, NnetError> {
    if from.config.cnn_layers != to.config.cnn_layers || from.config.input_features != to.config.input_features {
        return Err(NnetError::Config(format!(
            "cannot transfer CNN weights between {:?} and {:?}",
            from.config.cnn_layers, to.config.cnn_layers
        )));
    }
    for p in from.params.iter().filter(|p| is_cnn(&p.name)) {
        let dst = to
            .params
            .get_mut(&p.name)
            .ok_or_else(|| NnetError::Config(format!("target lacks {}", p.name)))?;
        if dst.shape != p.shape {
            return Err(NnetError::Config(format!("{}: shape mismatch", p.name)));
        }
        dst.data.clone_from(&p.data);
    }
    to.freeze_cnn = freeze;
    Ok(to)
}

pub fn is_cnn(name: &str) -> bool {
    name.starts_with("cnn.")
}

impl Checkpoint {
    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Result<ForwardPass, NnetError> {
        forward(&self.config, &self.params, input)
    }

    pub fn posteriors(&self, input: ArrayView2<'_, f64>) -> Result<PosteriorMatrix, NnetError> {
        posteriors(&self.config, &self.params, input)
    }

    /// Hex SHA-256 over the names, shapes and values of the CNN arrays.
    pub fn cnn_hash(&self) -> String {
        let mut h = Sha256::new();
        for p in self.params.iter().filter(|p| is_cnn(&p.name)) {
            h.update(p.name.as_bytes());
            for d in &p.shape {
                h.update((*d as u64).to_le_bytes());
            }
            for v in &p.data {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), NnetError> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
        let json = serde_json::to_vec(&self.config).expect("config serializes");
        w.write_u32::<LittleEndian>(json.len() as u32)?;
        w.write_all(&json)?;
        w.write_u32::<LittleEndian>(self.epoch)?;
        w.write_u64::<LittleEndian>(self.rng_seed)?;
        let flags = u8::from(self.freeze_cnn) | (u8::from(self.optimizer.is_some()) << 1);
        w.write_u8(flags)?;
        write_arrays(&mut w, &self.params)?;
        if let Some(opt) = &self.optimizer {
            w.write_u64::<LittleEndian>(opt.step)?;
            write_arrays(&mut w, &opt.m)?;
            write_arrays(&mut w, &opt.v)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self, NnetError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(NnetError::Checkpoint("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != CHECKPOINT_VERSION {
            return Err(NnetError::Checkpoint(format!("unsupported version {version}")));
        }
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut json = vec![0u8; len];
        r.read_exact(&mut json)?;
        let config: ModelConfig =
            serde_json::from_slice(&json).map_err(|e| NnetError::Checkpoint(format!("config: {e}")))?;
        config.validate()?;
        let epoch = r.read_u32::<LittleEndian>()?;
        let rng_seed = r.read_u64::<LittleEndian>()?;
        let flags = r.read_u8()?;
        if flags & !0b11 != 0 {
            return Err(NnetError::Checkpoint(format!("unknown flags {flags:#x}")));
        }
        let params = read_arrays(&mut r)?;
        params.check_against(&config)?;
        let optimizer = if flags & 2 != 0 {
            let step = r.read_u64::<LittleEndian>()?;
            let m = read_arrays(&mut r)?;
            let v = read_arrays(&mut r)?;
            m.check_against(&config)?;
            v.check_against(&config)?;
            Some(AdamState { step, m, v })
        } else {
            None
        };
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(NnetError::Checkpoint(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self {
            config,
            params,
            optimizer,
            epoch,
            rng_seed,
            freeze_cnn: flags & 1 != 0,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write(&mut v).expect("writing to memory");
        v
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnetError> {
        Self::read(bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnetError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnetError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn write_arrays<W: Write>(w: &mut W, store: &ParamStore) -> Result<(), NnetError> {
    w.write_u32::<LittleEndian>(store.len() as u32)?;
    for p in store.iter() {
        w.write_u16::<LittleEndian>(p.name.len() as u16)?;
        w.write_all(p.name.as_bytes())?;
        w.write_u8(p.shape.len() as u8)?;
        for &d in &p.shape {
            w.write_u32::<LittleEndian>(d as u32)?;
        }
        w.write_u8(DTYPE_F64)?;
        for &v in &p.data {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    Ok(())
}

fn read_arrays<R: Read>(r: &mut R) -> Result<ParamStore, NnetError> {
    let count = r.read_u32::<LittleEndian>()? as usize;
    let mut params = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let n = r.read_u16::<LittleEndian>()? as usize;
        let mut name = vec![0u8; n];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| NnetError::Checkpoint("array name is not UTF-8".into()))?;
        let rank = r.read_u8()? as usize;
        let shape = (0..rank)
            .map(|_| r.read_u32::<LittleEndian>().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let len: usize = shape.iter().product();
        let data = match r.read_u8()? {
            DTYPE_F64 => (0..len).map(|_| r.read_f64::<LittleEndian>()).collect::<Result<Vec<_>, _>>()?,
            DTYPE_F32 => (0..len)
                .map(|_| r.read_f32::<LittleEndian>().map(f64::from))
                .collect::<Result<Vec<_>, _>>()?,
            d => return Err(NnetError::Checkpoint(format!("{name}: unknown dtype {d}"))),
        };
        params.push(Param { name, shape, data });
    }
    ParamStore::from_params(params)
}
