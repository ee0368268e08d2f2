//! Binary policy checkpoints.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` header length, a JSON
//! header, then the parameter vector as little-endian `f64`. When the header
//! says so, the Adam first and second moments follow in the same encoding.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::policy::{NetShape, PolicyNet};
use super::ppo::Adam;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HRCPOLCY";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub shape: NetShape,
    pub n_params: usize,
    pub seed: u64,
    pub episodes_done: usize,
    pub updates_done: usize,
    /// Adam hyperparameters and step count when optimizer state is stored.
    pub adam: Option<AdamMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamMeta {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: PolicyNet,
    pub adam: Option<Adam>,
    pub seed: u64,
    pub episodes_done: usize,
    pub updates_done: usize,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = CheckpointHeader {
            shape: *self.net.shape(),
            n_params: self.net.params().len(),
            seed: self.seed,
            episodes_done: self.episodes_done,
            updates_done: self.updates_done,
            adam: self.adam.as_ref().map(|a| AdamMeta {
                lr: a.lr,
                beta1: a.beta1,
                beta2: a.beta2,
                eps: a.eps,
                t: a.t,
            }),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + 24 * header.n_params);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        let mut put = |xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        put(self.net.params());
        if let Some(a) = &self.adam {
            put(&a.m);
            put(&a.v);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a policy checkpoint"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported checkpoint version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: CheckpointHeader = serde_json::from_slice(body)?;
        let n = header.n_params;
        let arrays = if header.adam.is_some() { 3 } else { 1 };
        let data = &bytes[16 + hlen..];
        if data.len() != arrays * n * 8 {
            return Err(bad("parameter block has the wrong length"));
        }
        let read = |k: usize| -> Vec<f64> {
            data[k * n * 8..(k + 1) * n * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        };
        let net = PolicyNet::from_params(header.shape, read(0))?;
        if !net.is_finite() {
            return Err(bad("non-finite parameters"));
        }
        let adam = header.adam.map(|m| Adam {
            lr: m.lr,
            beta1: m.beta1,
            beta2: m.beta2,
            eps: m.eps,
            t: m.t,
            m: read(1),
            v: read(2),
        });
        Ok(Self {
            net,
            adam,
            seed: header.seed,
            episodes_done: header.episodes_done,
            updates_done: header.updates_done,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        // write-then-rename so an interrupted save never leaves a torn file
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}
