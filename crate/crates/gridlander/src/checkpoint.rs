//! Binary checkpoint container for detector and Q-network weights.
//!
//! The byte layout is documented in `FORMATS.md`. All integers and floats
//! are little-endian. The trailing CRC-32 covers every byte before it.

use std::fs;
use std::path::Path;

use gridlander_core::dqn::{QNetwork, TrainConfig};
use gridlander_core::env::EnvConfig;
use gridlander_core::nn::NamedTensor;
use gridlander_core::vital::{VitalConfig, VitalWeights};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 15] = b"GRIDLANDER-CKPT";
pub const VERSION: u32 = 1;

const HEADER_LEN: usize = MAGIC.len() + 4;
const CRC_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Vital,
    Dqn,
}

impl ModelKind {
    fn tag(self) -> u8 {
        match self {
            ModelKind::Vital => 0,
            ModelKind::Dqn => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(ModelKind::Vital),
            1 => Ok(ModelKind::Dqn),
            t => Err(Error::Schema(format!("unknown model kind tag {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vital => "vital",
            ModelKind::Dqn => "dqn",
        }
    }
}

/// Settings stored with a Q-network so that it can be evaluated on the grid
/// it was trained for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqnSnapshot {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub input_scale: [f32; 3],
    pub seed: u64,
    pub episodes_run: usize,
}

/// Decoded container: model kind, JSON config snapshot and named tensors in
/// file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub config_json: String,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_vital(weights: &VitalWeights) -> Result<Self> {
        Ok(Self {
            kind: ModelKind::Vital,
            config_json: to_json(&weights.config)?,
            tensors: weights.to_named(),
        })
    }

    pub fn from_dqn(net: &QNetwork, snapshot: &DqnSnapshot) -> Result<Self> {
        Ok(Self {
            kind: ModelKind::Dqn,
            config_json: to_json(snapshot)?,
            tensors: net.to_named(),
        })
    }

    fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Schema(format!(
                "expected a {} checkpoint, found {}",
                kind.name(),
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub fn to_vital(&self) -> Result<VitalWeights> {
        self.expect_kind(ModelKind::Vital)?;
        let config: VitalConfig =
            serde_json::from_str(&self.config_json).map_err(|e| Error::Schema(format!("vital config: {e}")))?;
        config.validate().map_err(|e| Error::Schema(e.to_string()))?;
        VitalWeights::from_named(&config, &self.tensors).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_dqn(&self) -> Result<(QNetwork, DqnSnapshot)> {
        self.expect_kind(ModelKind::Dqn)?;
        let snap: DqnSnapshot =
            serde_json::from_str(&self.config_json).map_err(|e| Error::Schema(format!("dqn config: {e}")))?;
        let net = QNetwork::from_named(snap.input_scale, &self.tensors).map_err(|e| Error::Schema(e.to_string()))?;
        Ok((net, snap))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload: usize = self.tensors.iter().map(|t| t.data.len() * 4 + t.name.len() + 64).sum();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 + self.config_json.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind.tag());
        out.extend_from_slice(&len_u32(self.config_json.len(), "config snapshot")?.to_le_bytes());
        out.extend_from_slice(self.config_json.as_bytes());
        out.extend_from_slice(&len_u32(self.tensors.len(), "tensor count")?.to_le_bytes());
        for t in &self.tensors {
            if t.data.len() != t.numel() {
                return Err(Error::Schema(format!("tensor {} payload does not match its shape", t.name)));
            }
            let name_len = u16::try_from(t.name.len())
                .map_err(|_| Error::Schema(format!("tensor name {} is too long", t.name)))?;
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            let rank = u8::try_from(t.shape.len()).map_err(|_| Error::Schema(format!("tensor {} rank", t.name)))?;
            out.push(rank);
            for d in &t.shape {
                out.extend_from_slice(&len_u32(*d, "tensor dimension")?.to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Integrity("missing GRIDLANDER-CKPT magic".into()));
        }
        let version = u32::from_le_bytes(bytes[MAGIC.len()..HEADER_LEN].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                expected: VERSION,
            });
        }
        if bytes.len() < HEADER_LEN + CRC_LEN {
            return Err(Error::Integrity("file is truncated".into()));
        }
        let (body, crc) = bytes.split_at(bytes.len() - CRC_LEN);
        let stored = u32::from_le_bytes(crc.try_into().unwrap());
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(Error::Integrity(format!(
                "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
            )));
        }

        let mut r = Reader {
            bytes: body,
            pos: HEADER_LEN,
        };
        let kind = ModelKind::from_tag(r.u8()?)?;
        let config_len = r.u32()? as usize;
        let config_json = String::from_utf8(r.take(config_len)?.to_vec())
            .map_err(|_| Error::Integrity("config snapshot is not UTF-8".into()))?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::Integrity("tensor name is not UTF-8".into()))?;
            let rank = r.u8()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let numel = shape
                .iter()
                .try_fold(1usize, |acc, d| acc.checked_mul(*d))
                .ok_or_else(|| Error::Integrity(format!("tensor {name} is too large")))?;
            let raw = r.take(
                numel
                    .checked_mul(4)
                    .ok_or_else(|| Error::Integrity(format!("tensor {name} is too large")))?,
            )?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(NamedTensor { name, shape, data });
        }
        if r.pos != body.len() {
            return Err(Error::Integrity(format!("{} trailing bytes", body.len() - r.pos)));
        }
        for (i, t) in tensors.iter().enumerate() {
            if tensors[..i].iter().any(|o| o.name == t.name) {
                return Err(Error::Schema(format!("duplicate tensor name {}", t.name)));
            }
        }
        Ok(Self {
            kind,
            config_json,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_vital(path: &Path, weights: &VitalWeights) -> Result<()> {
    Checkpoint::from_vital(weights)?.save(path)
}

pub fn load_vital(path: &Path) -> Result<VitalWeights> {
    Checkpoint::load(path)?.to_vital()
}

pub fn save_dqn(path: &Path, net: &QNetwork, snapshot: &DqnSnapshot) -> Result<()> {
    Checkpoint::from_dqn(net, snapshot)?.save(path)
}

pub fn load_dqn(path: &Path) -> Result<(QNetwork, DqnSnapshot)> {
    Checkpoint::load(path)?.to_dqn()
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Schema(format!("config snapshot: {e}")))
}

fn len_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Schema(format!("{what} {n} does not fit in 32 bits")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Integrity("file is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
