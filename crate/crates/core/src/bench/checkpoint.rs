//! Model checkpoints: an 8-byte magic, a little-endian `u64` header length, a
//! JSON header, then every parameter as little-endian `f64` in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::models::Model;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"QBRNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    model: String,
    config_hash: String,
    seed: u64,
    epoch: usize,
    tensors: Vec<TensorEntry>,
}

/// Named parameter arrays of one model at one point of training.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: String,
    pub config_hash: String,
    pub seed: u64,
    pub epoch: usize,
    pub params: Vec<(String, Tensor)>,
}

/// Hex SHA-256 of the model's id and parameter layout.
pub fn config_hash(model: &dyn Model) -> String {
    Sha256::digest(model.descriptor().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Checkpoint {
    pub fn capture(model: &dyn Model, seed: u64, epoch: usize) -> Self {
        Self {
            model: model.kind().id().to_string(),
            config_hash: config_hash(model),
            seed,
            epoch,
            params: model
                .params()
                .iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            format_version: CHECKPOINT_VERSION,
            model: self.model.clone(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            epoch: self.epoch,
            tensors: self
                .params
                .iter()
                .map(|(name, t)| TensorEntry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let n: usize = self.params.iter().map(|(_, t)| t.len()).sum();
        let mut out = Vec::with_capacity(16 + json.len() + 8 * n);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &self.params {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Corrupt("missing checkpoint magic".into()));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let body = &bytes[16..];
        let hlen = usize::try_from(hlen)
            .ok()
            .filter(|&h| h <= body.len())
            .ok_or_else(|| Error::Corrupt("header length exceeds file size".into()))?;
        let header: Header = serde_json::from_slice(&body[..hlen])
            .map_err(|e| Error::Corrupt(format!("unreadable header: {e}")))?;
        if header.format_version != CHECKPOINT_VERSION {
            return Err(Error::Incompatible(format!(
                "checkpoint format {} is not supported",
                header.format_version
            )));
        }
        let mut data = &body[hlen..];
        let mut params = Vec::with_capacity(header.tensors.len());
        for entry in header.tensors {
            let n: usize = entry.shape.iter().product();
            if data.len() < 8 * n {
                return Err(Error::Corrupt(format!("truncated data for {}", entry.name)));
            }
            let values = data[..8 * n]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            data = &data[8 * n..];
            params.push((entry.name, Tensor::new(entry.shape, values)?));
        }
        if !data.is_empty() {
            return Err(Error::Corrupt(format!("{} trailing bytes", data.len())));
        }
        Ok(Self {
            model: header.model,
            config_hash: header.config_hash,
            seed: header.seed,
            epoch: header.epoch,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Copies the stored values into `model`, which must have the same id and layout.
    /// On error the model is left untouched.
    pub fn restore(&self, model: &mut dyn Model) -> Result<()> {
        if self.model != model.kind().id() {
            return Err(Error::Incompatible(format!(
                "checkpoint holds {}, target model is {}",
                self.model,
                model.kind().id()
            )));
        }
        if self.config_hash != config_hash(model) {
            return Err(Error::Incompatible("parameter layout hash differs".into()));
        }
        model.params_mut().load_values(self.params.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, predict, ModelKind};
    use crate::rng::SplitMix64;

    fn probe(n: usize) -> Tensor {
        let mut rng = SplitMix64::new(77);
        Tensor::matrix(n, 30, (0..n * 30).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for kind in [
            ModelKind::Ann,
            ModelKind::Lstm,
            ModelKind::Qnn,
            ModelKind::QsnnQlstm,
        ] {
            let src = build_model(kind, 5);
            let ck = Checkpoint::capture(src.as_ref(), 5, 12);
            let back = Checkpoint::from_bytes(&ck.to_bytes().unwrap()).unwrap();
            assert_eq!(back, ck);
            let mut dst = build_model(kind, 6);
            back.restore(dst.as_mut()).unwrap();
            let x = probe(3);
            let a = predict(src.as_ref(), &x).unwrap();
            let b = predict(dst.as_ref(), &x).unwrap();
            assert_eq!(
                a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let ck = Checkpoint::capture(build_model(ModelKind::Snn, 1).as_ref(), 1, 3);
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = Checkpoint::capture(build_model(ModelKind::Ann, 0).as_ref(), 0, 0)
            .to_bytes()
            .unwrap();
        for cut in [0, 7, 15, 40, bytes.len() - 1] {
            assert!(
                matches!(
                    Checkpoint::from_bytes(&bytes[..cut]),
                    Err(Error::Corrupt(_))
                ),
                "cut {cut}"
            );
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            Checkpoint::from_bytes(&extra),
            Err(Error::Corrupt(_))
        ));
    }

    #[test]
    fn cross_model_load_is_incompatible() {
        let ck = Checkpoint::capture(build_model(ModelKind::Ann, 0).as_ref(), 0, 0);
        let mut other = build_model(ModelKind::Snn, 0);
        let before = other
            .params()
            .iter()
            .map(|(_, t)| t.clone())
            .collect::<Vec<_>>();
        assert!(matches!(
            ck.restore(other.as_mut()),
            Err(Error::Incompatible(_))
        ));
        let mut tampered = ck.clone();
        tampered.model = "snn".into();
        assert!(matches!(
            tampered.restore(other.as_mut()),
            Err(Error::Incompatible(_))
        ));
        assert_eq!(
            other
                .params()
                .iter()
                .map(|(_, t)| t.clone())
                .collect::<Vec<_>>(),
            before
        );
    }

    #[test]
    fn hash_tracks_layout_not_values() {
        let a = build_model(ModelKind::Qlstm, 0);
        let b = build_model(ModelKind::Qlstm, 9);
        assert_eq!(config_hash(a.as_ref()), config_hash(b.as_ref()));
        assert_ne!(
            config_hash(a.as_ref()),
            config_hash(build_model(ModelKind::Qsnn, 0).as_ref())
        );
        assert_eq!(config_hash(a.as_ref()).len(), 64);
    }
}
