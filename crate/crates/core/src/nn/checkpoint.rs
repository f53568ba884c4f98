//! Versioned JSON checkpoint container.
//!
//! ```json
//! {
//!   "format": "codeswitch-checkpoint",
//!   "version": 1,
//!   "kind": "seq2seq",
//!   "meta": { ... model configuration ... },
//!   "params": [ { "name": "enc.weight", "shape": [96, 128], "data": [...] }, ... ]
//! }
//! ```
//!
//! Values are row-major and written with shortest round-trip formatting, so
//! save followed by load reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::Params;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "codeswitch-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub meta: serde_json::Value,
    params: Vec<Entry>,
}

impl Checkpoint {
    pub fn new(kind: &str, meta: serde_json::Value, params: &Params) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            kind: kind.into(),
            meta,
            params: params
                .iter()
                .map(|(name, t)| Entry {
                    name: name.to_owned(),
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn params(&self) -> Result<Params> {
        let mut p = Params::new();
        for e in &self.params {
            p.add(e.name.clone(), Tensor::new(e.shape.clone(), e.data.clone())?);
        }
        Ok(p)
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Data(format!(
                "checkpoint holds a {} model, expected {kind}",
                self.kind
            )))
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!("{}: not a checkpoint", path.display())));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported checkpoint version {}",
                path.display(),
                ck.version
            )));
        }
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn bit_exact_round_trip() {
        let mut r = crate::rng::substream(3, "ck");
        let mut p = Params::new();
        let data: Vec<f64> = (0..12).map(|_| r.gen::<f64>() * 1e-3 - 7.0).collect();
        p.add("w", Tensor::matrix(3, 4, data).unwrap());
        p.add("b", Tensor::scalar(std::f64::consts::PI));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        Checkpoint::new("test", serde_json::json!({"h": 4}), &p).save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.params().unwrap(), p);
        assert_eq!(back.meta["h"], 4);
        assert!(back.expect_kind("lm").is_err());
    }
}
