//! Flat, versioned JSON checkpoints: a shapes header plus row-major values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::tensor::Tensor2;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl TensorRecord {
    pub fn new(name: impl Into<String>, t: &Tensor2) -> Self {
        TensorRecord {
            name: name.into(),
            rows: t.rows(),
            cols: t.cols(),
            data: t.data().to_vec(),
        }
    }

    pub fn to_tensor(&self) -> Result<Tensor2, CheckpointError> {
        if self.data.len() != self.rows * self.cols {
            return Err(CheckpointError::Format(format!(
                "tensor {}: {} values for {}x{}",
                self.name,
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(Tensor2::from_vec(self.rows, self.cols, self.data.clone()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: String,
    pub meta: Value,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>, meta: Value) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: kind.into(),
            meta,
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, t: &Tensor2) {
        self.tensors.push(TensorRecord::new(name, t));
    }

    /// Append every tensor of a parameter list under `prefix.<index>`.
    pub fn push_params(&mut self, prefix: &str, params: &[&Tensor2]) {
        for (i, p) in params.iter().enumerate() {
            self.push(format!("{prefix}.{i}"), p);
        }
    }

    /// Restore a parameter list previously written by `push_params`.
    pub fn load_params(
        &self,
        prefix: &str,
        params: &mut [&mut Tensor2],
    ) -> Result<(), CheckpointError> {
        for (i, p) in params.iter_mut().enumerate() {
            let name = format!("{prefix}.{i}");
            let rec = self
                .tensors
                .iter()
                .find(|r| r.name == name)
                .ok_or_else(|| CheckpointError::Format(format!("missing tensor {name}")))?;
            let t = rec.to_tensor()?;
            if t.shape() != p.shape() {
                return Err(CheckpointError::Format(format!(
                    "tensor {name}: shape {:?} != expected {:?}",
                    t.shape(),
                    p.shape()
                )));
            }
            **p = t;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path)?;
        let ckpt: Checkpoint = serde_json::from_slice(&bytes)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Format(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn roundtrip_preserves_values_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let t = Tensor2::from_vec(2, 2, vec![0.1, -1.0 / 3.0, 1e-300, 42.125]);
        let mut ckpt = Checkpoint::new("test", json!({"k": 4}));
        ckpt.push("w", &t);
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.kind, "test");
        assert_eq!(loaded.tensors[0].to_tensor().unwrap(), t);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut ckpt = Checkpoint::new("test", Value::Null);
        ckpt.push("p.0", &Tensor2::zeros(2, 3));
        let mut target = Tensor2::zeros(3, 2);
        let err = ckpt.load_params("p", &mut [&mut target]);
        assert!(err.is_err());
    }
}
