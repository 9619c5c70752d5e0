use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ParamBlock, ParamVector, PredictorSpec};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Parameter checkpoint as pretty-printed JSON: version, predictor spec,
/// block layout and the flat value vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: PredictorSpec,
    pub layout: Vec<ParamBlock>,
    pub values: Vec<f64>,
}

impl Checkpoint {
    pub fn new(spec: &PredictorSpec, params: &ParamVector) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            spec: spec.clone(),
            layout: params.layout().to_vec(),
            values: params.values().to_vec(),
        }
    }

    pub fn params(&self) -> Result<ParamVector> {
        ParamVector::from_values(self.layout.clone(), self.values.clone())
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        if ckpt.layout != ParamVector::layout_for(&ckpt.spec) {
            return Err(Error::Serialization("layout does not match predictor spec".into()));
        }
        ckpt.params()?;
        Ok(ckpt)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
