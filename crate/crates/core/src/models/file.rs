use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelSpec, TrainedModel};
use crate::error::{Error, Result};
use crate::lexfeat::Normalizer;

pub const MODEL_FILE_VERSION: u32 = 1;
const FORMAT: &str = "lexdetect-model";

/// On-disk model: the fitted model plus everything needed to score new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub spec: ModelSpec,
    pub seed: u64,
    /// Input column names, in model order.
    pub features: Vec<String>,
    /// Variable number of each column for rule export (1-based feature position).
    pub feature_numbers: Vec<usize>,
    pub normalizer: Option<Normalizer>,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(
        spec: ModelSpec,
        seed: u64,
        features: Vec<String>,
        feature_numbers: Vec<usize>,
        normalizer: Option<Normalizer>,
        model: TrainedModel,
    ) -> Self {
        Self {
            format: FORMAT.into(),
            version: MODEL_FILE_VERSION,
            spec,
            seed,
            features,
            feature_numbers,
            normalizer,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        if f.format != FORMAT {
            return Err(Error::Serde(format!(
                "not a model file (format {:?})",
                f.format
            )));
        }
        if f.version != MODEL_FILE_VERSION {
            return Err(Error::Serde(format!(
                "unsupported model file version {}",
                f.version
            )));
        }
        if f.features.len() != f.model.n_features() || f.feature_numbers.len() != f.features.len() {
            return Err(Error::Dimension {
                expected: f.model.n_features(),
                got: f.features.len(),
            });
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
