//! Self-describing JSON model files: the fitted model together with the
//! feature schema and scaler it expects.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainedModel;
use crate::error::{Error, Result};
use crate::features::{schema_mismatch, ScalerState};

pub const FORMAT: &str = "stocktrend-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub scaler: ScalerState,
    #[serde(flatten)]
    pub model: TrainedModel,
}

/// One scored input row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub probability: f64,
}

impl ModelFile {
    pub fn new(model: TrainedModel, scaler: ScalerState) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            feature_names: scaler.column_names.clone(),
            scaler,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks that `names` is exactly the trained feature set and returns,
    /// for each trained feature, its position in `names`.
    pub fn column_order(&self, names: &[String]) -> Result<Vec<usize>> {
        let mismatch = schema_mismatch(&self.feature_names, names);
        if let Error::Schema { missing, extra } = &mismatch {
            if !missing.is_empty() || !extra.is_empty() {
                return Err(mismatch);
            }
        }
        Ok(self
            .feature_names
            .iter()
            .map(|f| names.iter().position(|n| n == f).expect("checked above"))
            .collect())
    }

    /// Scales a raw row (in trained column order) and scores it.
    pub fn predict_row(&self, raw: &[f64]) -> Result<Prediction> {
        let scaled = self.scaler.transform_row(raw)?;
        Ok(Prediction {
            label: self.model.predict(&scaled)?,
            probability: self.model.predict_proba(&scaled)?,
        })
    }
}
