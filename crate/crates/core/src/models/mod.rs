//! The three classifier families and the shared training interface.

pub mod cv;
pub mod forest;
pub mod gbm;
pub mod logreg;
pub mod persist;
pub mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cv::{grid_search, kfold_cv, CVResult, FoldMode};
pub use forest::{train_rf, FeaturesPerSplit, ForestParams, RandomForestModel};
pub use gbm::{train_gbm, GbmModel, GbmParams};
pub use logreg::{train_logreg, LogRegModel, LogRegParams};
pub use tree::{train_tree, DecisionTree, TreeMode, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LogisticRegression,
    RandomForest,
    GradientBoosting,
}

impl Family {
    pub const ALL: [Family; 3] = [
        Family::LogisticRegression,
        Family::RandomForest,
        Family::GradientBoosting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::LogisticRegression => "logistic_regression",
            Family::RandomForest => "random_forest",
            Family::GradientBoosting => "gradient_boosting",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A model family with one concrete hyperparameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    LogisticRegression(LogRegParams),
    RandomForest(ForestParams),
    GradientBoosting(GbmParams),
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::LogisticRegression(_) => Family::LogisticRegression,
            ModelSpec::RandomForest(_) => Family::RandomForest,
            ModelSpec::GradientBoosting(_) => Family::GradientBoosting,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            ModelSpec::LogisticRegression(p) => {
                if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
                    return bad(format!("learning_rate must be positive, got {}", p.learning_rate));
                }
                if !(p.l2_penalty >= 0.0) {
                    return bad(format!("l2_penalty must be non-negative, got {}", p.l2_penalty));
                }
                if p.epochs == 0 {
                    return bad("epochs must be at least 1".into());
                }
            }
            ModelSpec::RandomForest(p) => {
                if p.n_trees == 0 {
                    return bad("n_trees must be at least 1".into());
                }
                if p.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be at least 1".into());
                }
                if p.features_per_split == FeaturesPerSplit::Count(0) {
                    return bad("features_per_split must be at least 1".into());
                }
            }
            ModelSpec::GradientBoosting(p) => {
                if !(p.shrinkage > 0.0 && p.shrinkage <= 1.0) {
                    return bad(format!("shrinkage must be in (0, 1], got {}", p.shrinkage));
                }
                if p.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    /// Trains on already-scaled rows. `seed` only matters for forests.
    pub fn fit(&self, x: &[Vec<f64>], y: &[u8], seed: u64) -> Result<TrainedModel> {
        self.validate()?;
        Ok(match self {
            ModelSpec::LogisticRegression(p) => TrainedModel::LogisticRegression(train_logreg(x, y, p)?),
            ModelSpec::RandomForest(p) => TrainedModel::RandomForest(train_rf(x, y, p, seed)?),
            ModelSpec::GradientBoosting(p) => TrainedModel::GradientBoosting(train_gbm(x, y, p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    LogisticRegression(LogRegModel),
    RandomForest(RandomForestModel),
    GradientBoosting(GbmModel),
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        match self {
            TrainedModel::LogisticRegression(_) => Family::LogisticRegression,
            TrainedModel::RandomForest(_) => Family::RandomForest,
            TrainedModel::GradientBoosting(_) => Family::GradientBoosting,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::LogisticRegression(m) => m.predict_proba(row),
            TrainedModel::RandomForest(m) => m.predict_proba(row),
            TrainedModel::GradientBoosting(m) => m.predict_proba(row),
        }
    }

    /// Class 1 iff the probability is at least one half.
    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        match self {
            TrainedModel::RandomForest(m) => m.predict(row),
            _ => Ok(u8::from(self.predict_proba(row)? >= 0.5)),
        }
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

/// Mixes a master seed with a task index (SplitMix64 finalizer) so every
/// parallel task gets its own reproducible stream.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn validation_rejects_degenerate_points() {
        assert!(ModelSpec::RandomForest(ForestParams { n_trees: 0, ..Default::default() }).validate().is_err());
        assert!(ModelSpec::LogisticRegression(LogRegParams { learning_rate: 0.0, ..Default::default() }).validate().is_err());
        assert!(ModelSpec::GradientBoosting(GbmParams { shrinkage: 1.5, ..Default::default() }).validate().is_err());
        assert!(ModelSpec::GradientBoosting(GbmParams::default()).validate().is_ok());
    }

    #[test]
    fn spec_json_shape() {
        let spec = ModelSpec::RandomForest(ForestParams::default());
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["family"], "random_forest");
        assert_eq!(v["params"]["features_per_split"], "sqrt");
        let back: ModelSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
        let counted: ModelSpec = serde_json::from_str(
            r#"{"family":"random_forest","params":{"n_trees":5,"max_depth":3,"features_per_split":2}}"#,
        )
        .unwrap();
        assert!(matches!(counted, ModelSpec::RandomForest(ForestParams { features_per_split: FeaturesPerSplit::Count(2), bootstrap: true, .. })));
    }
}
