//! Gradient boosting on the logistic loss.
//!
//! Starts from the prior log-odds. Each round fits a regression tree to the
//! residuals `y - sigmoid(F)` and replaces its leaf values with the Newton
//! step `sum(r) / sum(p(1-p))` over the leaf's rows. The margin moves by
//! `shrinkage * leaf`. If a leaf's step would raise the loss of its rows the
//! step is halved until it does not.

use serde::{Deserialize, Serialize};

use super::logreg::{check_inputs, log_loss, sigmoid};
use super::tree::{DecisionTree, TreeBuilder, TreeMode, TreeParams};
use crate::error::{Error, Result};

const MAX_HALVINGS: usize = 40;
const MIN_HESSIAN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_samples_leaf: usize,
}

fn default_min_leaf() -> usize {
    1
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            shrinkage: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub initial_score: f64,
    pub trees: Vec<DecisionTree>,
    pub params: GbmParams,
    pub n_features: usize,
}

pub fn train_gbm(x: &[Vec<f64>], y: &[u8], params: &GbmParams) -> Result<GbmModel> {
    train_gbm_traced(x, y, params).map(|(m, _)| m)
}

/// Like [`train_gbm`], also returning the mean training log-loss before
/// the first round and after every round.
pub fn train_gbm_traced(x: &[Vec<f64>], y: &[u8], params: &GbmParams) -> Result<(GbmModel, Vec<f64>)> {
    let d = check_inputs(x, y)?;
    let n = x.len();
    let positives = y.iter().filter(|&&t| t == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::DegenerateLabels(format!(
            "gradient boosting needs both classes, got {positives} positive of {n}"
        )));
    }
    let prior = positives as f64 / n as f64;
    let initial_score = (prior / (1.0 - prior)).ln();

    let targets: Vec<f64> = y.iter().map(|&t| f64::from(t)).collect();
    let mut margins = vec![initial_score; n];
    let mean_loss = |m: &[f64]| m.iter().zip(&targets).map(|(&z, &t)| log_loss(z, t)).sum::<f64>() / n as f64;
    let mut trace = vec![mean_loss(&margins)];

    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: None,
    };
    let all_rows: Vec<usize> = (0..n).collect();
    let mut trees = Vec::with_capacity(params.n_rounds);
    // unused: every feature is a candidate
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);

    for _ in 0..params.n_rounds {
        let residuals: Vec<f64> = margins.iter().zip(&targets).map(|(&z, &t)| t - sigmoid(z)).collect();
        let (mut tree, leaves) =
            TreeBuilder::new(x, &residuals, &tree_params, TreeMode::Regression, &mut rng).build(all_rows.clone());

        for (leaf, rows) in &leaves {
            let value = newton_leaf(rows, &margins, &targets, &residuals, params.shrinkage);
            tree.set_leaf_value(*leaf, value);
            for &i in rows {
                margins[i] += params.shrinkage * value;
            }
        }
        trace.push(mean_loss(&margins));
        trees.push(tree);
    }

    Ok((
        GbmModel {
            initial_score,
            trees,
            params: *params,
            n_features: d,
        },
        trace,
    ))
}

fn newton_leaf(rows: &[usize], margins: &[f64], targets: &[f64], residuals: &[f64], shrinkage: f64) -> f64 {
    let grad: f64 = rows.iter().map(|&i| residuals[i]).sum();
    let hess: f64 = rows
        .iter()
        .map(|&i| {
            let p = sigmoid(margins[i]);
            p * (1.0 - p)
        })
        .sum();
    let leaf_loss = |v: f64| -> f64 {
        rows.iter()
            .map(|&i| log_loss(margins[i] + shrinkage * v, targets[i]))
            .sum()
    };
    let before = leaf_loss(0.0);
    let mut value = grad / hess.max(MIN_HESSIAN);
    for _ in 0..MAX_HALVINGS {
        if !value.is_finite() {
            return 0.0;
        }
        if leaf_loss(value) <= before {
            return value;
        }
        value *= 0.5;
    }
    0.0
}

impl GbmModel {
    /// Raw margin using only the first `rounds` trees.
    pub fn margin_upto(&self, row: &[f64], rounds: usize) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let mut f = self.initial_score;
        for tree in self.trees.iter().take(rounds) {
            f += self.params.shrinkage * tree.predict_value(row);
        }
        Ok(f)
    }

    pub fn margin(&self, row: &[f64]) -> Result<f64> {
        self.margin_upto(row, self.trees.len())
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.margin(row)?))
    }

    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? >= 0.5))
    }
}
