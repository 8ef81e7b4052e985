//! Random forest: bagged CART classifiers with per-node feature
//! subsampling and a majority vote.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::logreg::check_inputs;
use super::tree::{DecisionTree, TreeBuilder, TreeMode, TreeParams};
use crate::error::{Error, Result};

/// How many candidate features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    /// `round(sqrt(d))`, at least 1.
    Sqrt,
    All,
    #[serde(untagged)]
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            FeaturesPerSplit::Sqrt => ((d as f64).sqrt().round() as usize).clamp(1, d.max(1)),
            FeaturesPerSplit::All => d,
            FeaturesPerSplit::Count(k) => k.min(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
}

fn default_min_leaf() -> usize {
    1
}

fn default_bootstrap() -> bool {
    true
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 6,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
}

/// Tree `t` draws its bootstrap sample and feature subsets from a stream
/// seeded by `(seed, t)`, so the forest does not depend on thread
/// scheduling.
pub fn train_rf(x: &[Vec<f64>], y: &[u8], params: &ForestParams, seed: u64) -> Result<RandomForestModel> {
    if params.n_trees == 0 {
        return Err(Error::Config("random forest needs at least one tree".into()));
    }
    let d = check_inputs(x, y)?;
    let n = x.len();
    let targets: Vec<f64> = y.iter().map(|&t| f64::from(t)).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(params.features_per_split.resolve(d)),
    };

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            TreeBuilder::new(x, &targets, &tree_params, TreeMode::Classification, &mut rng)
                .build(rows)
                .0
        })
        .collect();

    Ok(RandomForestModel {
        trees,
        params: *params,
        seed,
        n_features: d,
    })
}

impl RandomForestModel {
    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(())
    }

    pub fn votes(&self, row: &[f64]) -> Result<usize> {
        self.check_row(row)?;
        Ok(self
            .trees
            .iter()
            .map(|t| usize::from(t.predict_class(row)))
            .sum())
    }

    /// Fraction of trees voting for class 1.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        Ok(self.votes(row)? as f64 / self.trees.len() as f64)
    }

    /// Majority vote; a tied vote goes to class 1.
    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(u8::from(2 * self.votes(row)? >= self.trees.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::train_tree;

    fn noisy_data(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y = x.iter().map(|r| u8::from(r[0] + r[1] * r[2] + 0.3 * rng.gen_range(-1.0..1.0) > 0.0)).collect();
        (x, y)
    }

    #[test]
    fn single_tree_forest_equals_cart() {
        let (x, y) = noisy_data(5, 120);
        let params = ForestParams {
            n_trees: 1,
            max_depth: 5,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::All,
            bootstrap: false,
        };
        let rf = train_rf(&x, &y, &params, 99).unwrap();
        let targets: Vec<f64> = y.iter().map(|&t| f64::from(t)).collect();
        let tree = train_tree(&x, &targets, &TreeParams { max_depth: 5, min_samples_leaf: 1, max_features: None }, TreeMode::Classification);
        assert_eq!(rf.trees[0], tree);
        let (probe, _) = noisy_data(6, 200);
        for r in &probe {
            assert_eq!(rf.predict(r).unwrap(), tree.predict_class(r));
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = noisy_data(1, 80);
        let p = ForestParams { n_trees: 10, ..Default::default() };
        assert_eq!(train_rf(&x, &y, &p, 7).unwrap(), train_rf(&x, &y, &p, 7).unwrap());
        assert_ne!(train_rf(&x, &y, &p, 7).unwrap(), train_rf(&x, &y, &p, 8).unwrap());
    }

    #[test]
    fn separable_holdout() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sample = |n: usize| -> (Vec<Vec<f64>>, Vec<u8>) {
            let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let y = x.iter().map(|r| u8::from(r[0] - 0.5 * r[1] > 0.0)).collect();
            (x, y)
        };
        let (xtr, ytr) = sample(300);
        let (xte, yte) = sample(200);
        let rf = train_rf(&xtr, &ytr, &ForestParams { n_trees: 50, ..Default::default() }, 3).unwrap();
        let hits = xte.iter().zip(&yte).filter(|(r, &t)| rf.predict(r).unwrap() == t).count();
        assert!(hits as f64 / 200.0 >= 0.95, "{hits}");
    }

    #[test]
    fn vote_tie_goes_up() {
        let leaf = |v: f64| DecisionTree { mode: TreeMode::Classification, nodes: vec![super::super::tree::Node::Leaf { value: v }] };
        let rf = RandomForestModel {
            trees: vec![leaf(0.0), leaf(1.0)],
            params: ForestParams::default(),
            seed: 0,
            n_features: 1,
        };
        assert_eq!(rf.predict(&[0.0]).unwrap(), 1);
        assert_eq!(rf.predict_proba(&[0.0]).unwrap(), 0.5);
        assert!(rf.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_trees_rejected() {
        let (x, y) = noisy_data(1, 10);
        assert!(train_rf(&x, &y, &ForestParams { n_trees: 0, ..Default::default() }, 0).is_err());
    }

    #[test]
    fn features_per_split_resolution() {
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(8), 3);
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(1), 1);
        assert_eq!(FeaturesPerSplit::All.resolve(8), 8);
        assert_eq!(FeaturesPerSplit::Count(20).resolve(8), 8);
    }
}
