//! k-fold cross-validation and exhaustive grid search.
//!
//! Each fold fits its own min-max scaler on the fold's training part, so no
//! statistic of the held-out rows reaches the model. Folds and grid points
//! run in parallel; fold `f` trains with seed `derive_seed(seed, f)`, which
//! makes results independent of scheduling and of a point's position in
//! the grid.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, ModelSpec};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, ScalerState, SplitMode};
use crate::metrics::{Metric, Metrics};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldMode {
    /// Consecutive blocks of rows in their given order.
    #[default]
    Contiguous,
    /// Seeded shuffle, then consecutive blocks.
    Shuffled,
}

impl From<SplitMode> for FoldMode {
    fn from(m: SplitMode) -> Self {
        match m {
            SplitMode::Chrono => FoldMode::Contiguous,
            SplitMode::Random => FoldMode::Shuffled,
        }
    }
}

/// Held-out row indices for each of `k` folds. The first `n % k` folds get
/// one extra row.
pub fn fold_assignments(n: usize, k: usize, mode: FoldMode, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidData(format!("{n} rows cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if mode == FoldMode::Shuffled {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub index: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: Option<Metrics>,
    /// Why the fold was not evaluated.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricSummary {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }

    fn map(f: impl Fn(Metric) -> f64) -> Self {
        Self {
            accuracy: f(Metric::Accuracy),
            precision: f(Metric::Precision),
            recall: f(Metric::Recall),
            f1: f(Metric::F1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub spec: ModelSpec,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVResult {
    pub k: usize,
    pub fold_mode: FoldMode,
    pub metric: Metric,
    pub best: ModelSpec,
    pub folds: Vec<FoldResult>,
    /// Over evaluated (non-skipped) folds.
    pub mean: MetricSummary,
    /// Population standard deviation over evaluated folds.
    pub std: MetricSummary,
    /// Every point searched with its mean score, in grid order.
    pub grid: Vec<GridPoint>,
}

impl CVResult {
    pub fn evaluated(&self) -> impl Iterator<Item = &Metrics> {
        self.folds.iter().filter_map(|f| f.metrics.as_ref())
    }
}

fn run_fold(m: &FeatureMatrix, held_out: &[usize], index: usize, spec: &ModelSpec, seed: u64) -> Result<FoldResult> {
    let mut is_test = vec![false; m.n_rows()];
    for &i in held_out {
        is_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..m.n_rows()).filter(|&i| !is_test[i]).collect();
    let train = m.subset(&train_idx);
    let test = m.subset(held_out);
    let mut result = FoldResult {
        index,
        train_size: train.n_rows(),
        test_size: test.n_rows(),
        metrics: None,
        skipped: None,
    };

    let positives = train.labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == train.n_rows() {
        result.skipped = Some(format!(
            "training part has a single class ({positives} positive of {})",
            train.n_rows()
        ));
        return Ok(result);
    }

    let scaler = ScalerState::fit(&train)?;
    let train = scaler.transform(&train)?;
    let test = scaler.transform(&test)?;
    let model = spec.fit(&train.rows, &train.labels, derive_seed(seed, index as u64))?;
    let preds = model.predict_all(&test.rows)?;
    result.metrics = Some(Metrics::evaluate(&test.labels, &preds)?);
    Ok(result)
}

/// Cross-validates one hyperparameter point on an unscaled matrix.
pub fn kfold_cv(m: &FeatureMatrix, k: usize, spec: &ModelSpec, mode: FoldMode, seed: u64) -> Result<CVResult> {
    m.check_shape()?;
    spec.validate()?;
    let folds = fold_assignments(m.n_rows(), k, mode, seed)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(f, held_out)| run_fold(m, held_out, f, spec, seed))
        .collect::<Result<Vec<_>>>()?;

    let evaluated: Vec<&Metrics> = results.iter().filter_map(|f| f.metrics.as_ref()).collect();
    if evaluated.is_empty() {
        return Err(Error::DegenerateLabels(format!(
            "all {k} folds had a single-class training part"
        )));
    }
    let count = evaluated.len() as f64;
    let mean = MetricSummary::map(|metric| evaluated.iter().map(|e| e.get(metric)).sum::<f64>() / count);
    let std = MetricSummary::map(|metric| {
        let mu = mean.get(metric);
        (evaluated.iter().map(|e| (e.get(metric) - mu).powi(2)).sum::<f64>() / count).sqrt()
    });

    Ok(CVResult {
        k,
        fold_mode: mode,
        metric: Metric::Accuracy,
        best: spec.clone(),
        folds: results,
        mean,
        std,
        grid: vec![GridPoint {
            spec: spec.clone(),
            score: mean.accuracy,
        }],
    })
}

/// Cross-validates every point and returns the result of the best one by
/// mean `metric`. Ties go to the earliest point in `grid`.
pub fn grid_search(
    m: &FeatureMatrix,
    grid: &[ModelSpec],
    k: usize,
    metric: Metric,
    mode: FoldMode,
    seed: u64,
) -> Result<CVResult> {
    if grid.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    for spec in grid {
        spec.validate()?;
    }
    let results = grid
        .par_iter()
        .map(|spec| kfold_cv(m, k, spec, mode, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        if r.mean.get(metric) > results[best].mean.get(metric) {
            best = i;
        }
    }
    let points = grid
        .iter()
        .zip(&results)
        .map(|(spec, r)| GridPoint {
            spec: spec.clone(),
            score: r.mean.get(metric),
        })
        .collect();
    let mut out = results.into_iter().nth(best).expect("grid is non-empty");
    out.metric = metric;
    out.grid = points;
    Ok(out)
}
