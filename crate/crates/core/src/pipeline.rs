//! Config-driven orchestration: ingest, preprocess, score, build features,
//! tune and evaluate the three model families, and write reports.
//!
//! Outputs land in the run's output directory:
//! `features.csv`, `correlation.csv`, `correlation.json`, `run_report.json`,
//! `metrics.json`, `table2.txt` and `model_<family>.json`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    join_features, pearson_matrix, select_features, split_train_test, unmatched_sentiment_days,
    with_price_columns, CorrelationMatrix, DropPolicy, FeatureMatrix, ScalerState, SplitMode, DATE,
    LABEL,
};
use crate::indicators::{build_indicator_frame, DEFAULT_WINDOW};
use crate::market_data::{parse_ohlcv_csv, validate_series, BarSeries};
use crate::metrics::{render_table, ComparisonRow, Metric, Metrics};
use crate::models::cv::{grid_search, CVResult, FoldMode, MetricSummary, DEFAULT_FOLDS};
use crate::models::persist::{ModelFile, Prediction};
use crate::models::{FeaturesPerSplit, Family, ForestParams, GbmParams, LogRegParams, ModelSpec};
use crate::news::{default_stoplist, parse_news_jsonl, parse_word_list, preprocess_corpus, KeywordSet};
use crate::sentiment::{aggregate_daily, default_lexicon, score_article, Aggregation, Lexicon};

pub const FEATURES_FILE: &str = "features.csv";
pub const CORRELATION_CSV: &str = "correlation.csv";
pub const CORRELATION_JSON: &str = "correlation.json";
pub const RUN_REPORT: &str = "run_report.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TABLE_FILE: &str = "table2.txt";

pub fn model_file_name(family: Family) -> String {
    format!("model_{family}.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub mode: SplitMode,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratio: 0.8,
            mode: SplitMode::Chrono,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub metric: Metric,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            metric: Metric::Accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegGrid {
    pub learning_rate: Vec<f64>,
    pub l2_penalty: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl Default for LogRegGrid {
    fn default() -> Self {
        Self {
            learning_rate: vec![0.01, 0.1],
            l2_penalty: vec![0.0, 0.01, 0.1],
            epochs: vec![500],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub features_per_split: Vec<FeaturesPerSplit>,
    pub min_samples_leaf: Vec<usize>,
    pub bootstrap: Vec<bool>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![50, 100, 200],
            max_depth: vec![4, 6, 10],
            features_per_split: vec![FeaturesPerSplit::Sqrt],
            min_samples_leaf: vec![1],
            bootstrap: vec![true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbmGrid {
    pub n_rounds: Vec<usize>,
    pub shrinkage: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for GbmGrid {
    fn default() -> Self {
        Self {
            n_rounds: vec![100, 300],
            shrinkage: vec![0.05, 0.1],
            max_depth: vec![3, 5],
            min_samples_leaf: vec![1],
        }
    }
}

fn require_non_empty<T>(family: Family, name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("grid {family}.{name} is empty")));
    }
    Ok(())
}

/// Cartesian hyperparameter grids, one per family. Expansion order is the
/// field order with the last field varying fastest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub logistic_regression: LogRegGrid,
    pub random_forest: ForestGrid,
    pub gradient_boosting: GbmGrid,
}

impl Grids {
    pub fn expand(&self, family: Family) -> Result<Vec<ModelSpec>> {
        let mut out = Vec::new();
        match family {
            Family::LogisticRegression => {
                let g = &self.logistic_regression;
                require_non_empty(family, "learning_rate", &g.learning_rate)?;
                require_non_empty(family, "l2_penalty", &g.l2_penalty)?;
                require_non_empty(family, "epochs", &g.epochs)?;
                for &learning_rate in &g.learning_rate {
                    for &l2_penalty in &g.l2_penalty {
                        for &epochs in &g.epochs {
                            out.push(ModelSpec::LogisticRegression(LogRegParams {
                                learning_rate,
                                l2_penalty,
                                epochs,
                            }));
                        }
                    }
                }
            }
            Family::RandomForest => {
                let g = &self.random_forest;
                require_non_empty(family, "n_trees", &g.n_trees)?;
                require_non_empty(family, "max_depth", &g.max_depth)?;
                require_non_empty(family, "features_per_split", &g.features_per_split)?;
                require_non_empty(family, "min_samples_leaf", &g.min_samples_leaf)?;
                require_non_empty(family, "bootstrap", &g.bootstrap)?;
                for &n_trees in &g.n_trees {
                    for &max_depth in &g.max_depth {
                        for &features_per_split in &g.features_per_split {
                            for &min_samples_leaf in &g.min_samples_leaf {
                                for &bootstrap in &g.bootstrap {
                                    out.push(ModelSpec::RandomForest(ForestParams {
                                        n_trees,
                                        max_depth,
                                        min_samples_leaf,
                                        features_per_split,
                                        bootstrap,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
            Family::GradientBoosting => {
                let g = &self.gradient_boosting;
                require_non_empty(family, "n_rounds", &g.n_rounds)?;
                require_non_empty(family, "shrinkage", &g.shrinkage)?;
                require_non_empty(family, "max_depth", &g.max_depth)?;
                require_non_empty(family, "min_samples_leaf", &g.min_samples_leaf)?;
                for &n_rounds in &g.n_rounds {
                    for &shrinkage in &g.shrinkage {
                        for &max_depth in &g.max_depth {
                            for &min_samples_leaf in &g.min_samples_leaf {
                                out.push(ModelSpec::GradientBoosting(GbmParams {
                                    n_rounds,
                                    shrinkage,
                                    max_depth,
                                    min_samples_leaf,
                                }));
                            }
                        }
                    }
                }
            }
        }
        for spec in &out {
            spec.validate()?;
        }
        Ok(out)
    }
}

/// Everything a run needs. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ticker: String,
    pub prices: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub negators: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    /// One keyword or phrase per line; built-in sets cover AAPL, AMZN, NFLX.
    pub keywords: Option<PathBuf>,
    /// Train from this feature CSV instead of building features.
    pub features: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub window: usize,
    pub aggregation: Aggregation,
    pub drop_columns: Vec<String>,
    pub split: SplitConfig,
    pub cv: CvConfig,
    pub grids: Grids,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ticker: "AAPL".into(),
            prices: None,
            news: None,
            lexicon: None,
            negators: None,
            stoplist: None,
            keywords: None,
            features: None,
            out_dir: PathBuf::from("out"),
            seed: 42,
            window: DEFAULT_WINDOW,
            aggregation: Aggregation::Mean,
            drop_columns: DropPolicy::default().drop,
            split: SplitConfig::default(),
            cv: CvConfig::default(),
            grids: Grids::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.prices,
            &mut self.news,
            &mut self.lexicon,
            &mut self.negators,
            &mut self.stoplist,
            &mut self.keywords,
            &mut self.features,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(Error::Config(format!(
                "split.ratio must be in (0, 1), got {}",
                self.split.ratio
            )));
        }
        if self.window < 2 {
            return Err(Error::Config(format!("window must be >= 2, got {}", self.window)));
        }
        if self.cv.folds < 2 {
            return Err(Error::Config(format!("cv.folds must be >= 2, got {}", self.cv.folds)));
        }
        if self.prices.is_none() && self.features.is_none() {
            return Err(Error::Config("either `prices` or `features` must be set".into()));
        }
        for p in [
            &self.prices,
            &self.news,
            &self.lexicon,
            &self.negators,
            &self.stoplist,
            &self.keywords,
            &self.features,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        for family in Family::ALL {
            self.grids.expand(family)?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Row accounting for one stage: `rows_out + rows_dropped + rows_merged`
/// equals `rows_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub rows_in: usize,
    pub rows_out: usize,
    pub rows_dropped: usize,
    #[serde(default)]
    pub rows_merged: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StageCount {
    fn new(stage: &str, rows_in: usize, rows_out: usize, rows_dropped: usize) -> Self {
        Self {
            stage: stage.into(),
            rows_in,
            rows_out,
            rows_dropped,
            rows_merged: 0,
            note: None,
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_conserved(&self) -> bool {
        self.rows_out + self.rows_dropped + self.rows_merged == self.rows_in
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub ticker: String,
    pub generated_at: String,
    pub stages: Vec<StageCount>,
    pub columns_before_selection: Vec<String>,
    pub columns_after_selection: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FeatureBuild {
    pub series: BarSeries,
    /// Selected, unscaled features.
    pub matrix: FeatureMatrix,
    /// Over all joined columns, before selection.
    pub correlation: CorrelationMatrix,
    pub report: RunReport,
}

fn load_keywords(cfg: &RunConfig) -> Result<KeywordSet> {
    match &cfg.keywords {
        Some(p) => KeywordSet::new(&cfg.ticker, parse_word_list(&read(p)?)),
        None => KeywordSet::default_for(&cfg.ticker).ok_or_else(|| {
            Error::Config(format!(
                "no built-in keywords for {}; set `keywords`",
                cfg.ticker
            ))
        }),
    }
}

fn load_lexicon(cfg: &RunConfig) -> Result<Lexicon> {
    match (&cfg.lexicon, &cfg.negators) {
        (None, None) => Ok(default_lexicon()),
        (Some(l), n) => {
            let negators = match n {
                Some(p) => read(p)?,
                None => include_str!("../data/negators.txt").to_string(),
            };
            Lexicon::from_tsv(&read(l)?, &negators)
        }
        (None, Some(_)) => Err(Error::Config("`negators` requires `lexicon`".into())),
    }
}

/// Runs ingestion through feature selection without writing anything.
pub fn build_features(cfg: &RunConfig) -> Result<FeatureBuild> {
    let prices = cfg
        .prices
        .as_ref()
        .ok_or_else(|| Error::Config("`prices` is not set".into()))?;
    let mut stages = Vec::new();
    let mut warnings = Vec::new();

    let text = read(prices).map_err(|e| e.in_stage("prices"))?;
    let series = parse_ohlcv_csv(&text, &cfg.ticker).map_err(|e| e.in_stage("prices"))?;
    let data_rows = text.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
    stages.push(StageCount::new("prices", data_rows, series.len(), data_rows - series.len()));
    let validation = validate_series(&series);
    for v in &validation.violations {
        let problems: Vec<String> = v.problems.iter().map(ToString::to_string).collect();
        warnings.push(format!("bar {}: {}", v.date, problems.join(", ")));
    }

    let (articles, skipped) = match &cfg.news {
        Some(p) => parse_news_jsonl(&read(p)?).map_err(|e| e.in_stage("news"))?,
        None => (Vec::new(), 0),
    };
    stages.push(
        StageCount::new("news_ingest", articles.len() + skipped, articles.len(), skipped)
            .note("records with an empty article body are dropped"),
    );

    let keywords = load_keywords(cfg).map_err(|e| e.in_stage("news_preprocess"))?;
    let stoplist = match &cfg.stoplist {
        Some(p) => parse_word_list(&read(p)?),
        None => default_stoplist(),
    };
    let corpus = preprocess_corpus(&articles, &keywords, &stoplist);
    stages.push(
        StageCount::new(
            "news_preprocess",
            corpus.stats.input,
            corpus.stats.output,
            corpus.stats.unmatched + corpus.stats.empty_after_cleaning,
        )
        .note(format!(
            "{} without a keyword match, {} empty after cleaning",
            corpus.stats.unmatched, corpus.stats.empty_after_cleaning
        )),
    );

    let lexicon = load_lexicon(cfg).map_err(|e| e.in_stage("sentiment"))?;
    let scores: Vec<_> = corpus.articles.iter().map(|a| score_article(a, &lexicon)).collect();
    let daily = aggregate_daily(&scores, cfg.aggregation);
    let mut agg = StageCount::new("sentiment_daily", scores.len(), daily.len(), 0);
    agg.rows_merged = scores.len() - daily.len();
    stages.push(agg);

    let rows = build_indicator_frame(&series, cfg.window).map_err(|e| e.in_stage("indicators"))?;
    stages.push(
        StageCount::new("indicators", series.len(), rows.len(), series.len() - rows.len())
            .note(format!("{} warm-up bars and the final unlabeled bar", cfg.window)),
    );

    let unmatched = unmatched_sentiment_days(&rows, &daily);
    stages.push(
        StageCount::new("sentiment_join", daily.len(), daily.len() - unmatched, unmatched)
            .note("sentiment days without a feature row (non-trading or warm-up days) are dropped"),
    );

    let joined = join_features(&rows, &daily);
    let extended = with_price_columns(&joined, &series).map_err(|e| e.in_stage("features"))?;
    let correlation = pearson_matrix(&extended).map_err(|e| e.in_stage("correlation"))?;
    let policy = DropPolicy {
        drop: cfg.drop_columns.clone(),
    };
    let (matrix, select_warnings) = select_features(&extended, &policy);
    warnings.extend(select_warnings);
    stages.push(StageCount::new("features", rows.len(), matrix.n_rows(), 0));

    Ok(FeatureBuild {
        series,
        correlation,
        report: RunReport {
            ticker: cfg.ticker.clone(),
            generated_at: chrono::Utc::now().to_rfc3339(),
            stages,
            columns_before_selection: extended.column_names.clone(),
            columns_after_selection: matrix.column_names.clone(),
            warnings,
        },
        matrix,
    })
}

/// Builds features and writes `features.csv`, the correlation matrix and
/// the run report.
pub fn cmd_build_features(cfg: &RunConfig) -> Result<FeatureBuild> {
    cfg.validate()?;
    let build = build_features(cfg)?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join(FEATURES_FILE), &build.matrix.to_csv()?)?;
    write(&out.join(CORRELATION_CSV), &build.correlation.to_csv()?)?;
    write(
        &out.join(CORRELATION_JSON),
        &serde_json::to_string_pretty(&build.correlation.to_json())?,
    )?;
    write(&out.join(RUN_REPORT), &serde_json::to_string_pretty(&build.report)?)?;
    Ok(build)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub best: ModelSpec,
    pub cv_mean: MetricSummary,
    pub cv_std: MetricSummary,
    pub cv: CVResult,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub ticker: String,
    pub seed: u64,
    pub split_mode: SplitMode,
    pub split_ratio: f64,
    pub folds: usize,
    pub metric: Metric,
    pub feature_names: Vec<String>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub models: Vec<FamilyReport>,
}

impl TrainReport {
    pub fn table(&self) -> String {
        let rows: Vec<ComparisonRow> = self
            .models
            .iter()
            .map(|m| ComparisonRow {
                model: m.family.to_string(),
                cv_accuracy: m.cv_mean.accuracy,
                test: m.test.clone(),
            })
            .collect();
        render_table(&rows)
    }
}

/// Tunes each family on the training split with k-fold grid search, refits
/// the best point on the whole training split and scores it once on the
/// held-out split.
pub fn train_and_evaluate(matrix: &FeatureMatrix, cfg: &RunConfig) -> Result<(TrainReport, Vec<ModelFile>)> {
    matrix.check_shape()?;
    let ones = matrix.labels.iter().filter(|&&l| l == 1).count();
    let zeros = matrix.n_rows() - ones;
    if ones == 0 || zeros == 0 {
        return Err(Error::DegenerateLabels(format!(
            "need both classes, got {ones} up and {zeros} down"
        )));
    }
    let (train, test) = split_train_test(matrix, cfg.split.ratio, cfg.split.mode, cfg.seed)
        .map_err(|e| e.in_stage("split"))?;
    let scaler = ScalerState::fit(&train)?;
    let train_scaled = scaler.transform(&train)?;
    let test_scaled = scaler.transform(&test)?;
    let fold_mode = FoldMode::from(cfg.split.mode);

    let mut models = Vec::new();
    let mut files = Vec::new();
    for family in Family::ALL {
        let grid = cfg.grids.expand(family)?;
        let cv = grid_search(&train, &grid, cfg.cv.folds, cfg.cv.metric, fold_mode, cfg.seed)
            .map_err(|e| e.in_stage("grid_search"))?;
        let model = cv
            .best
            .fit(&train_scaled.rows, &train_scaled.labels, cfg.seed)
            .map_err(|e| e.in_stage("fit"))?;
        let preds = model.predict_all(&test_scaled.rows)?;
        let test_metrics = Metrics::evaluate(&test_scaled.labels, &preds)?;
        models.push(FamilyReport {
            family,
            best: cv.best.clone(),
            cv_mean: cv.mean,
            cv_std: cv.std,
            cv,
            test: test_metrics,
        });
        files.push(ModelFile::new(model, scaler.clone()));
    }

    Ok((
        TrainReport {
            ticker: cfg.ticker.clone(),
            seed: cfg.seed,
            split_mode: cfg.split.mode,
            split_ratio: cfg.split.ratio,
            folds: cfg.cv.folds,
            metric: cfg.cv.metric,
            feature_names: matrix.column_names.clone(),
            train_rows: train.n_rows(),
            test_rows: test.n_rows(),
            models,
        },
        files,
    ))
}

/// Trains all families and writes `metrics.json`, `table2.txt` and one
/// model file per family. Features come from `cfg.features` when set,
/// otherwise they are built (and written) first.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let matrix = match &cfg.features {
        Some(p) => FeatureMatrix::from_csv(&read(p)?).map_err(|e| e.in_stage("features"))?,
        None => cmd_build_features(cfg)?.matrix,
    };
    let (report, files) = train_and_evaluate(&matrix, cfg)?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for file in &files {
        file.save(&out.join(model_file_name(file.model.family())))?;
    }
    write(&out.join(METRICS_FILE), &serde_json::to_string_pretty(&report)?)?;
    write(&out.join(TABLE_FILE), &report.table())?;
    Ok(report)
}

/// Input to [`cmd_predict`].
#[derive(Debug, Clone)]
pub enum PredictInput {
    /// CSV with a header of feature names. `Date` and `TomorrowTrend`
    /// columns are ignored if present.
    Csv(String),
    /// `name=value` pairs separated by commas.
    Row(String),
}

fn parse_row(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut names = Vec::new();
    let mut values = Vec::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidData(format!("expected name=value, got {pair:?}")))?;
        names.push(k.trim().to_string());
        values.push(
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidData(format!("cannot parse value for {k:?}")))?,
        );
    }
    Ok((names, values))
}

fn parse_predict_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| headers[i] != DATE && headers[i] != LABEL)
        .collect();
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: k + 2,
            message: e.to_string(),
        })?;
        rows.push(
            keep.iter()
                .map(|&i| {
                    rec[i].parse::<f64>().map_err(|_| Error::Parse {
                        row: k + 2,
                        message: format!("cannot parse {} value {:?}", headers[i], &rec[i]),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok((keep.iter().map(|&i| headers[i].clone()).collect(), rows))
}

/// Scores each input row with a saved model, in input order.
pub fn cmd_predict(model: &ModelFile, input: &PredictInput) -> Result<Vec<Prediction>> {
    let (names, rows) = match input {
        PredictInput::Csv(text) => parse_predict_csv(text)?,
        PredictInput::Row(text) => {
            let (names, values) = parse_row(text)?;
            (names, vec![values])
        }
    };
    let unique: HashSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(Error::InvalidData("duplicate feature names in input".into()));
    }
    let order = model.column_order(&names)?;
    rows.iter()
        .map(|r| {
            let raw: Vec<f64> = order.iter().map(|&i| r[i]).collect();
            model.predict_row(&raw)
        })
        .collect()
}

/// Re-renders the comparison table from a `metrics.json`.
pub fn cmd_report(out_dir: &Path) -> Result<String> {
    let report: TrainReport = serde_json::from_str(&read(&out_dir.join(METRICS_FILE))?)?;
    let table = report.table();
    write(&out_dir.join(TABLE_FILE), &table)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids_match_shipped_sizes() {
        let g = Grids::default();
        assert_eq!(g.expand(Family::LogisticRegression).unwrap().len(), 6);
        assert_eq!(g.expand(Family::RandomForest).unwrap().len(), 9);
        assert_eq!(g.expand(Family::GradientBoosting).unwrap().len(), 8);
        let first = &g.expand(Family::GradientBoosting).unwrap()[0];
        assert_eq!(
            first,
            &ModelSpec::GradientBoosting(GbmParams { n_rounds: 100, shrinkage: 0.05, max_depth: 3, min_samples_leaf: 1 })
        );
    }

    #[test]
    fn empty_or_invalid_grid_is_config_error() {
        let mut g = Grids::default();
        g.random_forest.n_trees.clear();
        assert!(matches!(g.expand(Family::RandomForest), Err(Error::Config(_))));
        let mut g = Grids::default();
        g.random_forest.n_trees = vec![0];
        assert!(matches!(g.expand(Family::RandomForest), Err(Error::Config(_))));
    }

    #[test]
    fn config_parsing_and_paths() {
        let text = r#"
ticker = "NFLX"
prices = "data/nflx.csv"
out_dir = "/tmp/run"
seed = 7

[split]
mode = "random"

[grids.random_forest]
n_trees = [10]
features_per_split = ["all", 3]
"#;
        let cfg = RunConfig::from_toml(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.prices.as_deref(), Some(Path::new("/base/data/nflx.csv")));
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/run"));
        assert_eq!(cfg.split.mode, SplitMode::Random);
        assert_eq!(cfg.split.ratio, 0.8);
        assert_eq!(cfg.grids.random_forest.features_per_split, vec![FeaturesPerSplit::All, FeaturesPerSplit::Count(3)]);
        assert_eq!(cfg.grids.random_forest.max_depth, vec![4, 6, 10]);
        assert_eq!(cfg.aggregation, Aggregation::Mean);

        assert!(RunConfig::from_toml("bogus = 1", Path::new(".")).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_err(), "no inputs");
        cfg.features = Some(PathBuf::from("/definitely/missing.csv"));
        assert!(cfg.validate().is_err());
        let tmp = tempfile::NamedTempFile::new().unwrap();
        cfg.features = Some(tmp.path().to_path_buf());
        cfg.validate().unwrap();
        cfg.split.ratio = 1.0;
        assert!(cfg.validate().is_err());
        cfg.split.ratio = 0.8;
        cfg.window = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn row_parsing() {
        let (n, v) = parse_row("High=1.5, Close = 2").unwrap();
        assert_eq!(n, vec!["High", "Close"]);
        assert_eq!(v, vec![1.5, 2.0]);
        assert!(parse_row("High").is_err());
        assert!(parse_row("High=x").is_err());
    }
}
