//! Feature matrix assembly, correlation analysis, selection, min-max
//! scaling and train/test splitting.

use std::collections::HashMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::IndicatorRow;
use crate::market_data::{BarSeries, DATE_FORMAT};
use crate::sentiment::DailySentiment;

pub const HIGH: &str = "High";
pub const CLOSE: &str = "Close";
pub const VOLUME: &str = "Volume";
pub const SMA: &str = "SMA";
pub const RSI: &str = "RSI";
pub const PCT_K: &str = "%K";
pub const SENTIMENT: &str = "Sentiment";
pub const TODAY_TREND: &str = "TodayTrend";
pub const OPEN: &str = "Open";
pub const LOW: &str = "Low";
pub const ADJ_CLOSE: &str = "AdjClose";

pub const LABEL: &str = "TomorrowTrend";
pub const DATE: &str = "Date";

/// Model input columns, in order.
pub const FEATURE_COLUMNS: [&str; 8] = [HIGH, CLOSE, VOLUME, SMA, RSI, PCT_K, SENTIMENT, TODAY_TREND];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub dates: Vec<NaiveDate>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            column_names: self.column_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dates: indices
                .iter()
                .filter_map(|&i| self.dates.get(i).copied())
                .collect(),
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.rows.len() != self.labels.len() {
            return Err(Error::Dimension {
                expected: self.rows.len(),
                got: self.labels.len(),
            });
        }
        if let Some(r) = self.rows.iter().find(|r| r.len() != self.column_names.len()) {
            return Err(Error::Dimension {
                expected: self.column_names.len(),
                got: r.len(),
            });
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![DATE.to_string()];
        header.extend(self.column_names.iter().cloned());
        header.push(LABEL.to_string());
        w.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![self
                .dates
                .get(i)
                .map(|d| d.format(DATE_FORMAT).to_string())
                .unwrap_or_default()];
            rec.extend(row.iter().map(f64::to_string));
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Reads the layout written by [`FeatureMatrix::to_csv`]: a `Date`
    /// column, the feature columns, and a trailing `TomorrowTrend` label.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let date_idx = headers.iter().position(|h| h == DATE);
        let label_idx = headers
            .iter()
            .position(|h| h == LABEL)
            .ok_or_else(|| Error::MissingColumn(LABEL.into()))?;
        let feature_idx: Vec<usize> = (0..headers.len())
            .filter(|&i| Some(i) != date_idx && i != label_idx)
            .collect();

        let mut m = FeatureMatrix {
            column_names: feature_idx.iter().map(|&i| headers[i].clone()).collect(),
            ..Default::default()
        };
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| Error::Parse {
                row: line,
                message: e.to_string(),
            })?;
            let parse_err = |what: &str, v: &str| Error::Parse {
                row: line,
                message: format!("cannot parse {what} value {v:?}"),
            };
            if let Some(di) = date_idx {
                let v = &rec[di];
                m.dates.push(
                    NaiveDate::parse_from_str(v, DATE_FORMAT).map_err(|_| parse_err(DATE, v))?,
                );
            }
            let row = feature_idx
                .iter()
                .map(|&i| rec[i].parse::<f64>().map_err(|_| parse_err(&headers[i], &rec[i])))
                .collect::<Result<Vec<_>>>()?;
            let label = match &rec[label_idx] {
                "0" => 0,
                "1" => 1,
                v => return Err(parse_err(LABEL, v)),
            };
            m.rows.push(row);
            m.labels.push(label);
        }
        Ok(m)
    }
}

/// Left join of indicator rows with daily sentiment on date. Days without
/// sentiment get 0.0; sentiment on days without a row is ignored.
pub fn join_features(rows: &[IndicatorRow], sentiment: &[DailySentiment]) -> FeatureMatrix {
    let by_date: HashMap<NaiveDate, f64> = sentiment.iter().map(|s| (s.date, s.overall)).collect();
    let mut m = FeatureMatrix {
        column_names: FEATURE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    };
    for r in rows {
        m.rows.push(vec![
            r.high,
            r.close,
            r.volume as f64,
            r.sma,
            r.rsi,
            r.pct_k,
            by_date.get(&r.date).copied().unwrap_or(0.0),
            f64::from(r.today_trend.encode()),
        ]);
        m.labels.push(r.tomorrow_trend.encode());
        m.dates.push(r.date);
    }
    m
}

/// Number of sentiment days that have no matching feature row.
pub fn unmatched_sentiment_days(rows: &[IndicatorRow], sentiment: &[DailySentiment]) -> usize {
    let dates: std::collections::HashSet<NaiveDate> = rows.iter().map(|r| r.date).collect();
    sentiment.iter().filter(|s| !dates.contains(&s.date)).count()
}

/// Appends the raw Open, Low and Adj Close columns from `series` so the
/// correlation report covers the whole price block.
pub fn with_price_columns(m: &FeatureMatrix, series: &BarSeries) -> Result<FeatureMatrix> {
    let by_date: HashMap<NaiveDate, _> = series.bars.iter().map(|b| (b.date, b)).collect();
    let mut out = m.clone();
    out.column_names
        .extend([OPEN, LOW, ADJ_CLOSE].iter().map(|s| s.to_string()));
    for (row, date) in out.rows.iter_mut().zip(&m.dates) {
        let b = by_date
            .get(date)
            .ok_or_else(|| Error::InvalidData(format!("no bar for {date}")))?;
        row.extend([b.open, b.low, b.adj_close]);
    }
    Ok(out)
}

/// Pairwise Pearson coefficients. Entries involving a constant column are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    /// Square CSV with a leading name column; undefined entries are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// `{"names": [...], "matrix": {a: {b: r_ab}}}` with `null` for
    /// undefined entries.
    pub fn to_json(&self) -> serde_json::Value {
        let mut matrix = serde_json::Map::new();
        for (a, row) in self.names.iter().zip(&self.values) {
            let inner: serde_json::Map<String, serde_json::Value> = self
                .names
                .iter()
                .zip(row)
                .map(|(b, v)| (b.clone(), serde_json::json!(v)))
                .collect();
            matrix.insert(a.clone(), inner.into());
        }
        serde_json::json!({ "names": self.names, "matrix": matrix })
    }
}

pub fn pearson_matrix(m: &FeatureMatrix) -> Result<CorrelationMatrix> {
    let n = m.n_rows();
    if n < 2 {
        return Err(Error::InvalidData(format!(
            "correlation needs at least 2 rows, got {n}"
        )));
    }
    let d = m.n_cols();
    let centered: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let col = m.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();

    let mut values = vec![vec![None; d]; d];
    for i in 0..d {
        for j in i..d {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let r = if i == j {
                1.0
            } else {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            values[i][j] = Some(r);
            values[j][i] = Some(r);
        }
    }
    Ok(CorrelationMatrix {
        names: m.column_names.clone(),
        values,
    })
}

/// Columns to remove from the joined matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropPolicy {
    pub drop: Vec<String>,
}

impl Default for DropPolicy {
    /// Keeps High, Close and SMA from the correlated price block.
    fn default() -> Self {
        Self {
            drop: [OPEN, LOW, ADJ_CLOSE].iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Applies `policy`. Names that are not present produce a warning and are
/// otherwise ignored.
pub fn select_features(m: &FeatureMatrix, policy: &DropPolicy) -> (FeatureMatrix, Vec<String>) {
    let warnings = policy
        .drop
        .iter()
        .filter(|name| m.column_index(name).is_none())
        .map(|name| format!("column {name:?} not present, nothing to drop"))
        .collect();
    let keep: Vec<usize> = (0..m.n_cols())
        .filter(|&j| !policy.drop.contains(&m.column_names[j]))
        .collect();
    let out = FeatureMatrix {
        column_names: keep.iter().map(|&j| m.column_names[j].clone()).collect(),
        rows: m
            .rows
            .iter()
            .map(|r| keep.iter().map(|&j| r[j]).collect())
            .collect(),
        labels: m.labels.clone(),
        dates: m.dates.clone(),
    };
    (out, warnings)
}

/// Per-column min/max learned from a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub column_names: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl ScalerState {
    pub fn fit(train: &FeatureMatrix) -> Result<Self> {
        if train.n_rows() == 0 {
            return Err(Error::InvalidData("cannot fit scaler on an empty matrix".into()));
        }
        let d = train.n_cols();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in &train.rows {
            for (j, &x) in row.iter().enumerate() {
                mins[j] = mins[j].min(x);
                maxs[j] = maxs[j].max(x);
            }
        }
        Ok(Self {
            column_names: train.column_names.clone(),
            mins,
            maxs,
        })
    }

    /// Maps to [-1, 1] over the fitted range. Values outside the range are
    /// not clamped; constant columns map to 0.
    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mins.len() {
            return Err(Error::Dimension {
                expected: self.mins.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&x, (&lo, &hi))| {
                if hi > lo {
                    -1.0 + 2.0 * (x - lo) / (hi - lo)
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.column_names != self.column_names {
            return Err(schema_mismatch(&self.column_names, &m.column_names));
        }
        Ok(FeatureMatrix {
            column_names: m.column_names.clone(),
            rows: m
                .rows
                .iter()
                .map(|r| self.transform_row(r))
                .collect::<Result<_>>()?,
            labels: m.labels.clone(),
            dates: m.dates.clone(),
        })
    }
}

pub(crate) fn schema_mismatch(expected: &[String], got: &[String]) -> Error {
    Error::Schema {
        missing: expected.iter().filter(|c| !got.contains(c)).cloned().collect(),
        extra: got.iter().filter(|c| !expected.contains(c)).cloned().collect(),
    }
}

/// Fits on `train` only and scales `apply_to` with that state.
pub fn min_max_scale(
    train: &FeatureMatrix,
    apply_to: &FeatureMatrix,
) -> Result<(FeatureMatrix, ScalerState)> {
    let state = ScalerState::fit(train)?;
    Ok((state.transform(apply_to)?, state))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// First rows train, later rows test.
    #[default]
    #[serde(alias = "chronological")]
    Chrono,
    /// Seeded uniform shuffle before cutting.
    Random,
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chrono" | "chronological" => Ok(SplitMode::Chrono),
            "random" => Ok(SplitMode::Random),
            _ => Err(Error::Config(format!("unknown split mode {s:?}"))),
        }
    }
}

/// Train size is `ceil(ratio * n)`. Both parts must be non-empty.
pub fn split_train_test(
    m: &FeatureMatrix,
    ratio: f64,
    mode: SplitMode,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let n = m.n_rows();
    let n_train = ((ratio * n as f64) - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidData(format!(
            "cannot split {n} rows at ratio {ratio}: one side would be empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if mode == SplitMode::Random {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok((m.subset(&order[..n_train]), m.subset(&order[n_train..])))
}
