//! Next-day stock trend classification.
//!
//! The pipeline turns daily OHLCV bars and a news corpus into a feature
//! matrix (technical indicators plus a daily sentiment score) and trains
//! three binary classifiers on it: logistic regression, a random forest and
//! a gradient-boosting machine.
//!
//! Stages, in order:
//!
//! * [`market_data`]: parse and validate price CSVs.
//! * [`news`]: clean, filter and tokenize raw articles.
//! * [`sentiment`]: lexicon scoring and daily aggregation.
//! * [`indicators`]: trend labels, SMA, RSI and stochastic %K.
//! * [`features`]: join, correlation, selection, scaling and splitting.
//! * [`models`]: classifiers, k-fold cross-validation and grid search.
//! * [`metrics`]: confusion matrix and derived scores.
//! * [`pipeline`]: config-driven orchestration used by the CLI.

pub mod error;
pub mod features;
pub mod indicators;
pub mod market_data;
pub mod metrics;
pub mod models;
pub mod news;
pub mod pipeline;
pub mod sentiment;

pub use error::{Error, Result};
