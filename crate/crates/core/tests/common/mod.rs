//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stocktrend::market_data::{Bar, BarSeries};

pub const WINDOW: usize = 14;
/// Probability that the rule's direction is flipped; the best achievable
/// accuracy on the fixture is `1 - FLIP`.
pub const FLIP: f64 = 0.15;
const GOOD: f64 = 1.9;
const BAD: f64 = -2.5;

pub fn day(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 1, 4).unwrap() + chrono::Days::new(i as u64)
}

/// Brute-force RSI over closes `i-n ..= i`.
pub fn oracle_rsi(closes: &[f64], i: usize, n: usize) -> f64 {
    let diffs: Vec<f64> = (i - n + 1..=i).map(|k| closes[k] - closes[k - 1]).collect();
    let up: f64 = diffs.iter().filter(|d| **d > 0.0).sum::<f64>() / n as f64;
    let down: f64 = diffs.iter().filter(|d| **d < 0.0).map(|d| -d).sum::<f64>() / n as f64;
    if up == 0.0 && down == 0.0 {
        50.0
    } else if down == 0.0 {
        100.0
    } else if up == 0.0 {
        0.0
    } else {
        100.0 - 100.0 / (1.0 + up / down)
    }
}

pub struct Market {
    pub series: BarSeries,
    /// One JSON line per day.
    pub news: String,
    /// Label the noise-free rule gives for each bar with a full window.
    pub rule_labels: Vec<Option<u8>>,
}

/// A price path where each day's move follows
/// `sign(-(RSI - 50) / 50 + compound)` with the sign flipped at rate
/// [`FLIP`]. `compound` is the score of that day's only news article,
/// which repeats "good" or "bad" `k` times, `|k| <= 3`.
pub fn synthetic_market(n_bars: usize, seed: u64) -> Market {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closes = vec![100.0];
    let mut bars = Vec::with_capacity(n_bars);
    let mut news = String::new();
    let mut rule_labels = Vec::with_capacity(n_bars);
    for i in 0..n_bars {
        let k: i32 = rng.gen_range(-3..=3);
        let (word, valence) = if k >= 0 { ("good", GOOD) } else { ("bad", BAD) };
        let s = k.unsigned_abs() as f64 * valence;
        let compound = s / (s * s + 15.0).sqrt();
        let mut body = String::from("Apple stock traded today");
        for _ in 0..k.unsigned_abs() {
            body.push(' ');
            body.push_str(word);
        }
        news.push_str(&serde_json::json!({ "date": day(i).to_string(), "article": body }).to_string());
        news.push('\n');

        let rule = (i >= WINDOW).then(|| {
            let z = -(oracle_rsi(&closes, i, WINDOW) - 50.0) / 50.0 + compound;
            u8::from(z >= 0.0)
        });
        rule_labels.push(rule);
        let up = match rule {
            Some(l) => (l == 1) != rng.gen_bool(FLIP),
            None => rng.gen_bool(0.5),
        };
        let close = closes[i];
        let step = rng.gen_range(0.004..0.02) * close;
        closes.push(if up { close + step } else { close - step });

        let open = close * (1.0 + rng.gen_range(-0.01..0.01));
        let high = open.max(close) * (1.0 + rng.gen_range(0.0..0.01));
        let low = open.min(close) * (1.0 - rng.gen_range(0.0..0.01));
        bars.push(Bar {
            date: day(i),
            open,
            high,
            low,
            close,
            adj_close: close,
            volume: rng.gen_range(1_000_000..5_000_000),
        });
    }
    Market {
        series: BarSeries {
            ticker: "AAPL".into(),
            bars,
        },
        news,
        rule_labels,
    }
}

/// Writes the market and a run config into `dir`; returns the config path.
/// `extra` is appended to the config verbatim.
pub fn write_run(dir: &Path, market: &Market, extra: &str) -> PathBuf {
    std::fs::write(dir.join("prices.csv"), market.series.to_csv()).unwrap();
    std::fs::write(dir.join("news.jsonl"), &market.news).unwrap();
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        format!(
            "ticker = \"AAPL\"\nprices = \"prices.csv\"\nnews = \"news.jsonl\"\nout_dir = \"out\"\nseed = 42\n{extra}"
        ),
    )
    .unwrap();
    config
}
