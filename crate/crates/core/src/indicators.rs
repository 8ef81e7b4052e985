//! Trend labels and windowed technical indicators over a [`BarSeries`].
//!
//! Every indicator at index `i` looks only at bars `..=i`. Windows default
//! to [`DEFAULT_WINDOW`] trading days.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{Bar, BarSeries};

pub const DEFAULT_WINDOW: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrendLabel {
    Up,
    Down,
}

impl TrendLabel {
    /// Non-negative change is an uptrend.
    pub fn from_change(delta: f64) -> Self {
        if delta >= 0.0 {
            TrendLabel::Up
        } else {
            TrendLabel::Down
        }
    }

    pub fn encode(self) -> u8 {
        match self {
            TrendLabel::Up => 1,
            TrendLabel::Down => 0,
        }
    }

    pub fn decode(v: u8) -> Option<Self> {
        match v {
            1 => Some(TrendLabel::Up),
            0 => Some(TrendLabel::Down),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub date: NaiveDate,
    pub high: f64,
    pub close: f64,
    pub volume: i64,
    pub sma: f64,
    pub rsi: f64,
    pub pct_k: f64,
    pub today_trend: TrendLabel,
    pub tomorrow_trend: TrendLabel,
}

pub fn today_trend(bar: &Bar) -> TrendLabel {
    TrendLabel::from_change(bar.close - bar.open)
}

pub fn tomorrow_trend(series: &BarSeries, i: usize) -> Result<TrendLabel> {
    let bars = &series.bars;
    if i + 1 >= bars.len() {
        return Err(Error::NoLabel(i));
    }
    Ok(TrendLabel::from_change(bars[i + 1].close - bars[i].close))
}

fn check_window(series: &BarSeries, i: usize, n: usize, needed: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("indicator window must be positive".into()));
    }
    if i >= series.len() {
        return Err(Error::InvalidData(format!(
            "index {i} out of range for {} bars",
            series.len()
        )));
    }
    if i < needed {
        return Err(Error::Warmup { index: i, needed });
    }
    Ok(())
}

/// Mean close over bars `i-n+1 ..= i`.
pub fn sma(series: &BarSeries, i: usize, n: usize) -> Result<f64> {
    check_window(series, i, n, n.saturating_sub(1))?;
    let window = &series.bars[i + 1 - n..=i];
    Ok(window.iter().map(|b| b.close).sum::<f64>() / n as f64)
}

/// RSI from simple means of the last `n` close-to-close gains and losses.
///
/// A window with no losses gives 100, no gains gives 0, and a completely
/// flat window gives 50.
pub fn rsi(series: &BarSeries, i: usize, n: usize) -> Result<f64> {
    check_window(series, i, n, n)?;
    let (mut gain, mut loss) = (0.0, 0.0);
    for w in series.bars[i - n..=i].windows(2) {
        let change = w[1].close - w[0].close;
        if change > 0.0 {
            gain += change;
        } else {
            loss -= change;
        }
    }
    let (avg_up, avg_down) = (gain / n as f64, loss / n as f64);
    Ok(match (avg_up == 0.0, avg_down == 0.0) {
        (true, true) => 50.0,
        (_, true) => 100.0,
        (true, _) => 0.0,
        _ => 100.0 - 100.0 / (1.0 + avg_up / avg_down),
    })
}

/// Stochastic %K: where the close sits in the window's low/high range.
/// A window with no range gives 50.
pub fn pct_k(series: &BarSeries, i: usize, n: usize) -> Result<f64> {
    check_window(series, i, n, n.saturating_sub(1))?;
    let window = &series.bars[i + 1 - n..=i];
    let lowest = window.iter().map(|b| b.low).fold(f64::INFINITY, f64::min);
    let highest = window.iter().map(|b| b.high).fold(f64::NEG_INFINITY, f64::max);
    if highest == lowest {
        return Ok(50.0);
    }
    // a close outside its own bar's low/high would otherwise leave [0, 100]
    Ok((100.0 * ((series.bars[i].close - lowest) / (highest - lowest))).clamp(0.0, 100.0))
}

/// Builds one row per bar that has a full indicator history and a next-day
/// label, i.e. indices `n ..= len-2`. A series of length `len` yields
/// `len - n - 1` rows.
pub fn build_indicator_frame(series: &BarSeries, n: usize) -> Result<Vec<IndicatorRow>> {
    if n < 2 {
        return Err(Error::Config(format!("indicator window must be >= 2, got {n}")));
    }
    let needed = n + 2;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed,
        });
    }
    (n..series.len() - 1)
        .map(|i| {
            let bar = &series.bars[i];
            Ok(IndicatorRow {
                date: bar.date,
                high: bar.high,
                close: bar.close,
                volume: bar.volume,
                sma: sma(series, i, n)?,
                rsi: rsi(series, i, n)?,
                pct_k: pct_k(series, i, n)?,
                today_trend: today_trend(bar),
                tomorrow_trend: tomorrow_trend(series, i)?,
            })
        })
        .collect()
}
