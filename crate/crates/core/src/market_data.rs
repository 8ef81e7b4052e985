//! Daily OHLCV price series: CSV ingestion and validation.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

const COLUMNS: [&str; 7] = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"];

/// One trading day of price data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: i64,
}

/// Bars for one ticker, ascending by date.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BarSeries {
    pub ticker: String,
    pub bars: Vec<Bar>,
}

impl BarSeries {
    pub fn new(ticker: impl Into<String>, bars: Vec<Bar>) -> Self {
        Self {
            ticker: ticker.into(),
            bars,
        }
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> impl Iterator<Item = f64> + '_ {
        self.bars.iter().map(|b| b.close)
    }

    /// Writes the series in the same CSV layout `parse_ohlcv_csv` reads.
    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for b in &self.bars {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                b.date.format(DATE_FORMAT),
                b.open,
                b.high,
                b.low,
                b.close,
                b.adj_close,
                b.volume
            ));
        }
        out
    }
}

/// Parses a Yahoo-style daily price export.
///
/// Header names are matched case-insensitively and in any order; extra
/// columns are ignored. Rows are returned sorted by date. Errors carry the
/// 1-based line number of the offending row (the header is line 1).
pub fn parse_ohlcv_csv(text: &str, ticker: &str) -> Result<BarSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut bars = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row: line,
            message: e.to_string(),
        })?;
        let cell = |k: usize| record.get(idx[k]).unwrap_or("");
        let price = |k: usize| -> Result<f64> {
            cell(k).parse::<f64>().map_err(|_| Error::Parse {
                row: line,
                message: format!("cannot parse {} value {:?}", COLUMNS[k], cell(k)),
            })
        };
        let date = NaiveDate::parse_from_str(cell(0), DATE_FORMAT).map_err(|_| Error::Parse {
            row: line,
            message: format!("cannot parse Date value {:?}", cell(0)),
        })?;
        bars.push(Bar {
            date,
            open: price(1)?,
            high: price(2)?,
            low: price(3)?,
            close: price(4)?,
            adj_close: price(5)?,
            volume: parse_volume(cell(6)).ok_or_else(|| Error::Parse {
                row: line,
                message: format!("cannot parse Volume value {:?}", cell(6)),
            })?,
        });
    }

    bars.sort_by_key(|b| b.date);
    if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(Error::DuplicateDate(w[0].date));
    }
    Ok(BarSeries::new(ticker, bars))
}

// Some exports write integral volumes as "1234.0".
fn parse_volume(s: &str) -> Option<i64> {
    s.parse::<i64>().ok().or_else(|| {
        let v = s.parse::<f64>().ok()?;
        (v.fract() == 0.0 && v.abs() < i64::MAX as f64).then_some(v as i64)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Problem {
    NonPositivePrice(&'static str),
    LowAboveHigh,
    LowAboveBody,
    HighBelowBody,
    NegativeVolume,
    DateNotIncreasing,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::NonPositivePrice(field) => write!(f, "{field} is not positive"),
            Problem::LowAboveHigh => f.write_str("low above high"),
            Problem::LowAboveBody => f.write_str("low above min(open, close)"),
            Problem::HighBelowBody => f.write_str("high below max(open, close)"),
            Problem::NegativeVolume => f.write_str("negative volume"),
            Problem::DateNotIncreasing => f.write_str("date not after previous bar"),
        }
    }
}

/// A bar that breaks one or more invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub date: NaiveDate,
    pub problems: Vec<Problem>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every bar against the OHLCV invariants. Never fails; one entry
/// per offending bar.
pub fn validate_series(series: &BarSeries) -> ValidationReport {
    let violations = series
        .bars
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let mut problems = Vec::new();
            for (name, v) in [
                ("open", b.open),
                ("high", b.high),
                ("low", b.low),
                ("close", b.close),
                ("adj_close", b.adj_close),
            ] {
                if !(v > 0.0) {
                    problems.push(Problem::NonPositivePrice(name));
                }
            }
            if b.low > b.high {
                problems.push(Problem::LowAboveHigh);
            }
            if b.low > b.open.min(b.close) {
                problems.push(Problem::LowAboveBody);
            }
            if b.high < b.open.max(b.close) {
                problems.push(Problem::HighBelowBody);
            }
            if b.volume < 0 {
                problems.push(Problem::NegativeVolume);
            }
            if i > 0 && series.bars[i - 1].date >= b.date {
                problems.push(Problem::DateNotIncreasing);
            }
            (!problems.is_empty()).then(|| Violation {
                index: i,
                date: b.date,
                problems,
            })
        })
        .collect();
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "Date,Open,High,Low,Close,Adj Close,Volume\n";

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn bar(date: NaiveDate, open: f64, high: f64, low: f64, close: f64) -> Bar {
        Bar {
            date,
            open,
            high,
            low,
            close,
            adj_close: close,
            volume: 1000,
        }
    }

    #[test]
    fn parses_single_row() {
        let text = format!("{HEADER}2016-01-04,25.65,26.34,25.50,26.34,24.20,270597600\n");
        let s = parse_ohlcv_csv(&text, "AAPL").unwrap();
        assert_eq!(s.ticker, "AAPL");
        assert_eq!(
            s.bars,
            vec![Bar {
                date: d("2016-01-04"),
                open: 25.65,
                high: 26.34,
                low: 25.50,
                close: 26.34,
                adj_close: 24.20,
                volume: 270597600,
            }]
        );
    }

    #[test]
    fn header_only_is_empty() {
        let s = parse_ohlcv_csv(HEADER, "AAPL").unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn rows_are_sorted() {
        let text = format!(
            "{HEADER}2016-01-05,1,2,0.5,1.5,1.5,10\n2016-01-04,1,2,0.5,1.2,1.2,10\n"
        );
        let s = parse_ohlcv_csv(&text, "X").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.bars[0].date, d("2016-01-04"));
        assert_eq!(s.bars[1].date, d("2016-01-05"));
    }

    #[test]
    fn header_is_case_and_order_insensitive() {
        let text = "volume,adj close,CLOSE,low,high,open,date\n10,1.5,1.5,0.5,2,1,2016-01-04\n";
        let s = parse_ohlcv_csv(text, "X").unwrap();
        assert_eq!(s.bars[0].open, 1.0);
        assert_eq!(s.bars[0].volume, 10);
    }

    #[test]
    fn missing_column_is_named() {
        let err = parse_ohlcv_csv("Date,Open,High,Low,Close,Volume\n", "X").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "Adj Close"), "{err}");
    }

    #[test]
    fn bad_cell_reports_row() {
        let text = format!("{HEADER}2016-01-04,1,2,0.5,1.5,1.5,10\n2016-01-05,1,abc,0.5,1.5,1.5,10\n");
        match parse_ohlcv_csv(&text, "X").unwrap_err() {
            Error::Parse { row, message } => {
                assert_eq!(row, 3);
                assert!(message.contains("High"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_date_rejected() {
        let text = format!("{HEADER}2016-01-04,1,2,0.5,1.5,1.5,10\n2016-01-04,1,2,0.5,1.5,1.5,10\n");
        assert!(matches!(
            parse_ohlcv_csv(&text, "X"),
            Err(Error::DuplicateDate(_))
        ));
    }

    #[test]
    fn low_above_high_is_one_violation() {
        let mut s = BarSeries::new("X", vec![bar(d("2016-01-04"), 10.0, 9.0, 11.0, 10.0)]);
        s.bars.push(bar(d("2016-01-05"), 10.0, 11.0, 9.0, 10.0));
        let r = validate_series(&s);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].date, d("2016-01-04"));
        assert!(r.violations[0].problems.contains(&Problem::LowAboveHigh));
    }

    #[test]
    fn clean_series_has_empty_report() {
        let start = d("2016-01-04");
        let bars = (0..10)
            .map(|i| bar(start + chrono::Days::new(i), 10.0, 11.0, 9.0, 10.5))
            .collect();
        assert!(validate_series(&BarSeries::new("X", bars)).is_valid());
    }

    #[test]
    fn negative_volume_flagged() {
        let mut b = bar(d("2016-01-04"), 10.0, 11.0, 9.0, 10.5);
        b.volume = -1;
        let r = validate_series(&BarSeries::new("X", vec![b]));
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].problems, vec![Problem::NegativeVolume]);
    }

    fn arb_series() -> impl Strategy<Value = BarSeries> {
        proptest::collection::vec(
            (0.01f64..1e4, 0.01f64..1e4, 0.0f64..10.0, 0.0f64..10.0, 0.01f64..1e4, 0i64..i64::MAX / 2),
            0..40,
        )
        .prop_map(|rows| {
            let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
            let bars = rows
                .into_iter()
                .enumerate()
                .map(|(i, (o, c, up, down, adj, vol))| Bar {
                    date: start + chrono::Days::new(i as u64),
                    open: o,
                    high: o.max(c) + up,
                    low: (o.min(c) - down).max(0.001),
                    close: c,
                    adj_close: adj,
                    volume: vol,
                })
                .collect();
            BarSeries::new("X", bars)
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(s in arb_series()) {
            let text = s.to_csv();
            let back = parse_ohlcv_csv(&text, "X").unwrap();
            prop_assert_eq!(back.len(), text.lines().count() - 1);
            prop_assert_eq!(back, s);
        }
    }
}
