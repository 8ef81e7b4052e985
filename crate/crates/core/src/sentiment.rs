//! Lexicon-based article polarity and daily aggregation.
//!
//! An article's raw score is the sum of its tokens' valences, with a token
//! flipped and damped by [`NEGATION_SCALAR`] when a negator appears in the
//! [`NEGATION_WINDOW`] tokens before it. The raw score is squashed into
//! (-1, 1) by [`normalize_compound`].

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::news::{parse_word_list, TokenizedArticle};

pub const NEGATION_SCALAR: f64 = -0.74;
pub const NEGATION_WINDOW: usize = 3;
pub const NORMALIZATION_ALPHA: f64 = 15.0;
pub const MAX_VALENCE: f64 = 4.0;

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");
const DEFAULT_NEGATORS: &str = include_str!("../data/negators.txt");

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    valences: HashMap<String, f64>,
    negators: HashSet<String>,
}

impl Lexicon {
    pub fn new(valences: HashMap<String, f64>, negators: HashSet<String>) -> Result<Self> {
        if let Some((tok, v)) = valences
            .iter()
            .find(|(_, v)| !(-MAX_VALENCE..=MAX_VALENCE).contains(*v))
        {
            return Err(Error::InvalidData(format!(
                "valence {v} for {tok:?} outside [-{MAX_VALENCE}, {MAX_VALENCE}]"
            )));
        }
        Ok(Self { valences, negators })
    }

    /// Parses `token<TAB>valence` lines. Extra tab-separated columns are
    /// ignored so the upstream four-column lexicon format also loads.
    pub fn from_tsv(lexicon: &str, negators: &str) -> Result<Self> {
        let mut valences = HashMap::new();
        for (i, line) in lexicon.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or("").trim().to_lowercase();
            let value = cols.next().unwrap_or("").trim();
            let v: f64 = value.parse().map_err(|_| Error::Parse {
                row: i + 1,
                message: format!("cannot parse valence {value:?}"),
            })?;
            valences.insert(token, v);
        }
        Self::new(valences, parse_word_list(negators))
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.valences.get(token).copied()
    }

    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token)
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }
}

/// The bundled lexicon: alphanumeric entries of the VADER lexicon (MIT) and
/// its negation list with apostrophes removed.
pub fn default_lexicon() -> Lexicon {
    Lexicon::from_tsv(DEFAULT_LEXICON, DEFAULT_NEGATORS).expect("bundled lexicon is valid")
}

pub fn raw_valence_sum<S: AsRef<str>>(tokens: &[S], lex: &Lexicon) -> f64 {
    tokens
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let v = lex.valence(t.as_ref())?;
            let negated = tokens[i.saturating_sub(NEGATION_WINDOW)..i]
                .iter()
                .any(|p| lex.is_negator(p.as_ref()));
            Some(if negated { v * NEGATION_SCALAR } else { v })
        })
        .sum()
}

/// `s / sqrt(s^2 + 15)`: odd, strictly increasing, range (-1, 1).
pub fn normalize_compound(s: f64) -> f64 {
    s / (s * s + NORMALIZATION_ALPHA).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArticleScore {
    pub date: NaiveDate,
    pub compound: f64,
}

pub fn score_article(article: &TokenizedArticle, lex: &Lexicon) -> ArticleScore {
    ArticleScore {
        date: article.date,
        compound: normalize_compound(raw_valence_sum(&article.tokens, lex)),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    /// Sum of compounds; unbounded, so `overall` may leave [-1, 1].
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailySentiment {
    pub date: NaiveDate,
    pub overall: f64,
    pub article_count: usize,
}

pub fn aggregate_daily(scores: &[ArticleScore], mode: Aggregation) -> Vec<DailySentiment> {
    struct Acc {
        sum: f64,
        n: usize,
        lo: f64,
        hi: f64,
    }
    let mut by_date: BTreeMap<NaiveDate, Acc> = BTreeMap::new();
    for s in scores {
        let e = by_date.entry(s.date).or_insert(Acc {
            sum: 0.0,
            n: 0,
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
        });
        e.sum += s.compound;
        e.n += 1;
        e.lo = e.lo.min(s.compound);
        e.hi = e.hi.max(s.compound);
    }
    by_date
        .into_iter()
        .map(|(date, a)| DailySentiment {
            date,
            overall: match mode {
                // rounding in the sum can push the mean an ulp past its inputs
                Aggregation::Mean => (a.sum / a.n as f64).clamp(a.lo, a.hi),
                Aggregation::Sum => a.sum,
            },
            article_count: a.n,
        })
        .collect()
}
