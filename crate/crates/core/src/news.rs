//! News cleaning, ticker relevance filtering and tokenization.
//!
//! Processing order for each article: prepend the title, strip noise,
//! lowercase, keep only keyword matches, tokenize, drop tokens shorter than
//! two characters, drop stopwords.

use std::collections::{BTreeSet, HashSet};
use std::sync::LazyLock;

use chrono::NaiveDate;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::DATE_FORMAT;

pub type Stoplist = HashSet<String>;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Minimum token length kept after tokenization.
pub const MIN_TOKEN_LEN: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawArticle {
    pub date: NaiveDate,
    pub article: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub publication: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedArticle {
    pub date: NaiveDate,
    pub tokens: Vec<String>,
}

/// Lowercase words and phrases that mark an article as relevant to a ticker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    pub ticker: String,
    keywords: BTreeSet<String>,
}

impl KeywordSet {
    pub fn new<I, S>(ticker: impl Into<String>, keywords: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let keywords: BTreeSet<String> = keywords
            .into_iter()
            .map(|k| k.as_ref().split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        if keywords.is_empty() {
            return Err(Error::Config("keyword set is empty".into()));
        }
        Ok(Self {
            ticker: ticker.into(),
            keywords,
        })
    }

    /// Built-in keyword sets for the tickers studied originally.
    pub fn default_for(ticker: &str) -> Option<Self> {
        let words: &[&str] = match ticker.to_ascii_uppercase().as_str() {
            "AAPL" => &["apple", "aapl", "iphone", "ipad", "tim cook"],
            "AMZN" => &["amazon", "amzn", "jeff bezos", "aws"],
            "NFLX" => &["netflix", "nflx", "reed hastings"],
            _ => return None,
        };
        Self::new(ticker, words).ok()
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }
}

pub fn default_stoplist() -> Stoplist {
    parse_word_list(DEFAULT_STOPWORDS)
}

/// One lowercase word per line; blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());
static HTML_ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(?:#[0-9]+|#[xX][0-9a-fA-F]+|[a-zA-Z]+);").unwrap());
static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|ftp://|www\.)\S*").unwrap());
static EMAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+").unwrap());
static POSSESSIVE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)['’]s\b").unwrap());
static APOSTROPHE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"['’]").unwrap());
static NON_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\p{L}\p{N}\s]|_").unwrap());

/// Removes URLs, e-mail addresses, HTML markup, punctuation and digit-only
/// words, and collapses whitespace. Case is preserved.
///
/// Possessive `'s` is dropped and other apostrophes are deleted so that
/// contractions survive as single words ("don't" becomes "dont").
pub fn strip_noise(text: &str) -> String {
    let text = HTML_TAG.replace_all(text, " ");
    let text = HTML_ENTITY.replace_all(&text, " ");
    let text = URL.replace_all(&text, " ");
    let text = EMAIL.replace_all(&text, " ");
    let text = POSSESSIVE.replace_all(&text, "");
    let text = APOSTROPHE.replace_all(&text, "");
    let text = NON_WORD.replace_all(&text, " ");
    text.split_whitespace()
        .filter(|w| !w.chars().all(char::is_numeric))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn to_lowercase(text: &str) -> String {
    text.to_lowercase()
}

fn words(text: &str) -> Vec<&str> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect()
}

/// True when any keyword appears as a whole word (or whole-word phrase).
pub fn matches_keywords(text: &str, keywords: &KeywordSet) -> bool {
    let text_words = words(text);
    keywords.keywords().any(|k| {
        let kw = words(k);
        !kw.is_empty() && text_words.windows(kw.len()).any(|w| w == kw.as_slice())
    })
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub fn remove_stopwords(tokens: &[String], stoplist: &HashSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t.as_str()))
        .cloned()
        .collect()
}

fn drop_short_tokens(tokens: Vec<String>) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| t.chars().count() >= MIN_TOKEN_LEN)
        .collect()
}

/// The full cleaning chain without relevance filtering.
pub fn clean_and_tokenize(text: &str, stoplist: &Stoplist) -> Vec<String> {
    let text = to_lowercase(&strip_noise(text));
    remove_stopwords(&drop_short_tokens(tokenize(&text)), stoplist)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub input: usize,
    pub empty_after_cleaning: usize,
    pub unmatched: usize,
    pub output: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ProcessedCorpus {
    pub articles: Vec<TokenizedArticle>,
    pub stats: CorpusStats,
}

enum Outcome {
    Kept(TokenizedArticle),
    Empty,
    Unmatched,
}

fn process_one(a: &RawArticle, keywords: &KeywordSet, stoplist: &Stoplist) -> Outcome {
    let text = match &a.title {
        Some(t) if !t.trim().is_empty() => format!("{t} {}", a.article),
        _ => a.article.clone(),
    };
    let cleaned = to_lowercase(&strip_noise(&text));
    if cleaned.is_empty() {
        return Outcome::Empty;
    }
    if !matches_keywords(&cleaned, keywords) {
        return Outcome::Unmatched;
    }
    let tokens = remove_stopwords(&drop_short_tokens(tokenize(&cleaned)), stoplist);
    if tokens.is_empty() {
        return Outcome::Empty;
    }
    Outcome::Kept(TokenizedArticle {
        date: a.date,
        tokens,
    })
}

/// Cleans, filters and tokenizes a corpus. Articles are processed in
/// parallel; the output is ordered by (date, input position).
pub fn preprocess_corpus(
    articles: &[RawArticle],
    keywords: &KeywordSet,
    stoplist: &Stoplist,
) -> ProcessedCorpus {
    let outcomes: Vec<Outcome> = articles
        .par_iter()
        .map(|a| process_one(a, keywords, stoplist))
        .collect();

    let mut stats = CorpusStats {
        input: articles.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Kept(t) => kept.push(t),
            Outcome::Empty => stats.empty_after_cleaning += 1,
            Outcome::Unmatched => stats.unmatched += 1,
        }
    }
    kept.sort_by_key(|t| t.date);
    stats.output = kept.len();
    ProcessedCorpus {
        articles: kept,
        stats,
    }
}

#[derive(Deserialize)]
struct WireArticle {
    date: String,
    #[serde(default)]
    article: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    publication: Option<String>,
}

/// Reads a JSON-lines news file. Records with a blank article body are
/// skipped; the count is returned alongside the articles. The date may carry
/// a time suffix, only the leading `YYYY-MM-DD` is used.
pub fn parse_news_jsonl(text: &str) -> Result<(Vec<RawArticle>, usize)> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 1;
        let w: WireArticle = serde_json::from_str(line).map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let day = w.date.trim().get(..10).unwrap_or(w.date.trim());
        let date = NaiveDate::parse_from_str(day, DATE_FORMAT).map_err(|_| Error::Parse {
            row,
            message: format!("cannot parse date {:?}", w.date),
        })?;
        match w.article {
            Some(article) if !article.trim().is_empty() => out.push(RawArticle {
                date,
                article,
                title: w.title,
                publication: w.publication,
            }),
            _ => skipped += 1,
        }
    }
    Ok((out, skipped))
}
