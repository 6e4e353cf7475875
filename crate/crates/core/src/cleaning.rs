//! Row cleaning: trimming, null/noise filtering, tweet text normalization,
//! sentiment extraction and date normalization.
//!
//! Each dataset has a cleaner bound to its [`SchemaDescriptor`]. A cleaner
//! turns one [`RawRow`] into a typed record or a [`DropReason`]; it never
//! fails otherwise, so every input row is accounted for.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate, NaiveTime};
use serde::Serialize;
use thiserror::Error;

use crate::ingestion::{quote_value, split_csv_line, DatasetKind, RawRow, SchemaDescriptor};
use crate::sentiment::{classify_sentiment, score_polarity, PolarityLexicon, SentimentLabel};
use crate::textlist::{self, ListLine};

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords.txt");

// ---------------------------------------------------------------------------
// Field-level helpers
// ---------------------------------------------------------------------------

/// Strip surrounding whitespace and matched surrounding quotes.
///
/// Quote layers are removed until none remain, which keeps the function
/// idempotent for nested quoting such as `"'x'"`.
pub fn trim_field(cell: &str) -> &str {
    let mut s = cell.trim();
    loop {
        let b = s.as_bytes();
        if b.len() >= 2 && (b[0] == b'"' || b[0] == b'\'') && b[b.len() - 1] == b[0] {
            s = s[1..s.len() - 1].trim();
        } else {
            return s;
        }
    }
}

/// Empty, `null`, `na` and `nan` (any case) are null markers.
pub fn is_null(value: &str) -> bool {
    value.is_empty()
        || value.eq_ignore_ascii_case("null")
        || value.eq_ignore_ascii_case("na")
        || value.eq_ignore_ascii_case("nan")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unparseable date '{0}'")]
pub struct UnparseableDate(pub String);

/// Normalize a date cell to a calendar date.
///
/// Accepted, in order: `yyyy-mm-dd`, `yyyy-mm-dd HH:MM:SS` with an optional
/// trailing zone token, `yyyy/mm/dd`, `mm/dd/yyyy`, and integer epoch
/// seconds (UTC). Timestamps are truncated, not zone-converted.
pub fn normalize_date(raw: &str) -> Result<NaiveDate, UnparseableDate> {
    let s = trim_field(raw);
    let fail = || UnparseableDate(s.to_string());
    let mut tokens = s.split_whitespace();
    let first = tokens.next().ok_or_else(fail)?;
    let second = tokens.next();
    let third = tokens.next();
    if tokens.next().is_some() {
        return Err(fail());
    }

    if let Some(time) = second {
        let date = NaiveDate::parse_from_str(first, "%Y-%m-%d").map_err(|_| fail())?;
        NaiveTime::parse_from_str(time, "%H:%M:%S").map_err(|_| fail())?;
        if let Some(zone) = third {
            if !is_zone_token(zone) {
                return Err(fail());
            }
        }
        return Ok(date);
    }

    for fmt in ["%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y"] {
        if let Ok(date) = NaiveDate::parse_from_str(first, fmt) {
            return Ok(date);
        }
    }
    let digits = first.strip_prefix('-').unwrap_or(first);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        let secs: i64 = first.parse().map_err(|_| fail())?;
        return DateTime::from_timestamp(secs, 0)
            .map(|dt| dt.date_naive())
            .ok_or_else(fail);
    }
    Err(fail())
}

fn is_zone_token(token: &str) -> bool {
    if token.bytes().all(|b| b.is_ascii_alphabetic()) {
        return true;
    }
    match token.strip_prefix(['+', '-']) {
        Some(offset) => !offset.is_empty() && offset.bytes().all(|b| b.is_ascii_digit() || b == b':'),
        None => false,
    }
}

#[derive(Debug, Error)]
pub enum StopwordError {
    #[error("failed to read stopword list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stopword line {line}: '{word}' is not a lowercase alphabetic word")]
    BadWord { line: usize, word: String },
    #[error("stopword list is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn parse(text: &str) -> Result<Self, StopwordError> {
        let mut words = HashSet::new();
        for ListLine { number, content } in textlist::lines(text) {
            if !content.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(StopwordError::BadWord {
                    line: number,
                    word: content.to_string(),
                });
            }
            words.insert(content.to_string());
        }
        if words.is_empty() {
            return Err(StopwordError::Empty);
        }
        Ok(Self { words })
    }

    pub fn from_words<I, S>(words: I) -> Result<Self, StopwordError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: Vec<String> = words.into_iter().map(|w| w.as_ref().to_string()).collect();
        Self::parse(&text.join("\n"))
    }

    pub fn from_file(path: &Path) -> Result<Self, StopwordError> {
        let text = std::fs::read_to_string(path).map_err(|source| StopwordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn builtin() -> &'static StopwordSet {
        static SET: OnceLock<StopwordSet> = OnceLock::new();
        SET.get_or_init(|| Self::parse(BUILTIN_STOPWORDS).expect("embedded stopword list is valid"))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Lowercase, blank out everything outside `a-z`, split on whitespace and
/// drop stopwords.
pub fn normalize_tweet_text(raw: &str, stop: &StopwordSet) -> Vec<String> {
    let blanked: String = raw
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_lowercase() { c } else { ' ' })
        .collect();
    blanked
        .split_whitespace()
        .filter(|t| !stop.contains(t))
        .map(str::to_string)
        .collect()
}

// ---------------------------------------------------------------------------
// Drop reasons
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NullRequiredField,
    NonNumeric,
    NegativePrice,
    NegativeCount,
    NegativeSplit,
    ZeroOpen,
    UnparseableDate,
    UnknownEventType,
}

impl DropReason {
    pub const ALL: [DropReason; 8] = [
        DropReason::NullRequiredField,
        DropReason::NonNumeric,
        DropReason::NegativePrice,
        DropReason::NegativeCount,
        DropReason::NegativeSplit,
        DropReason::ZeroOpen,
        DropReason::UnparseableDate,
        DropReason::UnknownEventType,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NullRequiredField => "null_required_field",
            DropReason::NonNumeric => "non_numeric",
            DropReason::NegativePrice => "negative_price",
            DropReason::NegativeCount => "negative_count",
            DropReason::NegativeSplit => "negative_split",
            DropReason::ZeroOpen => "zero_open",
            DropReason::UnparseableDate => "unparseable_date",
            DropReason::UnknownEventType => "unknown_event_type",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn required(cell: &str) -> Result<&str, DropReason> {
    let v = trim_field(cell);
    if is_null(v) {
        Err(DropReason::NullRequiredField)
    } else {
        Ok(v)
    }
}

fn optional(cell: &str) -> Option<&str> {
    let v = trim_field(cell);
    (!is_null(v)).then_some(v)
}

fn parse_date_cell(cell: &str) -> Result<NaiveDate, DropReason> {
    normalize_date(required(cell)?).map_err(|_| DropReason::UnparseableDate)
}

fn parse_number(cell: &str, negative: DropReason) -> Result<f64, DropReason> {
    let v: f64 = required(cell)?.parse().map_err(|_| DropReason::NonNumeric)?;
    if !v.is_finite() {
        return Err(DropReason::NonNumeric);
    }
    if v < 0.0 {
        return Err(negative);
    }
    // fold -0.0 into 0.0
    Ok(v + 0.0)
}

fn parse_count(cell: &str) -> Result<u64, DropReason> {
    let v: i64 = required(cell)?.parse().map_err(|_| DropReason::NonNumeric)?;
    u64::try_from(v).map_err(|_| DropReason::NegativeCount)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{kind} schema has no column '{column}'")]
pub struct MissingColumn {
    pub kind: DatasetKind,
    pub column: String,
}

fn locate(schema: &SchemaDescriptor, column: &str) -> Result<usize, MissingColumn> {
    schema.column_index(column).ok_or_else(|| MissingColumn {
        kind: schema.kind(),
        column: column.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Clean record types
// ---------------------------------------------------------------------------

/// A cleaned record that serializes to one line of a cleaned CSV file.
pub trait CleanRecord: Sized {
    const KIND: DatasetKind;
    /// Header row of the cleaned file.
    const HEADER: &'static str;

    fn date(&self) -> NaiveDate;
    fn to_csv_line(&self) -> String;
    fn from_csv_cells(cells: &[&str]) -> Result<Self, String>;
}

fn fmt_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn expect_cells<'a>(cells: &'a [&'a str], n: usize) -> Result<&'a [&'a str], String> {
    if cells.len() == n {
        Ok(cells)
    } else {
        Err(format!("expected {n} cells, found {}", cells.len()))
    }
}

fn cell_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("bad date '{s}'"))
}

fn cell_num<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad number '{s}'"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanStockRecord {
    pub stock_name: String,
    pub record_date: NaiveDate,
    pub open_price: f64,
    pub close_price: f64,
    pub stock_split: f64,
    pub day_change_price: f64,
    pub day_change_pct: f64,
}

impl CleanStockRecord {
    /// Build a record and its day-change columns from open and close.
    pub fn from_prices(
        stock_name: impl Into<String>,
        record_date: NaiveDate,
        open_price: f64,
        close_price: f64,
        stock_split: f64,
    ) -> Result<Self, DropReason> {
        for price in [open_price, close_price] {
            if !price.is_finite() {
                return Err(DropReason::NonNumeric);
            }
            if price < 0.0 {
                return Err(DropReason::NegativePrice);
            }
        }
        if !stock_split.is_finite() {
            return Err(DropReason::NonNumeric);
        }
        if stock_split < 0.0 {
            return Err(DropReason::NegativeSplit);
        }
        if open_price == 0.0 {
            return Err(DropReason::ZeroOpen);
        }
        let day_change_price = close_price - open_price;
        Ok(Self {
            stock_name: stock_name.into(),
            record_date,
            open_price,
            close_price,
            stock_split,
            day_change_price,
            day_change_pct: 100.0 * day_change_price / open_price,
        })
    }
}

impl CleanRecord for CleanStockRecord {
    const KIND: DatasetKind = DatasetKind::Stocks;
    const HEADER: &'static str =
        "stockName,recordDate,openPrice,closePrice,stockSplit,dayChangePrice,dayChangePercentage";

    fn date(&self) -> NaiveDate {
        self.record_date
    }

    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            quote_value(&self.stock_name),
            fmt_date(self.record_date),
            self.open_price,
            self.close_price,
            self.stock_split,
            self.day_change_price,
            self.day_change_pct
        )
    }

    fn from_csv_cells(cells: &[&str]) -> Result<Self, String> {
        let c = expect_cells(cells, 7)?;
        Ok(Self {
            stock_name: c[0].to_string(),
            record_date: cell_date(c[1])?,
            open_price: cell_num(c[2])?,
            close_price: cell_num(c[3])?,
            stock_split: cell_num(c[4])?,
            day_change_price: cell_num(c[5])?,
            day_change_pct: cell_num(c[6])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CleanTweetRecord {
    pub post_date: NaiveDate,
    pub tweet_length: u64,
    pub comment_count: u64,
    pub retweet_count: u64,
    pub like_count: u64,
    pub sentiment: SentimentLabel,
}

impl CleanRecord for CleanTweetRecord {
    const KIND: DatasetKind = DatasetKind::Tweets;
    const HEADER: &'static str = "Post_date,Tweet length,Comment_num,Retweet_num,Like_num,Sentiment";

    fn date(&self) -> NaiveDate {
        self.post_date
    }

    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            fmt_date(self.post_date),
            self.tweet_length,
            self.comment_count,
            self.retweet_count,
            self.like_count,
            self.sentiment
        )
    }

    fn from_csv_cells(cells: &[&str]) -> Result<Self, String> {
        let c = expect_cells(cells, 6)?;
        Ok(Self {
            post_date: cell_date(c[0])?,
            tweet_length: cell_num(c[1])?,
            comment_count: cell_num(c[2])?,
            retweet_count: cell_num(c[3])?,
            like_count: cell_num(c[4])?,
            sentiment: c[5].parse()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    View,
    Cart,
    RemoveFromCart,
    Purchase,
}

impl EventType {
    pub const ALL: [EventType; 4] = [
        EventType::View,
        EventType::Cart,
        EventType::RemoveFromCart,
        EventType::Purchase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::View => "view",
            EventType::Cart => "cart",
            EventType::RemoveFromCart => "remove_from_cart",
            EventType::Purchase => "purchase",
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = DropReason;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventType::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or(DropReason::UnknownEventType)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanEcommEvent {
    pub record_date: NaiveDate,
    pub event_type: EventType,
    pub product_id: String,
    pub category_code: Option<String>,
    pub brand: Option<String>,
    pub price: f64,
}

impl CleanRecord for CleanEcommEvent {
    const KIND: DatasetKind = DatasetKind::Ecommerce;
    const HEADER: &'static str = "record date,event type,product id,category code,brand,price";

    fn date(&self) -> NaiveDate {
        self.record_date
    }

    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            fmt_date(self.record_date),
            self.event_type,
            quote_value(&self.product_id),
            self.category_code.as_deref().map(quote_value).unwrap_or_default(),
            self.brand.as_deref().map(quote_value).unwrap_or_default(),
            self.price
        )
    }

    fn from_csv_cells(cells: &[&str]) -> Result<Self, String> {
        let c = expect_cells(cells, 6)?;
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        Ok(Self {
            record_date: cell_date(c[0])?,
            event_type: c[1].parse().map_err(|_| format!("bad event type '{}'", c[1]))?,
            product_id: c[2].to_string(),
            category_code: opt(c[3]),
            brand: opt(c[4]),
            price: cell_num(c[5])?,
        })
    }
}

// ---------------------------------------------------------------------------
// Cleaners
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct StockCleaner {
    date: usize,
    open: usize,
    close: usize,
    split: usize,
}

impl StockCleaner {
    pub fn new(schema: &SchemaDescriptor) -> Result<Self, MissingColumn> {
        Ok(Self {
            date: locate(schema, "date")?,
            open: locate(schema, "open")?,
            close: locate(schema, "close")?,
            split: locate(schema, "stock splits")?,
        })
    }

    pub fn clean(&self, row: &RawRow) -> Result<CleanStockRecord, DropReason> {
        let ticker = required(row.field(0))?;
        let date = parse_date_cell(row.field(self.date))?;
        let open = parse_number(row.field(self.open), DropReason::NegativePrice)?;
        let close = parse_number(row.field(self.close), DropReason::NegativePrice)?;
        let split = parse_number(row.field(self.split), DropReason::NegativeSplit)?;
        CleanStockRecord::from_prices(ticker, date, open, close, split)
    }
}

#[derive(Debug, Clone)]
pub struct TweetCleaner {
    date: usize,
    body: usize,
    comments: usize,
    retweets: usize,
    likes: usize,
}

impl TweetCleaner {
    pub fn new(schema: &SchemaDescriptor) -> Result<Self, MissingColumn> {
        Ok(Self {
            date: locate(schema, "post_date")?,
            body: locate(schema, "body")?,
            comments: locate(schema, "comment_num")?,
            retweets: locate(schema, "retweet_num")?,
            likes: locate(schema, "like_num")?,
        })
    }

    pub fn clean(
        &self,
        row: &RawRow,
        stop: &StopwordSet,
        lexicon: &PolarityLexicon,
    ) -> Result<CleanTweetRecord, DropReason> {
        let post_date = parse_date_cell(row.field(self.date))?;
        let comment_count = parse_count(row.field(self.comments))?;
        let retweet_count = parse_count(row.field(self.retweets))?;
        let like_count = parse_count(row.field(self.likes))?;
        let tokens = normalize_tweet_text(trim_field(row.field(self.body)), stop);
        let tweet_length = tokens.iter().map(|t| t.len()).sum::<usize>() + tokens.len().saturating_sub(1);
        Ok(CleanTweetRecord {
            post_date,
            tweet_length: tweet_length as u64,
            comment_count,
            retweet_count,
            like_count,
            sentiment: classify_sentiment(score_polarity(&tokens, lexicon)),
        })
    }
}

#[derive(Debug, Clone)]
pub struct EcommCleaner {
    time: usize,
    event: usize,
    product: usize,
    category: usize,
    brand: usize,
    price: usize,
}

impl EcommCleaner {
    pub fn new(schema: &SchemaDescriptor) -> Result<Self, MissingColumn> {
        Ok(Self {
            time: locate(schema, "event_time")?,
            event: locate(schema, "event_type")?,
            product: locate(schema, "product_id")?,
            category: locate(schema, "category_code")?,
            brand: locate(schema, "brand")?,
            price: locate(schema, "price")?,
        })
    }

    pub fn clean(&self, row: &RawRow) -> Result<CleanEcommEvent, DropReason> {
        let record_date = parse_date_cell(row.field(self.time))?;
        let event_type: EventType = required(row.field(self.event))?.parse()?;
        let product_id = required(row.field(self.product))?.to_string();
        let price = parse_number(row.field(self.price), DropReason::NegativePrice)?;
        Ok(CleanEcommEvent {
            record_date,
            event_type,
            product_id,
            category_code: optional(row.field(self.category)).map(str::to_string),
            brand: optional(row.field(self.brand)).map(str::to_lowercase),
            price,
        })
    }
}

/// Clean a stock row laid out per the default stock schema.
pub fn clean_stock(row: &RawRow) -> Result<CleanStockRecord, DropReason> {
    StockCleaner::new(&SchemaDescriptor::default_for(DatasetKind::Stocks))
        .expect("default schema has stock columns")
        .clean(row)
}

/// Clean a tweet row laid out per the default tweet schema, scoring with the
/// built-in lexicon.
pub fn clean_tweet(row: &RawRow, stop: &StopwordSet) -> Result<CleanTweetRecord, DropReason> {
    TweetCleaner::new(&SchemaDescriptor::default_for(DatasetKind::Tweets))
        .expect("default schema has tweet columns")
        .clean(row, stop, PolarityLexicon::builtin())
}

/// Clean an e-commerce row laid out per the default e-commerce schema.
pub fn clean_ecomm(row: &RawRow) -> Result<CleanEcommEvent, DropReason> {
    EcommCleaner::new(&SchemaDescriptor::default_for(DatasetKind::Ecommerce))
        .expect("default schema has e-commerce columns")
        .clean(row)
}

// ---------------------------------------------------------------------------
// Cleaned file reading
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum CleanFileError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header does not match the cleaned {kind} layout")]
    Header { path: String, kind: DatasetKind },
    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },
}

/// Parse the text of a cleaned CSV file.
pub fn parse_clean_file<R: CleanRecord>(text: &str, path: &str) -> Result<Vec<R>, CleanFileError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(R::HEADER) {
        return Err(CleanFileError::Header {
            path: path.to_string(),
            kind: R::KIND,
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CleanFileError::Line {
            path: path.to_string(),
            line: i + 2,
            message,
        };
        let cells = split_csv_line(line).map_err(|e| err(e.to_string()))?;
        let trimmed: Vec<&str> = cells.iter().map(|c| trim_field(c)).collect();
        out.push(R::from_csv_cells(&trimmed).map_err(err)?);
    }
    Ok(out)
}

pub fn read_clean_file<R: CleanRecord>(path: &Path) -> Result<Vec<R>, CleanFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| CleanFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_clean_file(&text, &path.display().to_string())
}
