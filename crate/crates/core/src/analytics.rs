//! Date-keyed series analytics: anomaly repair, weekday and ISO-week
//! rollups, lagged joins, Pearson correlation with best-lag search, and the
//! engagement, category and market-breadth tables built on them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::Serialize;
use thiserror::Error;

use crate::cleaning::{CleanEcommEvent, CleanTweetRecord, EventType};
use crate::sentiment::SentimentLabel;
use crate::stock_metrics::{Cohort, MarketDaySummary};

pub const DEFAULT_MAX_LAG: u32 = 2;

// ---------------------------------------------------------------------------
// Core types
// ---------------------------------------------------------------------------

/// A labelled date → value series. Dates are unique and iterate in
/// increasing order.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DailySeries {
    pub label: String,
    pub points: BTreeMap<NaiveDate, f64>,
}

impl DailySeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            points: BTreeMap::new(),
        }
    }

    pub fn from_points<I>(label: impl Into<String>, points: I) -> Self
    where
        I: IntoIterator<Item = (NaiveDate, f64)>,
    {
        Self {
            label: label.into(),
            points: points.into_iter().collect(),
        }
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.points.get(&date).copied()
    }

    pub fn insert(&mut self, date: NaiveDate, value: f64) {
        self.points.insert(date, value);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.points.iter().map(|(d, v)| (*d, *v))
    }

    /// Sum of all values in date order.
    pub fn total(&self) -> f64 {
        self.points.values().sum()
    }
}

/// Weekday ordered Monday first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DayOfWeek(pub Weekday);

impl DayOfWeek {
    pub fn of(date: NaiveDate) -> Self {
        Self(date.weekday())
    }

    /// Monday = 1 … Sunday = 7.
    pub fn iso_number(self) -> u32 {
        self.0.number_from_monday()
    }

    /// Sunday = 1 … Saturday = 7, the numbering common in BI tools.
    pub fn sunday_first_number(self) -> u32 {
        self.0.number_from_sunday()
    }

    pub fn short_name(self) -> &'static str {
        match self.0 {
            Weekday::Mon => "Mon",
            Weekday::Tue => "Tue",
            Weekday::Wed => "Wed",
            Weekday::Thu => "Thu",
            Weekday::Fri => "Fri",
            Weekday::Sat => "Sat",
            Weekday::Sun => "Sun",
        }
    }

    pub fn is_weekend(self) -> bool {
        matches!(self.0, Weekday::Sat | Weekday::Sun)
    }
}

impl PartialOrd for DayOfWeek {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DayOfWeek {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iso_number().cmp(&other.iso_number())
    }
}

impl fmt::Display for DayOfWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl Serialize for DayOfWeek {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.short_name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub enum StatError {
    #[error("need at least 3 pairs, got {n}")]
    InsufficientPairs { n: usize },
    #[error("a series has zero variance")]
    ZeroVariance,
    #[error("non-finite value in input")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("date {0} not present in series")]
    DateNotFound(NaiveDate),
    #[error("anomaly dates must differ, both are {0}")]
    SameAnomalyDate(NaiveDate),
    #[error("no lag in 0..={max_lag} yields a defined correlation")]
    NoValidLag { max_lag: u32 },
    #[error("input '{0}' is empty")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Stat(#[from] StatError),
}

// ---------------------------------------------------------------------------
// Anomaly repair and rollups
// ---------------------------------------------------------------------------

/// Spread the combined value of a missing day and the day that absorbed it
/// evenly across both dates.
pub fn normalize_anomalous_days(
    series: &DailySeries,
    missing_date: NaiveDate,
    inflated_date: NaiveDate,
) -> Result<DailySeries, AnalysisError> {
    if missing_date == inflated_date {
        return Err(AnalysisError::SameAnomalyDate(missing_date));
    }
    let inflated = series
        .get(inflated_date)
        .ok_or(AnalysisError::DateNotFound(inflated_date))?;
    let combined = series.get(missing_date).unwrap_or(0.0) + inflated;
    let half = combined / 2.0;
    let mut out = series.clone();
    out.insert(missing_date, half);
    out.insert(inflated_date, half);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Sum,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekdayProfile {
    pub aggregate: Aggregate,
    pub values: BTreeMap<DayOfWeek, f64>,
    /// Number of series points that fell on each weekday.
    pub counts: BTreeMap<DayOfWeek, usize>,
}

impl WeekdayProfile {
    pub fn get(&self, day: Weekday) -> Option<f64> {
        self.values.get(&DayOfWeek(day)).copied()
    }
}

pub fn rollup_weekday(series: &DailySeries, aggregate: Aggregate) -> WeekdayProfile {
    let mut sums: BTreeMap<DayOfWeek, f64> = BTreeMap::new();
    let mut counts: BTreeMap<DayOfWeek, usize> = BTreeMap::new();
    for (date, value) in series.iter() {
        let day = DayOfWeek::of(date);
        *sums.entry(day).or_insert(0.0) += value;
        *counts.entry(day).or_insert(0) += 1;
    }
    let values = match aggregate {
        Aggregate::Sum => sums,
        Aggregate::Mean => sums
            .into_iter()
            .map(|(day, sum)| (day, sum / counts[&day] as f64))
            .collect(),
    };
    WeekdayProfile {
        aggregate,
        values,
        counts,
    }
}

/// ISO-8601 (year, week) key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IsoWeek {
    pub year: i32,
    pub week: u32,
}

impl IsoWeek {
    pub fn of(date: NaiveDate) -> Self {
        let w = date.iso_week();
        Self {
            year: w.year(),
            week: w.week(),
        }
    }
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-W{:02}", self.year, self.week)
    }
}

pub fn rollup_weekno(series: &DailySeries) -> BTreeMap<IsoWeek, f64> {
    let mut out = BTreeMap::new();
    for (date, value) in series.iter() {
        *out.entry(IsoWeek::of(date)).or_insert(0.0) += value;
    }
    out
}

// ---------------------------------------------------------------------------
// Joins and correlation
// ---------------------------------------------------------------------------

/// How a lag of `n` days is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LagMode {
    /// `n` calendar days back; pairs whose lagged date is absent are skipped.
    #[default]
    Calendar,
    /// The `n`-th earlier date present in the lagged series.
    Trading,
}

impl FromStr for LagMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "calendar" => Ok(LagMode::Calendar),
            "trading" => Ok(LagMode::Trading),
            other => Err(format!("unknown lag mode '{other}'")),
        }
    }
}

impl fmt::Display for LagMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LagMode::Calendar => "calendar",
            LagMode::Trading => "trading",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JoinedPoint {
    pub date: NaiveDate,
    pub a: f64,
    pub b: f64,
}

/// For each date `d` of `a`, pair `a[d]` with `b[d - lag_days]` when `b` has
/// that date.
pub fn join_on_date(a: &DailySeries, b: &DailySeries, lag_days: u32) -> Vec<JoinedPoint> {
    join_on_date_with(a, b, lag_days, LagMode::Calendar)
}

pub fn join_on_date_with(a: &DailySeries, b: &DailySeries, lag_days: u32, mode: LagMode) -> Vec<JoinedPoint> {
    a.iter()
        .filter_map(|(date, a_val)| {
            let lagged = match (mode, lag_days) {
                (_, 0) => b.get(date).map(|v| (date, v)),
                (LagMode::Calendar, n) => {
                    let back = date.checked_sub_days(Days::new(u64::from(n)))?;
                    b.get(back).map(|v| (back, v))
                }
                (LagMode::Trading, n) => b.points.range(..date).rev().nth(n as usize - 1).map(|(d, v)| (*d, *v)),
            };
            lagged.map(|(_, b_val)| JoinedPoint {
                date,
                a: a_val,
                b: b_val,
            })
        })
        .collect()
}

/// Sample Pearson correlation of `(x, y)` pairs, clamped to `[-1, 1]`.
pub fn pearson(pairs: &[(f64, f64)]) -> Result<f64, StatError> {
    let n = pairs.len();
    if n < 3 {
        return Err(StatError::InsufficientPairs { n });
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(StatError::NonFinite);
    }
    let (x0, y0) = pairs[0];
    if pairs.iter().all(|p| p.0 == x0) || pairs.iter().all(|p| p.1 == y0) {
        return Err(StatError::ZeroVariance);
    }
    let nf = n as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatError::ZeroVariance);
    }
    // sqrt of the product keeps r exactly 1 for identical series
    let prod = sxx * syy;
    let denom = if prod.is_finite() && prod > 0.0 {
        prod.sqrt()
    } else {
        sxx.sqrt() * syy.sqrt()
    };
    let r = sxy / denom;
    if !r.is_finite() {
        return Err(StatError::NonFinite);
    }
    Ok(r.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagResult {
    pub best_lag: u32,
    pub r_at_best: f64,
    pub r_by_lag: BTreeMap<u32, f64>,
    pub n_pairs_by_lag: BTreeMap<u32, usize>,
    /// Lags left out of `r_by_lag`, with the reason.
    pub undefined_by_lag: BTreeMap<u32, StatError>,
}

/// Pairs `a[d]` with `b[d + L]` for `L = 0..=max_lag` and picks the lag with
/// the highest correlation; ties go to the smaller lag.
pub fn best_lag(a: &DailySeries, b: &DailySeries, max_lag: u32) -> Result<LagResult, AnalysisError> {
    best_lag_with(a, b, max_lag, LagMode::Calendar)
}

pub fn best_lag_with(
    a: &DailySeries,
    b: &DailySeries,
    max_lag: u32,
    mode: LagMode,
) -> Result<LagResult, AnalysisError> {
    let mut r_by_lag = BTreeMap::new();
    let mut n_pairs_by_lag = BTreeMap::new();
    let mut undefined_by_lag = BTreeMap::new();
    let mut best: Option<(u32, f64)> = None;

    for lag in 0..=max_lag {
        let pairs: Vec<(f64, f64)> = join_on_date_with(b, a, lag, mode)
            .into_iter()
            .map(|p| (p.b, p.a))
            .collect();
        n_pairs_by_lag.insert(lag, pairs.len());
        match pearson(&pairs) {
            Ok(r) => {
                r_by_lag.insert(lag, r);
                if best.is_none_or(|(_, best_r)| r > best_r) {
                    best = Some((lag, r));
                }
            }
            Err(e) => {
                undefined_by_lag.insert(lag, e);
            }
        }
    }

    let (best_lag, r_at_best) = best.ok_or(AnalysisError::NoValidLag { max_lag })?;
    Ok(LagResult {
        best_lag,
        r_at_best,
        r_by_lag,
        n_pairs_by_lag,
        undefined_by_lag,
    })
}

// ---------------------------------------------------------------------------
// Series builders
// ---------------------------------------------------------------------------

/// Daily count of events of `kind`, over every date with at least one event.
pub fn daily_event_counts(events: &[CleanEcommEvent], kind: EventType) -> DailySeries {
    let mut series = DailySeries::new(format!("{kind}_events"));
    for e in events {
        let slot = series.points.entry(e.record_date).or_insert(0.0);
        if e.event_type == kind {
            *slot += 1.0;
        }
    }
    series
}

/// Daily count of tweets labelled `label`, over every date with a tweet.
pub fn daily_sentiment_counts(tweets: &[CleanTweetRecord], label: SentimentLabel) -> DailySeries {
    let mut series = DailySeries::new(format!("{label}_tweets"));
    for t in tweets {
        let slot = series.points.entry(t.post_date).or_insert(0.0);
        if t.sentiment == label {
            *slot += 1.0;
        }
    }
    series
}

/// One field of a cohort's summaries as a daily series.
pub fn summary_series<F>(
    summaries: &BTreeMap<NaiveDate, MarketDaySummary>,
    label: impl Into<String>,
    field: F,
) -> DailySeries
where
    F: Fn(&MarketDaySummary) -> f64,
{
    DailySeries::from_points(label, summaries.iter().map(|(d, s)| (*d, field(s))))
}

// ---------------------------------------------------------------------------
// Engagement
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngagementCell {
    pub mean_likes: f64,
    pub mean_comments: f64,
    pub mean_retweets: f64,
    pub tweet_count: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EngagementTable {
    pub rows: BTreeMap<(DayOfWeek, SentimentLabel), EngagementCell>,
}

/// Mean likes, comments and retweets per (weekday, label); Neutral tweets
/// are excluded.
pub fn engagement_by_sentiment_weekday<'a, I>(tweets: I) -> EngagementTable
where
    I: IntoIterator<Item = &'a CleanTweetRecord>,
{
    let mut sums: BTreeMap<(DayOfWeek, SentimentLabel), (u64, u64, u64, u64)> = BTreeMap::new();
    for t in tweets {
        if t.sentiment == SentimentLabel::Neutral {
            continue;
        }
        let e = sums.entry((DayOfWeek::of(t.post_date), t.sentiment)).or_default();
        e.0 += t.like_count;
        e.1 += t.comment_count;
        e.2 += t.retweet_count;
        e.3 += 1;
    }
    let rows = sums
        .into_iter()
        .map(|(key, (likes, comments, retweets, n))| {
            let nf = n as f64;
            let cell = EngagementCell {
                mean_likes: likes as f64 / nf,
                mean_comments: comments as f64 / nf,
                mean_retweets: retweets as f64 / nf,
                tweet_count: n,
            };
            (key, cell)
        })
        .collect();
    EngagementTable { rows }
}

// ---------------------------------------------------------------------------
// Cross-dataset analyses
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PairedCorrelation {
    pub a: DailySeries,
    pub b: DailySeries,
    pub pairs: Vec<JoinedPoint>,
    pub r: Result<f64, StatError>,
}

/// Purchases on day `d` against the number of advancing stocks on the
/// previous day.
///
/// `anomaly` is an optional `(missing, inflated)` date pair repaired on the
/// purchase series before joining.
pub fn purchases_vs_prior_day_advancers(
    events: &[CleanEcommEvent],
    summaries: &BTreeMap<NaiveDate, MarketDaySummary>,
    anomaly: Option<(NaiveDate, NaiveDate)>,
    mode: LagMode,
) -> Result<PairedCorrelation, AnalysisError> {
    if events.is_empty() {
        return Err(AnalysisError::EmptyInput("e-commerce events"));
    }
    if summaries.is_empty() {
        return Err(AnalysisError::EmptyInput("market summaries"));
    }
    let mut purchases = daily_event_counts(events, EventType::Purchase);
    purchases.label = "purchases".into();
    if let Some((missing, inflated)) = anomaly {
        purchases = normalize_anomalous_days(&purchases, missing, inflated)?;
    }
    let advancing = summary_series(summaries, "advancing", |s| s.advancing as f64);
    let pairs = join_on_date_with(&purchases, &advancing, 1, mode);
    let xy: Vec<(f64, f64)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    Ok(PairedCorrelation {
        r: pearson(&xy),
        a: purchases,
        b: advancing,
        pairs,
    })
}

/// Lag search with positive-tweet counts leading a cohort's big-winner
/// counts.
pub fn positive_tweets_vs_big_winners(
    tweets: &[CleanTweetRecord],
    summaries: &BTreeMap<NaiveDate, MarketDaySummary>,
    cohort: Cohort,
    max_lag: u32,
    mode: LagMode,
) -> Result<LagResult, AnalysisError> {
    let positive = daily_sentiment_counts(tweets, SentimentLabel::Positive);
    let winners = DailySeries::from_points(
        format!("{cohort}_big_winners"),
        summaries
            .iter()
            .filter(|(_, s)| s.cohort == cohort)
            .map(|(d, s)| (*d, s.big_winners as f64)),
    );
    best_lag_with(&positive, &winners, max_lag, mode)
}

// ---------------------------------------------------------------------------
// Category and breadth tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryCounts {
    pub category: String,
    pub views: u64,
    pub carts: u64,
    pub removes: u64,
    pub purchases: u64,
}

/// Event counts per category code, most purchased first. Events without a
/// category are left out.
pub fn category_event_counts(events: &[CleanEcommEvent]) -> Vec<CategoryCounts> {
    let mut by_cat: BTreeMap<&str, CategoryCounts> = BTreeMap::new();
    for e in events {
        let Some(cat) = e.category_code.as_deref() else {
            continue;
        };
        let c = by_cat.entry(cat).or_insert_with(|| CategoryCounts {
            category: cat.to_string(),
            views: 0,
            carts: 0,
            removes: 0,
            purchases: 0,
        });
        match e.event_type {
            EventType::View => c.views += 1,
            EventType::Cart => c.carts += 1,
            EventType::RemoveFromCart => c.removes += 1,
            EventType::Purchase => c.purchases += 1,
        }
    }
    let mut out: Vec<CategoryCounts> = by_cat.into_values().collect();
    out.sort_by(|a, b| b.purchases.cmp(&a.purchases).then_with(|| a.category.cmp(&b.category)));
    out
}

/// Linear-interpolated quantile of unsorted values; `None` when empty.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        Some(Self {
            min: quantile(values, 0.0)?,
            p25: quantile(values, 0.25)?,
            median: quantile(values, 0.5)?,
            p75: quantile(values, 0.75)?,
            max: quantile(values, 1.0)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreadthStats {
    pub cohort: Cohort,
    pub days: usize,
    pub pct_advancing: Option<Spread>,
    pub pct_declining: Option<Spread>,
}

/// Distribution of daily advancing / declining percentages for a cohort.
pub fn breadth_stats(cohort: Cohort, summaries: &BTreeMap<NaiveDate, MarketDaySummary>) -> BreadthStats {
    let adv: Vec<f64> = summaries.values().map(|s| s.pct_advancing).collect();
    let dec: Vec<f64> = summaries.values().map(MarketDaySummary::pct_declining).collect();
    BreadthStats {
        cohort,
        days: summaries.len(),
        pct_advancing: Spread::of(&adv),
        pct_declining: Spread::of(&dec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    /// Zeller-style weekday oracle, Monday = 1 … Sunday = 7.
    fn weekday_oracle(y: i32, m: u32, day: u32) -> u32 {
        let (y, m) = if m < 3 { (y - 1, m + 12) } else { (y, m) };
        let k = y.rem_euclid(100);
        let j = y.div_euclid(100);
        let h = (day as i32 + (13 * (m as i32 + 1)) / 5 + k + k / 4 + j / 4 + 5 * j).rem_euclid(7);
        // h: 0 = Saturday, 1 = Sunday, 2 = Monday …
        (((h + 5) % 7) + 1) as u32
    }

    #[test]
    fn anomaly_examples() {
        let s = DailySeries::from_points(
            "p",
            [
                (d(2019, 11, 17), 300.0),
                (d(2019, 11, 19), 1000.0),
                (d(2019, 11, 20), 310.0),
            ],
        );
        let out = normalize_anomalous_days(&s, d(2019, 11, 18), d(2019, 11, 19)).unwrap();
        assert_eq!(out.get(d(2019, 11, 18)), Some(500.0));
        assert_eq!(out.get(d(2019, 11, 19)), Some(500.0));
        assert_eq!(out.get(d(2019, 11, 17)), Some(300.0));
        assert_eq!(out.total(), s.total());

        let s = DailySeries::from_points("p", [(d(2019, 11, 18), 200.0), (d(2019, 11, 19), 800.0)]);
        let out = normalize_anomalous_days(&s, d(2019, 11, 18), d(2019, 11, 19)).unwrap();
        assert_eq!(out.get(d(2019, 11, 18)), Some(500.0));
        assert_eq!(out.get(d(2019, 11, 19)), Some(500.0));

        let s = DailySeries::from_points("p", [(d(2019, 11, 17), 1.0)]);
        assert_eq!(
            normalize_anomalous_days(&s, d(2019, 11, 18), d(2019, 11, 19)),
            Err(AnalysisError::DateNotFound(d(2019, 11, 19)))
        );
        assert_eq!(
            normalize_anomalous_days(&s, d(2019, 11, 17), d(2019, 11, 17)),
            Err(AnalysisError::SameAnomalyDate(d(2019, 11, 17)))
        );
    }

    #[test]
    fn weekday_rollup_examples() {
        assert_eq!(weekday_oracle(2019, 11, 4), 1);
        assert_eq!(weekday_oracle(2019, 11, 11), 1);
        let s = DailySeries::from_points("x", [(d(2019, 11, 4), 10.0), (d(2019, 11, 11), 20.0)]);
        let p = rollup_weekday(&s, Aggregate::Mean);
        assert_eq!(p.get(Weekday::Mon), Some(15.0));
        assert_eq!(p.counts[&DayOfWeek(Weekday::Mon)], 2);
        assert_eq!(p.values.len(), 1);

        let single = DailySeries::from_points("x", [(d(2019, 11, 9), 7.0)]);
        let p = rollup_weekday(&single, Aggregate::Sum);
        assert_eq!(p.get(Weekday::Sat), Some(7.0));
    }

    #[test]
    fn weekday_numbering() {
        let mon = DayOfWeek(Weekday::Mon);
        let sun = DayOfWeek(Weekday::Sun);
        assert_eq!((mon.iso_number(), mon.sunday_first_number()), (1, 2));
        assert_eq!((sun.iso_number(), sun.sunday_first_number()), (7, 1));
        assert!(mon < sun);
        assert_eq!(DayOfWeek(Weekday::Fri).sunday_first_number(), 6);
    }

    #[test]
    fn weekno_examples() {
        // 2019-10-21 is a Monday; Jan 4th 2019 was a Friday so week 1 began
        // Mon 2018-12-31 and 2019-10-21 is 294 days later: week 43.
        assert_eq!((d(2019, 10, 21) - d(2018, 12, 31)).num_days(), 294);
        assert_eq!(294 / 7 + 1, 43);
        let s = DailySeries::from_points("x", [(d(2019, 10, 21), 5.0), (d(2019, 10, 22), 7.0)]);
        let w = rollup_weekno(&s);
        assert_eq!(w.len(), 1);
        assert_eq!(w[&IsoWeek { year: 2019, week: 43 }], 12.0);
        assert_eq!(IsoWeek::of(d(2019, 12, 30)), IsoWeek { year: 2020, week: 1 });
    }

    #[test]
    fn join_examples() {
        // 2020-01-07 is a Tuesday
        let a = DailySeries::from_points("a", [(d(2020, 1, 7), 10.0)]);
        let b = DailySeries::from_points("b", [(d(2020, 1, 6), 3.0)]);
        assert_eq!(
            join_on_date(&a, &b, 1),
            vec![JoinedPoint {
                date: d(2020, 1, 7),
                a: 10.0,
                b: 3.0
            }]
        );
        let a = DailySeries::from_points("a", [(d(2020, 1, 6), 10.0)]);
        let b = DailySeries::from_points("b", [(d(2020, 1, 3), 3.0)]);
        assert!(join_on_date(&a, &b, 1).is_empty());
        // trading mode reaches back to Friday
        assert_eq!(join_on_date_with(&a, &b, 1, LagMode::Trading).len(), 1);

        let a = DailySeries::from_points("a", [(d(2020, 1, 6), 1.0), (d(2020, 1, 7), 2.0)]);
        let b = DailySeries::from_points("b", [(d(2020, 1, 7), 5.0), (d(2020, 1, 8), 6.0)]);
        assert_eq!(
            join_on_date(&a, &b, 0),
            vec![JoinedPoint {
                date: d(2020, 1, 7),
                a: 2.0,
                b: 5.0
            }]
        );
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]), Ok(1.0));
        assert_eq!(pearson(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]), Ok(-1.0));
        assert_eq!(
            pearson(&[(1.0, 3.0), (2.0, 2.0)]),
            Err(StatError::InsufficientPairs { n: 2 })
        );
        assert_eq!(
            pearson(&[(1.0, 3.0), (1.0, 2.0), (1.0, 1.0)]),
            Err(StatError::ZeroVariance)
        );
        assert!(pearson(&[(0.1, 3.0), (0.2, 0.1), (0.3, 0.1)]).is_ok());
        assert_eq!(
            pearson(&[(0.1, 0.1), (0.2, 0.1), (0.3, 0.1)]),
            Err(StatError::ZeroVariance)
        );
        assert_eq!(
            pearson(&[(f64::NAN, 0.1), (0.2, 0.1), (0.3, 0.2)]),
            Err(StatError::NonFinite)
        );
    }

    fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
        start
            .iter_days()
            .filter(|d| !DayOfWeek::of(*d).is_weekend())
            .take(n)
            .collect()
    }

    #[test]
    fn best_lag_recovers_planted_shift() {
        let days = weekdays_from(d(2020, 1, 6), 30);
        let values: Vec<f64> = (0..30).map(|i| ((i * 37 + 11) % 23) as f64).collect();
        let a = DailySeries::from_points("a", days.iter().copied().zip(values.iter().copied()));
        let b = DailySeries::from_points("b", a.iter().map(|(day, v)| (day.succ_opt().unwrap(), v)));
        let res = best_lag(&a, &b, 2).unwrap();
        assert_eq!(res.best_lag, 1);
        assert_eq!(res.r_at_best, 1.0);
        assert_eq!(res.r_by_lag.len() + res.undefined_by_lag.len(), 3);
        assert_eq!(res.r_by_lag[&res.best_lag], res.r_at_best);

        let same = best_lag(&a, &a, 2).unwrap();
        assert_eq!(same.best_lag, 0);
        assert_eq!(same.r_at_best, 1.0);
    }

    #[test]
    fn best_lag_without_overlap_fails() {
        let a = DailySeries::from_points("a", [(d(2020, 1, 6), 1.0), (d(2020, 1, 7), 2.0)]);
        let b = DailySeries::new("b");
        assert_eq!(best_lag(&a, &b, 2), Err(AnalysisError::NoValidLag { max_lag: 2 }));
    }

    fn tweet(day: NaiveDate, label: SentimentLabel, likes: u64) -> CleanTweetRecord {
        CleanTweetRecord {
            post_date: day,
            tweet_length: 4,
            comment_count: likes / 2,
            retweet_count: 1,
            like_count: likes,
            sentiment: label,
        }
    }

    #[test]
    fn engagement_examples() {
        let mon = d(2020, 1, 6);
        let fri = d(2020, 1, 10);
        let t = engagement_by_sentiment_weekday(&[tweet(mon, SentimentLabel::Negative, 4)]);
        let cell = &t.rows[&(DayOfWeek(Weekday::Mon), SentimentLabel::Negative)];
        assert_eq!((cell.mean_likes, cell.tweet_count), (4.0, 1));

        let t = engagement_by_sentiment_weekday(&[tweet(mon, SentimentLabel::Neutral, 4)]);
        assert!(t.rows.is_empty());

        let t = engagement_by_sentiment_weekday(&[
            tweet(fri, SentimentLabel::Positive, 2),
            tweet(fri, SentimentLabel::Positive, 4),
        ]);
        assert_eq!(
            t.rows[&(DayOfWeek(Weekday::Fri), SentimentLabel::Positive)].mean_likes,
            3.0
        );
    }

    fn summary(date: NaiveDate, advancing: u64, big_winners: u64) -> MarketDaySummary {
        MarketDaySummary {
            date,
            cohort: Cohort::All,
            advancing,
            declining: 10,
            unchanged: 0,
            big_winners,
            big_losers: 0,
            pct_advancing: 100.0 * advancing as f64 / (advancing + 10) as f64,
        }
    }

    fn purchase(date: NaiveDate) -> CleanEcommEvent {
        CleanEcommEvent {
            record_date: date,
            event_type: EventType::Purchase,
            product_id: "1".into(),
            category_code: None,
            brand: None,
            price: 1.0,
        }
    }

    #[test]
    fn purchases_join_previous_day() {
        let tue = d(2020, 1, 7);
        let mon = d(2020, 1, 6);
        let events: Vec<CleanEcommEvent> = (0..100).map(|_| purchase(tue)).collect();
        let sums = BTreeMap::from([(mon, summary(mon, 50, 0))]);
        let res = purchases_vs_prior_day_advancers(&events, &sums, None, LagMode::Calendar).unwrap();
        assert_eq!(
            res.pairs,
            vec![JoinedPoint {
                date: tue,
                a: 100.0,
                b: 50.0
            }]
        );
        assert_eq!(res.r, Err(StatError::InsufficientPairs { n: 1 }));

        let sums = BTreeMap::from([(tue, summary(tue, 50, 0))]);
        let res = purchases_vs_prior_day_advancers(&events, &sums, None, LagMode::Calendar).unwrap();
        assert!(res.pairs.is_empty());
        assert_eq!(res.r, Err(StatError::InsufficientPairs { n: 0 }));

        assert_eq!(
            purchases_vs_prior_day_advancers(&[], &sums, None, LagMode::Calendar),
            Err(AnalysisError::EmptyInput("e-commerce events"))
        );
    }

    #[test]
    fn proportional_purchases_correlate() {
        let days: Vec<NaiveDate> = d(2020, 1, 1).iter_days().take(40).collect();
        let mut sums = BTreeMap::new();
        let mut events = Vec::new();
        for (i, day) in days.iter().enumerate() {
            let adv = 5 + (i * 7 % 13) as u64;
            sums.insert(*day, summary(*day, adv, 0));
            let next = day.succ_opt().unwrap();
            for _ in 0..adv * 3 {
                events.push(purchase(next));
            }
        }
        let res = purchases_vs_prior_day_advancers(&events, &sums, None, LagMode::Calendar).unwrap();
        assert!(res.r.unwrap() >= 0.99);
    }

    #[test]
    fn tweets_lead_winners() {
        let days: Vec<NaiveDate> = d(2020, 1, 1).iter_days().take(60).collect();
        let mut tweets = Vec::new();
        let mut sums = BTreeMap::new();
        for (i, day) in days.iter().enumerate() {
            let pos = 2 + (i * 11 % 17) as u64;
            for _ in 0..pos {
                tweets.push(tweet(*day, SentimentLabel::Positive, 1));
            }
            tweets.push(tweet(*day, SentimentLabel::Negative, 1));
            let next = day.succ_opt().unwrap();
            if !DayOfWeek::of(next).is_weekend() {
                sums.insert(next, summary(next, 40, 2 * pos));
            }
        }
        let res = positive_tweets_vs_big_winners(&tweets, &sums, Cohort::All, 2, LagMode::Calendar).unwrap();
        assert_eq!(res.best_lag, 1);
        assert!(res.r_at_best > 0.999);

        let err = positive_tweets_vs_big_winners(&tweets, &BTreeMap::new(), Cohort::Top, 2, LagMode::Calendar);
        assert_eq!(err, Err(AnalysisError::NoValidLag { max_lag: 2 }));
    }

    #[test]
    fn categories_rank_by_purchases() {
        let day = d(2019, 11, 1);
        let mk = |cat: Option<&str>, t: EventType| CleanEcommEvent {
            record_date: day,
            event_type: t,
            product_id: "1".into(),
            category_code: cat.map(str::to_string),
            brand: None,
            price: 1.0,
        };
        let events = vec![
            mk(Some("apparel.shoes"), EventType::Purchase),
            mk(Some("electronics.smartphone"), EventType::Purchase),
            mk(Some("electronics.smartphone"), EventType::Purchase),
            mk(Some("electronics.smartphone"), EventType::View),
            mk(None, EventType::Purchase),
        ];
        let cats = category_event_counts(&events);
        assert_eq!(cats.len(), 2);
        assert_eq!(cats[0].category, "electronics.smartphone");
        assert_eq!((cats[0].purchases, cats[0].views), (2, 1));
    }

    #[test]
    fn quantiles() {
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(quantile(&[4.0, 1.0, 2.0, 3.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[1.0, 2.0], 0.0), Some(1.0));
        assert_eq!(quantile(&[1.0, 2.0], 1.0), Some(2.0));
    }

    fn series_strategy() -> impl Strategy<Value = DailySeries> {
        prop::collection::btree_map(0u64..400, 0u32..1_000_000, 1..80).prop_map(|m| {
            DailySeries::from_points(
                "s",
                m.into_iter()
                    .map(|(off, v)| (d(2019, 1, 1) + Days::new(off), f64::from(v))),
            )
        })
    }

    proptest! {
        #[test]
        fn rollups_conserve_totals(s in series_strategy()) {
            let by_day = rollup_weekday(&s, Aggregate::Sum);
            prop_assert_eq!(by_day.values.values().sum::<f64>(), s.total());
            prop_assert_eq!(by_day.counts.values().sum::<usize>(), s.len());
            prop_assert_eq!(rollup_weekno(&s).values().sum::<f64>(), s.total());
        }

        #[test]
        fn join_lag_zero_is_intersection(a in series_strategy(), b in series_strategy()) {
            let joined = join_on_date(&a, &b, 0);
            let common: Vec<NaiveDate> = a.points.keys().filter(|d| b.points.contains_key(d)).copied().collect();
            prop_assert_eq!(joined.iter().map(|p| p.date).collect::<Vec<_>>(), common);
            prop_assert!(joined.len() <= a.len().min(b.len()));
        }

        #[test]
        fn planted_lag_is_recovered(s in series_strategy(), lag in 0u32..4) {
            let shifted = DailySeries::from_points(
                "b",
                s.iter().map(|(day, v)| (day + Days::new(u64::from(lag)), v)),
            );
            if let Ok(res) = best_lag(&s, &shifted, 3) {
                prop_assert!(res.r_by_lag.contains_key(&lag));
                prop_assert_eq!(res.r_by_lag[&lag], 1.0);
                prop_assert!(res.best_lag <= lag);
                prop_assert_eq!(res.r_at_best, 1.0);
            }
        }

        #[test]
        fn engagement_matches_brute_force(
            raw in prop::collection::vec((0u64..14, 0u8..3, 0u64..50, 0u64..20, 0u64..9), 0..40)
        ) {
            let labels = [SentimentLabel::Positive, SentimentLabel::Negative, SentimentLabel::Neutral];
            let tweets: Vec<CleanTweetRecord> = raw
                .iter()
                .map(|&(off, l, likes, comments, rts)| CleanTweetRecord {
                    post_date: d(2020, 1, 1) + Days::new(off),
                    tweet_length: 1,
                    comment_count: comments,
                    retweet_count: rts,
                    like_count: likes,
                    sentiment: labels[l as usize],
                })
                .collect();
            let table = engagement_by_sentiment_weekday(&tweets);
            for ((day, label), cell) in &table.rows {
                let members: Vec<&CleanTweetRecord> = tweets
                    .iter()
                    .filter(|t| DayOfWeek::of(t.post_date) == *day && t.sentiment == *label)
                    .collect();
                prop_assert_eq!(cell.tweet_count as usize, members.len());
                let mean = members.iter().map(|t| t.like_count as f64).sum::<f64>() / members.len() as f64;
                prop_assert_eq!(cell.mean_likes, mean);
                let mean_c = members.iter().map(|t| t.comment_count as f64).sum::<f64>() / members.len() as f64;
                prop_assert_eq!(cell.mean_comments, mean_c);
            }
            let non_neutral = tweets.iter().filter(|t| t.sentiment != SentimentLabel::Neutral).count() as u64;
            prop_assert_eq!(table.rows.values().map(|c| c.tweet_count).sum::<u64>(), non_neutral);
        }
    }
}
