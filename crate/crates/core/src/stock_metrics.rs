//! Stock movement classification, top-list cohorts and per-day market
//! breadth summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::cleaning::CleanStockRecord;
use crate::textlist;

pub const DEFAULT_THRESHOLD_PCT: f64 = 5.0;

/// Ordered `BigLoser < Modest < BigWinner`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MoveClass {
    BigLoser,
    Modest,
    BigWinner,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("move threshold must be a positive percentage, got {0}")]
pub struct InvalidThreshold(pub f64);

/// Percentage a day change must strictly exceed to count as a big move.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct MoveThreshold(f64);

impl MoveThreshold {
    pub fn new(pct: f64) -> Result<Self, InvalidThreshold> {
        if pct.is_finite() && pct > 0.0 {
            Ok(Self(pct))
        } else {
            Err(InvalidThreshold(pct))
        }
    }

    pub fn pct(self) -> f64 {
        self.0
    }
}

impl Default for MoveThreshold {
    fn default() -> Self {
        Self(DEFAULT_THRESHOLD_PCT)
    }
}

pub fn classify_move(day_change_pct: f64, threshold: MoveThreshold) -> MoveClass {
    if day_change_pct > threshold.0 {
        MoveClass::BigWinner
    } else if day_change_pct < -threshold.0 {
        MoveClass::BigLoser
    } else {
        MoveClass::Modest
    }
}

#[derive(Debug, Error)]
pub enum TopListError {
    #[error("failed to read top list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("top list line {line}: '{ticker}' is not a ticker")]
    BadTicker { line: usize, ticker: String },
    #[error("top list is empty")]
    Empty,
}

/// Tickers treated as the "top" cohort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopList {
    tickers: BTreeSet<String>,
}

impl TopList {
    pub fn new<I, S>(tickers: I) -> Result<Self, TopListError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: Vec<String> = tickers.into_iter().map(|t| t.as_ref().to_string()).collect();
        Self::parse(&text.join("\n"))
    }

    /// One ticker per line, `#` comments. Tickers are uppercased.
    pub fn parse(text: &str) -> Result<Self, TopListError> {
        let mut tickers = BTreeSet::new();
        for line in textlist::lines(text) {
            let ok = line
                .content
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_'));
            if !ok {
                return Err(TopListError::BadTicker {
                    line: line.number,
                    ticker: line.content.to_string(),
                });
            }
            tickers.insert(line.content.to_ascii_uppercase());
        }
        if tickers.is_empty() {
            return Err(TopListError::Empty);
        }
        Ok(Self { tickers })
    }

    pub fn from_file(path: &Path) -> Result<Self, TopListError> {
        let text = std::fs::read_to_string(path).map_err(|source| TopListError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn contains(&self, ticker: &str) -> bool {
        self.tickers.contains(ticker)
    }

    pub fn len(&self) -> usize {
        self.tickers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tickers.iter().map(String::as_str)
    }
}

/// Partition records into (top, rest) by ticker membership.
pub fn split_top<'a, I>(records: I, top: &TopList) -> (Vec<&'a CleanStockRecord>, Vec<&'a CleanStockRecord>)
where
    I: IntoIterator<Item = &'a CleanStockRecord>,
{
    records
        .into_iter()
        .partition(|r| top.contains(&r.stock_name.to_ascii_uppercase()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Top,
    Rest,
    All,
}

impl Cohort {
    pub const ALL: [Cohort; 3] = [Cohort::Top, Cohort::Rest, Cohort::All];

    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::Top => "top",
            Cohort::Rest => "rest",
            Cohort::All => "all",
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "top" => Ok(Cohort::Top),
            "rest" => Ok(Cohort::Rest),
            "all" => Ok(Cohort::All),
            other => Err(format!("unknown cohort '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketDaySummary {
    pub date: NaiveDate,
    pub cohort: Cohort,
    pub advancing: u64,
    pub declining: u64,
    pub unchanged: u64,
    pub big_winners: u64,
    pub big_losers: u64,
    pub pct_advancing: f64,
}

impl MarketDaySummary {
    pub fn total(&self) -> u64 {
        self.advancing + self.declining + self.unchanged
    }

    pub fn pct_declining(&self) -> f64 {
        100.0 * self.declining as f64 / self.total() as f64
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SummaryError {
    #[error("no records for the day")]
    EmptyDay,
    #[error("records span more than one date ({0} and {1})")]
    MixedDates(NaiveDate, NaiveDate),
}

/// Breadth counts for one date's records.
pub fn daily_market_summary<'a, I>(
    records: I,
    cohort: Cohort,
    threshold: MoveThreshold,
) -> Result<MarketDaySummary, SummaryError>
where
    I: IntoIterator<Item = &'a CleanStockRecord>,
{
    let mut date = None;
    let mut s = MarketDaySummary {
        date: NaiveDate::MIN,
        cohort,
        advancing: 0,
        declining: 0,
        unchanged: 0,
        big_winners: 0,
        big_losers: 0,
        pct_advancing: 0.0,
    };
    for r in records {
        match date {
            None => date = Some(r.record_date),
            Some(d) if d != r.record_date => return Err(SummaryError::MixedDates(d, r.record_date)),
            Some(_) => {}
        }
        let pct = r.day_change_pct;
        if pct > 0.0 {
            s.advancing += 1;
        } else if pct < 0.0 {
            s.declining += 1;
        } else {
            s.unchanged += 1;
        }
        match classify_move(pct, threshold) {
            MoveClass::BigWinner => s.big_winners += 1,
            MoveClass::BigLoser => s.big_losers += 1,
            MoveClass::Modest => {}
        }
    }
    s.date = date.ok_or(SummaryError::EmptyDay)?;
    s.pct_advancing = 100.0 * s.advancing as f64 / s.total() as f64;
    Ok(s)
}

/// Per-date summaries for one cohort. Dates with no records in the cohort
/// are absent.
pub fn summaries_by_date<'a, I>(
    records: I,
    cohort: Cohort,
    threshold: MoveThreshold,
) -> BTreeMap<NaiveDate, MarketDaySummary>
where
    I: IntoIterator<Item = &'a CleanStockRecord>,
{
    let mut by_date: BTreeMap<NaiveDate, Vec<&CleanStockRecord>> = BTreeMap::new();
    for r in records {
        by_date.entry(r.record_date).or_default().push(r);
    }
    by_date
        .into_iter()
        .map(|(date, recs)| {
            let s = daily_market_summary(recs, cohort, threshold).expect("non-empty single-date group");
            (date, s)
        })
        .collect()
}

/// Summaries for Top, Rest and All cohorts. Without a top list every
/// record falls into Rest.
pub fn cohort_summaries(
    records: &[CleanStockRecord],
    top: Option<&TopList>,
    threshold: MoveThreshold,
) -> BTreeMap<Cohort, BTreeMap<NaiveDate, MarketDaySummary>> {
    let (top_recs, rest_recs) = match top {
        Some(list) => split_top(records, list),
        None => (Vec::new(), records.iter().collect()),
    };
    let mut out = BTreeMap::new();
    out.insert(Cohort::Top, summaries_by_date(top_recs, Cohort::Top, threshold));
    out.insert(Cohort::Rest, summaries_by_date(rest_recs, Cohort::Rest, threshold));
    out.insert(Cohort::All, summaries_by_date(records, Cohort::All, threshold));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(name: &str, day: u32, pct: f64) -> CleanStockRecord {
        let date = NaiveDate::from_ymd_opt(2020, 1, day).unwrap();
        CleanStockRecord::from_prices(name, date, 100.0, 100.0 + pct, 0.0).unwrap()
    }

    #[test]
    fn classify_examples() {
        let t = MoveThreshold::default();
        assert_eq!(classify_move(7.5, t), MoveClass::BigWinner);
        assert_eq!(classify_move(5.0, t), MoveClass::Modest);
        assert_eq!(classify_move(-5.0, t), MoveClass::Modest);
        assert_eq!(classify_move(-5.1, t), MoveClass::BigLoser);
        assert_eq!(classify_move(5.0 * (1.0 + 1e-9), t), MoveClass::BigWinner);
    }

    #[test]
    fn threshold_must_be_positive() {
        assert!(MoveThreshold::new(0.0).is_err());
        assert!(MoveThreshold::new(-1.0).is_err());
        assert!(MoveThreshold::new(f64::NAN).is_err());
        assert_eq!(MoveThreshold::new(2.5).unwrap().pct(), 2.5);
    }

    #[test]
    fn split_examples() {
        let recs = vec![rec("AAPL", 2, 1.0), rec("ZZZZ", 2, 1.0)];
        let top = TopList::new(["aapl"]).unwrap();
        let (t, r) = split_top(&recs, &top);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].stock_name, "AAPL");
        assert_eq!(r[0].stock_name, "ZZZZ");

        let (t, r) = split_top(&[] as &[CleanStockRecord], &top);
        assert!(t.is_empty() && r.is_empty());

        let other = TopList::new(["MSFT"]).unwrap();
        let (t, r) = split_top(&recs, &other);
        assert!(t.is_empty());
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn top_list_parsing() {
        let list = TopList::parse("# top\naapl\nMSFT # comment\nBRK.B\naapl\n").unwrap();
        assert_eq!(list.iter().collect::<Vec<_>>(), vec!["AAPL", "BRK.B", "MSFT"]);
        assert!(matches!(TopList::parse("# only\n"), Err(TopListError::Empty)));
        assert!(matches!(
            TopList::parse("AAPL\nbad ticker\n"),
            Err(TopListError::BadTicker { line: 2, .. })
        ));
    }

    #[test]
    fn summary_examples() {
        let t = MoveThreshold::default();
        let recs = [rec("A", 2, 1.0), rec("B", 2, -2.0), rec("C", 2, 0.0)];
        let s = daily_market_summary(&recs, Cohort::All, t).unwrap();
        assert_eq!((s.advancing, s.declining, s.unchanged), (1, 1, 1));
        assert!((s.pct_advancing - 100.0 / 3.0).abs() < 1e-12);

        let recs = [rec("A", 2, 6.0), rec("B", 2, 1.0)];
        let s = daily_market_summary(&recs, Cohort::All, t).unwrap();
        assert_eq!((s.big_winners, s.advancing), (1, 2));

        assert_eq!(
            daily_market_summary(&[] as &[CleanStockRecord], Cohort::All, t),
            Err(SummaryError::EmptyDay)
        );
        assert!(matches!(
            daily_market_summary(&[rec("A", 2, 1.0), rec("A", 3, 1.0)], Cohort::All, t),
            Err(SummaryError::MixedDates(..))
        ));
    }

    proptest! {
        #[test]
        fn classify_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0, th in 0.1f64..20.0) {
            let t = MoveThreshold::new(th).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_move(lo, t) <= classify_move(hi, t));
        }

        #[test]
        fn cohorts_add_up(
            moves in prop::collection::vec((0usize..6, 1u32..4, -12.0f64..12.0), 1..60),
            rotate in 0usize..60,
        ) {
            let names = ["A", "B", "C", "D", "E", "F"];
            let recs: Vec<CleanStockRecord> = moves
                .iter()
                .map(|&(n, day, pct)| rec(names[n], day, (pct * 4.0).round() / 4.0))
                .collect();
            let top = TopList::new(["A", "C"]).unwrap();
            let t = MoveThreshold::default();

            let (tp, rs) = split_top(&recs, &top);
            prop_assert_eq!(tp.len() + rs.len(), recs.len());
            prop_assert!(tp.iter().all(|r| top.contains(&r.stock_name)));
            prop_assert!(rs.iter().all(|r| !top.contains(&r.stock_name)));

            let all = cohort_summaries(&recs, Some(&top), t);
            for (date, a) in &all[&Cohort::All] {
                let zero = |c| MarketDaySummary { date: *date, cohort: c, advancing: 0, declining: 0, unchanged: 0, big_winners: 0, big_losers: 0, pct_advancing: 0.0 };
                let tt = all[&Cohort::Top].get(date).cloned().unwrap_or_else(|| zero(Cohort::Top));
                let rr = all[&Cohort::Rest].get(date).cloned().unwrap_or_else(|| zero(Cohort::Rest));
                prop_assert_eq!(a.advancing, tt.advancing + rr.advancing);
                prop_assert_eq!(a.declining, tt.declining + rr.declining);
                prop_assert_eq!(a.unchanged, tt.unchanged + rr.unchanged);
                prop_assert_eq!(a.big_winners, tt.big_winners + rr.big_winners);
                prop_assert_eq!(a.big_losers, tt.big_losers + rr.big_losers);
                prop_assert!(a.big_winners <= a.advancing && a.big_losers <= a.declining);
            }

            let mut shuffled = recs.clone();
            shuffled.rotate_left(rotate % recs.len());
            shuffled.reverse();
            prop_assert_eq!(cohort_summaries(&shuffled, Some(&top), t), all);
        }
    }
}
