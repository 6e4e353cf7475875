//! Named analyses over cleaned files and their JSON / CSV report output.
//!
//! Reports hold only values derived from inputs and parameters (file names,
//! content hashes, counters), never paths or timings, so identical inputs
//! give byte-identical reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{NaiveDate, Weekday};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::{
    self, Aggregate, AnalysisError, DailySeries, DayOfWeek, IsoWeek, LagMode, LagResult, StatError,
};
use crate::cleaning::{
    parse_clean_file, CleanEcommEvent, CleanFileError, CleanRecord, CleanStockRecord, CleanTweetRecord, EventType,
};
use crate::engine::{self, EngineError};
use crate::ingestion::DatasetKind;
use crate::pipeline::{self, clean_output_path};
use crate::sentiment::SentimentLabel;
use crate::stock_metrics::{cohort_summaries, Cohort, MarketDaySummary, MoveThreshold, TopList};

/// Number of categories broken down by weekday in `top-categories`.
pub const TOP_CATEGORY_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnalysisName {
    TopCategories,
    Engagement,
    PurchasesVsAdvancers,
    TweetsVsWinners,
    TopVsRest,
    WeekdayRollup,
}

impl AnalysisName {
    pub const ALL: [AnalysisName; 6] = [
        AnalysisName::TopCategories,
        AnalysisName::Engagement,
        AnalysisName::PurchasesVsAdvancers,
        AnalysisName::TweetsVsWinners,
        AnalysisName::TopVsRest,
        AnalysisName::WeekdayRollup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisName::TopCategories => "top-categories",
            AnalysisName::Engagement => "engagement",
            AnalysisName::PurchasesVsAdvancers => "purchases-vs-advancers",
            AnalysisName::TweetsVsWinners => "tweets-vs-winners",
            AnalysisName::TopVsRest => "top-vs-rest",
            AnalysisName::WeekdayRollup => "weekday-rollup",
        }
    }

    /// Cleaned datasets the analysis reads.
    pub fn inputs(self) -> &'static [DatasetKind] {
        match self {
            AnalysisName::TopCategories => &[DatasetKind::Ecommerce],
            AnalysisName::Engagement => &[DatasetKind::Tweets],
            AnalysisName::PurchasesVsAdvancers => &[DatasetKind::Stocks, DatasetKind::Ecommerce],
            AnalysisName::TweetsVsWinners => &[DatasetKind::Stocks, DatasetKind::Tweets],
            AnalysisName::TopVsRest | AnalysisName::WeekdayRollup => &[DatasetKind::Stocks],
        }
    }
}

impl fmt::Display for AnalysisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnalysisName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| format!("unknown analysis '{s}'"))
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisParams {
    pub threshold: MoveThreshold,
    pub max_lag: u32,
    pub lag_mode: LagMode,
    /// `(missing, inflated)` dates repaired on daily e-commerce counts.
    pub anomaly: Option<(NaiveDate, NaiveDate)>,
    pub top_list: Option<TopList>,
    /// Display name of the top-list source, recorded in reports.
    pub top_list_name: Option<String>,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            threshold: MoveThreshold::default(),
            max_lag: analytics::DEFAULT_MAX_LAG,
            lag_mode: LagMode::Calendar,
            anomaly: None,
            top_list: None,
            top_list_name: None,
        }
    }
}

impl AnalysisParams {
    fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("threshold_pct".into(), self.threshold.pct().to_string());
        m.insert("max_lag".into(), self.max_lag.to_string());
        m.insert("lag_mode".into(), self.lag_mode.to_string());
        m.insert(
            "anomaly".into(),
            self.anomaly.map_or_else(
                || "none".to_string(),
                |(missing, inflated)| format!("{missing}/{inflated}"),
            ),
        );
        let top = match (&self.top_list, &self.top_list_name) {
            (Some(list), Some(name)) => format!("{name} ({} tickers)", list.len()),
            (Some(list), None) => format!("{} tickers", list.len()),
            (None, _) => "none".to_string(),
        };
        m.insert("top_list".into(), top);
        m
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cleaned {kind} file {path} not found; run `clean --kind {kind}` first")]
    MissingInput { kind: DatasetKind, path: PathBuf },
    #[error(transparent)]
    CleanFile(#[from] CleanFileError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputInfo {
    pub kind: DatasetKind,
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    /// Worker- and time-independent counters from the clean job's meta file.
    pub clean_meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct LoadedInput<R> {
    pub info: InputInfo,
    pub records: Vec<R>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Load `<data_dir>/<kind>.clean.csv` and its meta file, if present.
pub fn load_input<R: CleanRecord>(data_dir: &Path) -> Result<LoadedInput<R>, ReportError> {
    let path = clean_output_path(data_dir, R::KIND);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ReportError::MissingInput { kind: R::KIND, path });
        }
        Err(source) => {
            return Err(ReportError::CleanFile(CleanFileError::Io {
                path: path.display().to_string(),
                source,
            }))
        }
    };
    let file = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = String::from_utf8_lossy(&bytes);
    let records = parse_clean_file::<R>(&text, &file)?;
    let clean_meta = fs::read_to_string(pipeline::meta_path(data_dir, R::KIND))
        .map(|t| pipeline::stable_meta(&pipeline::parse_meta(&t)))
        .unwrap_or_default();
    Ok(LoadedInput {
        info: InputInfo {
            kind: R::KIND,
            file,
            sha256: sha256_hex(&bytes),
            rows: records.len(),
            clean_meta,
        },
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportStatus {
    Ok,
    /// A statistic was undefined; reasons say which.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub analysis: String,
    pub status: ReportStatus,
    pub reasons: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<InputInfo>,
    pub results: BTreeMap<String, Value>,
    pub tables: BTreeMap<String, Table>,
    /// Written alongside the report as `<analysis>.<label>.csv`.
    #[serde(skip)]
    pub series: Vec<DailySeries>,
    pub series_files: Vec<String>,
}

impl AnalysisReport {
    fn new(name: AnalysisName, params: &AnalysisParams) -> Self {
        Self {
            analysis: name.as_str().to_string(),
            status: ReportStatus::Ok,
            reasons: Vec::new(),
            parameters: params.to_map(),
            inputs: Vec::new(),
            results: BTreeMap::new(),
            tables: BTreeMap::new(),
            series: Vec::new(),
            series_files: Vec::new(),
        }
    }

    fn degenerate(&mut self, reason: impl Into<String>) {
        self.status = ReportStatus::Degenerate;
        self.reasons.push(reason.into());
    }

    fn add_series(&mut self, series: DailySeries) {
        self.series_files
            .push(format!("{}.{}.csv", self.analysis, series.label));
        self.series.push(series);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `date,value` lines for a series.
pub fn series_csv(series: &DailySeries) -> String {
    let lines: Vec<String> = series.iter().map(|(d, v)| format!("{d},{v}")).collect();
    engine::render_lines(Some("date,value"), &lines)
}

/// Write `<out_dir>/reports/<analysis>.json` and its series CSVs; returns
/// the written paths.
pub fn write_report(report: &AnalysisReport, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let dir = out_dir.join("reports");
    fs::create_dir_all(&dir).map_err(|source| ReportError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    let json_path = dir.join(format!("{}.json", report.analysis));
    engine::write_atomic(&json_path, report.to_json().as_bytes())?;
    written.push(json_path);
    for (series, name) in report.series.iter().zip(&report.series_files) {
        let path = dir.join(name);
        engine::write_atomic(&path, series_csv(series).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Load the inputs `name` needs from `data_dir` and run it.
pub fn run_analysis(
    name: AnalysisName,
    data_dir: &Path,
    params: &AnalysisParams,
) -> Result<AnalysisReport, ReportError> {
    match name {
        AnalysisName::TopCategories => {
            let ecomm = load_input::<CleanEcommEvent>(data_dir)?;
            top_categories(&ecomm, params)
        }
        AnalysisName::Engagement => {
            let tweets = load_input::<CleanTweetRecord>(data_dir)?;
            Ok(engagement(&tweets, params))
        }
        AnalysisName::PurchasesVsAdvancers => {
            let stocks = load_input::<CleanStockRecord>(data_dir)?;
            let ecomm = load_input::<CleanEcommEvent>(data_dir)?;
            purchases_vs_advancers(&stocks, &ecomm, params)
        }
        AnalysisName::TweetsVsWinners => {
            let stocks = load_input::<CleanStockRecord>(data_dir)?;
            let tweets = load_input::<CleanTweetRecord>(data_dir)?;
            Ok(tweets_vs_winners(&stocks, &tweets, params))
        }
        AnalysisName::TopVsRest => {
            let stocks = load_input::<CleanStockRecord>(data_dir)?;
            top_vs_rest(&stocks, params)
        }
        AnalysisName::WeekdayRollup => {
            let stocks = load_input::<CleanStockRecord>(data_dir)?;
            Ok(weekday_rollup(&stocks, params))
        }
    }
}

fn weekday_cells(day: DayOfWeek) -> [Value; 3] {
    [
        json!(day.short_name()),
        json!(day.iso_number()),
        json!(day.sunday_first_number()),
    ]
}

fn all_weekdays() -> impl Iterator<Item = DayOfWeek> {
    [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ]
    .into_iter()
    .map(DayOfWeek)
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

fn repair(series: DailySeries, params: &AnalysisParams) -> Result<DailySeries, ReportError> {
    match params.anomaly {
        Some((missing, inflated)) => Ok(analytics::normalize_anomalous_days(&series, missing, inflated)?),
        None => Ok(series),
    }
}

/// Daily count of events matching `pred`, over every date in `dates`.
fn daily_count<F>(label: &str, events: &[CleanEcommEvent], dates: &BTreeSet<NaiveDate>, pred: F) -> DailySeries
where
    F: Fn(&CleanEcommEvent) -> bool,
{
    let mut s = DailySeries::from_points(label, dates.iter().map(|d| (*d, 0.0)));
    for e in events.iter().filter(|e| pred(e)) {
        *s.points.entry(e.record_date).or_insert(0.0) += 1.0;
    }
    s
}

/// `min(Sat, Sun) / mean(Mon..Fri)` of a Mean weekday profile.
pub fn weekend_ratio(profile: &analytics::WeekdayProfile) -> Option<f64> {
    let sat = profile.get(Weekday::Sat)?;
    let sun = profile.get(Weekday::Sun)?;
    let weekdays: Vec<f64> = [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri]
        .into_iter()
        .map(|d| profile.get(d))
        .collect::<Option<_>>()?;
    let mean = weekdays.iter().sum::<f64>() / weekdays.len() as f64;
    (mean > 0.0).then(|| sat.min(sun) / mean)
}

pub fn top_categories(
    ecomm: &LoadedInput<CleanEcommEvent>,
    params: &AnalysisParams,
) -> Result<AnalysisReport, ReportError> {
    let mut report = AnalysisReport::new(AnalysisName::TopCategories, params);
    report.inputs.push(ecomm.info.clone());
    let events = &ecomm.records;
    if events.is_empty() {
        report.degenerate(AnalysisError::EmptyInput("e-commerce events").to_string());
        return Ok(report);
    }
    let dates: BTreeSet<NaiveDate> = events.iter().map(|e| e.record_date).collect();

    let cats = analytics::category_event_counts(events);
    let mut table = Table::new(&["category", "views", "carts", "removes", "purchases"]);
    for c in &cats {
        table.push(vec![
            json!(c.category),
            json!(c.views),
            json!(c.carts),
            json!(c.removes),
            json!(c.purchases),
        ]);
    }
    report.tables.insert("categories".into(), table);
    report.results.insert(
        "uncategorized_events".into(),
        json!(events.iter().filter(|e| e.category_code.is_none()).count()),
    );

    let mut profiles = BTreeMap::new();
    for kind in EventType::ALL {
        let series = repair(
            daily_count(kind.as_str(), events, &dates, |e| e.event_type == kind),
            params,
        )?;
        profiles.insert(kind, analytics::rollup_weekday(&series, Aggregate::Mean));
        if matches!(kind, EventType::Cart | EventType::Purchase) {
            report.add_series(series);
        }
    }
    let mut table = Table::new(&[
        "weekday",
        "iso_number",
        "sunday_first_number",
        "mean_views",
        "mean_carts",
        "mean_removes",
        "mean_purchases",
    ]);
    for day in all_weekdays() {
        let mut row = weekday_cells(day).to_vec();
        row.extend(
            EventType::ALL
                .iter()
                .map(|k| opt_num(profiles[k].values.get(&day).copied())),
        );
        table.push(row);
    }
    report.tables.insert("weekday_events".into(), table);
    report.results.insert(
        "weekend_purchase_ratio".into(),
        opt_num(weekend_ratio(&profiles[&EventType::Purchase])),
    );
    report.results.insert(
        "weekend_cart_ratio".into(),
        opt_num(weekend_ratio(&profiles[&EventType::Cart])),
    );

    let mut table = Table::new(&[
        "category",
        "weekday",
        "iso_number",
        "sunday_first_number",
        "mean_carts",
        "mean_purchases",
    ]);
    for c in cats.iter().take(TOP_CATEGORY_COUNT) {
        let in_cat = |e: &CleanEcommEvent| e.category_code.as_deref() == Some(c.category.as_str());
        let carts = daily_count("carts", events, &dates, |e| {
            in_cat(e) && e.event_type == EventType::Cart
        });
        let buys = daily_count("purchases", events, &dates, |e| {
            in_cat(e) && e.event_type == EventType::Purchase
        });
        let carts = analytics::rollup_weekday(&repair(carts, params)?, Aggregate::Mean);
        let buys = analytics::rollup_weekday(&repair(buys, params)?, Aggregate::Mean);
        for day in all_weekdays() {
            let mut row = vec![json!(c.category)];
            row.extend(weekday_cells(day));
            row.push(opt_num(carts.values.get(&day).copied()));
            row.push(opt_num(buys.values.get(&day).copied()));
            table.push(row);
        }
    }
    report.tables.insert("top_category_weekday".into(), table);
    Ok(report)
}

pub fn engagement(tweets: &LoadedInput<CleanTweetRecord>, params: &AnalysisParams) -> AnalysisReport {
    let mut report = AnalysisReport::new(AnalysisName::Engagement, params);
    report.inputs.push(tweets.info.clone());
    let table_data = analytics::engagement_by_sentiment_weekday(&tweets.records);
    let mut table = Table::new(&[
        "weekday",
        "iso_number",
        "sunday_first_number",
        "sentiment",
        "tweets",
        "mean_likes",
        "mean_comments",
        "mean_retweets",
    ]);
    for ((day, label), cell) in &table_data.rows {
        let mut row = weekday_cells(*day).to_vec();
        row.extend([
            json!(label.as_str()),
            json!(cell.tweet_count),
            json!(cell.mean_likes),
            json!(cell.mean_comments),
            json!(cell.mean_retweets),
        ]);
        table.push(row);
    }
    report.tables.insert("engagement".into(), table);

    let mut counts = BTreeMap::new();
    for label in [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ] {
        counts.insert(
            label.as_str(),
            tweets.records.iter().filter(|t| t.sentiment == label).count(),
        );
    }
    report.results.insert("label_counts".into(), json!(counts));
    report
}

fn all_summaries(
    stocks: &[CleanStockRecord],
    params: &AnalysisParams,
) -> BTreeMap<Cohort, BTreeMap<NaiveDate, MarketDaySummary>> {
    cohort_summaries(stocks, params.top_list.as_ref(), params.threshold)
}

pub fn purchases_vs_advancers(
    stocks: &LoadedInput<CleanStockRecord>,
    ecomm: &LoadedInput<CleanEcommEvent>,
    params: &AnalysisParams,
) -> Result<AnalysisReport, ReportError> {
    let mut report = AnalysisReport::new(AnalysisName::PurchasesVsAdvancers, params);
    report.inputs.push(stocks.info.clone());
    report.inputs.push(ecomm.info.clone());
    let summaries = all_summaries(&stocks.records, params)
        .remove(&Cohort::All)
        .unwrap_or_default();

    let paired = match analytics::purchases_vs_prior_day_advancers(
        &ecomm.records,
        &summaries,
        params.anomaly,
        params.lag_mode,
    ) {
        Ok(p) => p,
        Err(e @ AnalysisError::EmptyInput(_)) => {
            report.degenerate(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let mut table = Table::new(&["date", "purchases", "prior_day_advancing"]);
    for p in &paired.pairs {
        table.push(vec![json!(p.date.to_string()), json!(p.a), json!(p.b)]);
    }
    report.tables.insert("pairs".into(), table);
    report.results.insert("n_pairs".into(), json!(paired.pairs.len()));
    match &paired.r {
        Ok(r) => {
            report.results.insert("pearson_r".into(), json!(r));
        }
        Err(e) => {
            report.results.insert("pearson_r".into(), Value::Null);
            report.degenerate(format!("pearson_r: {e}"));
        }
    }
    report.add_series(paired.a);
    report.add_series(paired.b);
    Ok(report)
}

fn lag_json(res: &LagResult) -> Value {
    let undefined: BTreeMap<String, String> = res
        .undefined_by_lag
        .iter()
        .map(|(lag, e)| (lag.to_string(), e.to_string()))
        .collect();
    json!({
        "best_lag": res.best_lag,
        "r_at_best": res.r_at_best,
        "r_by_lag": res.r_by_lag.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<BTreeMap<_, _>>(),
        "n_pairs_by_lag": res.n_pairs_by_lag.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<BTreeMap<_, _>>(),
        "undefined_by_lag": undefined,
    })
}

pub fn tweets_vs_winners(
    stocks: &LoadedInput<CleanStockRecord>,
    tweets: &LoadedInput<CleanTweetRecord>,
    params: &AnalysisParams,
) -> AnalysisReport {
    let mut report = AnalysisReport::new(AnalysisName::TweetsVsWinners, params);
    report.inputs.push(stocks.info.clone());
    report.inputs.push(tweets.info.clone());
    let summaries = all_summaries(&stocks.records, params);
    let cohorts: &[Cohort] = if params.top_list.is_some() {
        &Cohort::ALL
    } else {
        &[Cohort::All]
    };

    let mut lags = BTreeMap::new();
    for &cohort in cohorts {
        let s = &summaries[&cohort];
        let value = match analytics::positive_tweets_vs_big_winners(
            &tweets.records,
            s,
            cohort,
            params.max_lag,
            params.lag_mode,
        ) {
            Ok(res) => lag_json(&res),
            Err(e) => {
                if cohort == Cohort::All {
                    report.degenerate(format!("all: {e}"));
                }
                json!({ "error": e.to_string() })
            }
        };
        lags.insert(cohort.as_str(), value);
        report.add_series(analytics::summary_series(s, format!("{cohort}_big_winners"), |d| {
            d.big_winners as f64
        }));
    }
    report.results.insert("lag_by_cohort".into(), json!(lags));

    let positive = analytics::daily_sentiment_counts(&tweets.records, SentimentLabel::Positive);
    let all = &summaries[&Cohort::All];
    let weekly_pos = analytics::rollup_weekno(&positive);
    let weekly_win = analytics::rollup_weekno(&analytics::summary_series(all, "w", |d| d.big_winners as f64));
    let weekly_tot = analytics::rollup_weekno(&analytics::summary_series(all, "t", |d| d.total() as f64));
    let weeks: BTreeSet<IsoWeek> = weekly_pos.keys().chain(weekly_tot.keys()).copied().collect();
    let mut table = Table::new(&[
        "iso_week",
        "positive_tweets",
        "big_winners",
        "stock_records",
        "pct_big_winners",
    ]);
    let mut pairs = Vec::new();
    for w in weeks {
        let pos = weekly_pos.get(&w).copied();
        let win = weekly_win.get(&w).copied();
        let tot = weekly_tot.get(&w).copied();
        let pct = match (win, tot) {
            (Some(win), Some(tot)) if tot > 0.0 => Some(100.0 * win / tot),
            _ => None,
        };
        if let (Some(p), Some(q)) = (pos, pct) {
            pairs.push((p, q));
        }
        table.push(vec![
            json!(w.to_string()),
            opt_num(pos),
            opt_num(win),
            opt_num(tot),
            opt_num(pct),
        ]);
    }
    report.tables.insert("weekly".into(), table);
    let weekly_r: Result<f64, StatError> = analytics::pearson(&pairs);
    report.results.insert(
        "weekly_positive_vs_pct_big_winners".into(),
        match weekly_r {
            Ok(r) => json!({ "pearson_r": r, "n_weeks": pairs.len() }),
            Err(e) => json!({ "pearson_r": null, "n_weeks": pairs.len(), "error": e.to_string() }),
        },
    );
    let mut positive = positive;
    positive.label = "positive_tweets".into();
    report.series.insert(0, positive);
    report
        .series_files
        .insert(0, format!("{}.positive_tweets.csv", report.analysis));
    report
}

pub fn top_vs_rest(
    stocks: &LoadedInput<CleanStockRecord>,
    params: &AnalysisParams,
) -> Result<AnalysisReport, ReportError> {
    if params.top_list.is_none() {
        return Err(ReportError::Config("top-vs-rest needs a top list (--top-list)".into()));
    }
    let mut report = AnalysisReport::new(AnalysisName::TopVsRest, params);
    report.inputs.push(stocks.info.clone());
    let summaries = all_summaries(&stocks.records, params);
    let mut table = Table::new(&["cohort", "days", "metric", "min", "p25", "median", "p75", "max"]);
    for (cohort, s) in &summaries {
        let stats = analytics::breadth_stats(*cohort, s);
        for (metric, spread) in [
            ("pct_advancing", &stats.pct_advancing),
            ("pct_declining", &stats.pct_declining),
        ] {
            let mut row = vec![json!(cohort.as_str()), json!(stats.days), json!(metric)];
            match spread {
                Some(sp) => row.extend([sp.min, sp.p25, sp.median, sp.p75, sp.max].map(|x| json!(x))),
                None => {
                    row.extend(std::iter::repeat_n(Value::Null, 5));
                }
            }
            table.push(row);
        }
        if stats.days == 0 && *cohort != Cohort::All {
            report.degenerate(format!("{cohort}: no stock records"));
        }
        report.add_series(analytics::summary_series(s, format!("{cohort}_pct_advancing"), |d| {
            d.pct_advancing
        }));
    }
    report.tables.insert("breadth".into(), table);
    Ok(report)
}

pub fn weekday_rollup(stocks: &LoadedInput<CleanStockRecord>, params: &AnalysisParams) -> AnalysisReport {
    let mut report = AnalysisReport::new(AnalysisName::WeekdayRollup, params);
    report.inputs.push(stocks.info.clone());
    let summaries = all_summaries(&stocks.records, params);
    let cohorts: &[Cohort] = if params.top_list.is_some() {
        &Cohort::ALL
    } else {
        &[Cohort::All]
    };
    let mut table = Table::new(&[
        "cohort",
        "weekday",
        "iso_number",
        "sunday_first_number",
        "days",
        "sum_big_winners",
        "sum_big_losers",
        "mean_big_winners",
        "mean_big_losers",
        "mean_pct_big_movers",
    ]);
    for &cohort in cohorts {
        let s = &summaries[&cohort];
        if s.is_empty() {
            report.degenerate(format!("{cohort}: no stock records"));
            continue;
        }
        let winners = analytics::summary_series(s, "w", |d| d.big_winners as f64);
        let losers = analytics::summary_series(s, "l", |d| d.big_losers as f64);
        let movers = analytics::summary_series(s, "m", |d| {
            100.0 * (d.big_winners + d.big_losers) as f64 / d.total() as f64
        });
        let sum_w = analytics::rollup_weekday(&winners, Aggregate::Sum);
        let sum_l = analytics::rollup_weekday(&losers, Aggregate::Sum);
        let mean_w = analytics::rollup_weekday(&winners, Aggregate::Mean);
        let mean_l = analytics::rollup_weekday(&losers, Aggregate::Mean);
        let mean_m = analytics::rollup_weekday(&movers, Aggregate::Mean);
        for (day, days) in &mean_w.counts {
            let mut row = vec![json!(cohort.as_str())];
            row.extend(weekday_cells(*day));
            row.extend([
                json!(days),
                json!(sum_w.values[day]),
                json!(sum_l.values[day]),
                json!(mean_w.values[day]),
                json!(mean_l.values[day]),
                json!(mean_m.values[day]),
            ]);
            table.push(row);
        }
    }
    report.tables.insert("weekday".into(), table);
    report
}
