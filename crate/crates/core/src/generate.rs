//! Seeded synthetic raw datasets in the default raw layouts, with optional
//! planted cross-dataset effects and a sprinkling of rows the cleaner must
//! drop.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cleaning::StopwordSet;
use crate::engine::{self, EngineError};
use crate::ingestion::quote_value;
use crate::sentiment::PolarityLexicon;

pub const MIN_DAYS: u32 = 14;

const POSITIVE_WORDS: [&str; 10] = [
    "bullish", "gains", "rally", "great", "strong", "profit", "beat", "surge", "soaring", "upgrade",
];
const NEGATIVE_WORDS: [&str; 10] = [
    "bearish",
    "loss",
    "crash",
    "weak",
    "terrible",
    "plunge",
    "fear",
    "downgrade",
    "selloff",
    "miss",
];
const NEUTRAL_WORDS: [&str; 12] = [
    "shares", "trading", "session", "watching", "chart", "earnings", "today", "week", "market", "price", "volume",
    "quarter",
];
const CATEGORIES: [(&str, u64); 8] = [
    ("electronics.smartphone", 2),
    ("apparel.shoes", 4),
    ("appliances.kitchen.refrigerators", 6),
    ("electronics.video.tv", 8),
    ("computers.notebook", 10),
    ("furniture.living_room.sofa", 12),
    ("electronics.audio.headphone", 13),
    ("sport.bicycle", 14),
];
const BRANDS: [&str; 8] = ["samsung", "apple", "xiaomi", "lg", "nike", "bosch", "sony", "lenovo"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Planted {
    None,
    /// Positive-tweet counts lead big-winner counts by one day.
    Lag1TweetsWinners,
    /// Saturday and Sunday purchases and carts scaled by the weekend factor.
    WeekendBoost,
    /// Purchases proportional to the previous day's advancing stocks.
    ProportionalPurchases,
}

impl Planted {
    pub const ALL: [Planted; 4] = [
        Planted::None,
        Planted::Lag1TweetsWinners,
        Planted::WeekendBoost,
        Planted::ProportionalPurchases,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Planted::None => "none",
            Planted::Lag1TweetsWinners => "lag1_tweets_winners",
            Planted::WeekendBoost => "weekend_boost",
            Planted::ProportionalPurchases => "proportional_purchases",
        }
    }
}

impl fmt::Display for Planted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Planted {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == norm)
            .ok_or_else(|| format!("unknown planted effect '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub days: u32,
    /// Tweets per day; e-commerce purchases per day are a tenth of this.
    pub rows_per_day: u32,
    pub tickers: usize,
    pub top_count: usize,
    pub planted: Planted,
    /// Relative half-width of the uniform multiplicative noise on planted
    /// quantities.
    pub noise: f64,
    pub weekend_factor: f64,
    /// Fraction of extra junk rows per dataset.
    pub junk_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            start: NaiveDate::from_ymd_opt(2019, 10, 1).expect("valid date"),
            days: 60,
            rows_per_day: 200,
            tickers: 50,
            top_count: 10,
            planted: Planted::None,
            noise: 0.05,
            weekend_factor: 1.5,
            junk_rate: 0.01,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("failed to create {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Write(#[from] EngineError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneratorSummary {
    pub stock_rows: u64,
    pub tweet_rows: u64,
    pub event_rows: u64,
    pub junk_rows: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: String| Err(GenerateError::Config(m));
        if self.days < MIN_DAYS {
            return bad(format!("days must be at least {MIN_DAYS}, got {}", self.days));
        }
        if self.rows_per_day < 10 {
            return bad(format!("rows_per_day must be at least 10, got {}", self.rows_per_day));
        }
        if self.tickers < 2 || self.top_count == 0 || self.top_count >= self.tickers {
            return bad(format!(
                "need 0 < top_count < tickers, got top_count {} of {}",
                self.top_count, self.tickers
            ));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return bad(format!("noise must lie in [0, 0.5), got {}", self.noise));
        }
        if !(self.weekend_factor > 0.0 && self.weekend_factor.is_finite()) {
            return bad(format!("weekend_factor must be positive, got {}", self.weekend_factor));
        }
        if !(0.0..=0.5).contains(&self.junk_rate) {
            return bad(format!("junk_rate must lie in [0, 0.5], got {}", self.junk_rate));
        }
        Ok(())
    }

    fn dates(&self) -> Vec<NaiveDate> {
        self.start.iter_days().take(self.days as usize).collect()
    }

    fn jitter(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.noise == 0.0 {
            1.0
        } else {
            1.0 + rng.gen_range(-self.noise..=self.noise)
        }
    }
}

fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

fn round_cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Three- or four-letter tickers that are neither lexicon words nor
/// stopwords, so cashtags never sway sentiment.
fn ticker_names(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let lex = PolarityLexicon::builtin();
    let stop = StopwordSet::builtin();
    let mut names = std::collections::BTreeSet::new();
    while names.len() < n {
        let len = rng.gen_range(3..=4);
        let name: String = (0..len).map(|_| rng.gen_range(b'A'..=b'Z') as char).collect();
        let lower = name.to_ascii_lowercase();
        if lex.get(&lower).is_none() && !stop.contains(&lower) {
            names.insert(name);
        }
    }
    let mut v: Vec<String> = names.into_iter().collect();
    v.shuffle(rng);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tone {
    Positive,
    Negative,
    Neutral,
}

fn tweet_body(tone: Tone, ticker: &str, rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<String> = Vec::new();
    let polar: &[&str] = match tone {
        Tone::Positive => &POSITIVE_WORDS,
        Tone::Negative => &NEGATIVE_WORDS,
        Tone::Neutral => &[],
    };
    if !polar.is_empty() {
        for _ in 0..rng.gen_range(1..=2) {
            words.push(polar.choose(rng).expect("non-empty").to_string());
        }
    }
    for _ in 0..rng.gen_range(1..=3) {
        words.push(NEUTRAL_WORDS.choose(rng).expect("non-empty").to_string());
    }
    words.shuffle(rng);
    let mut body = format!("${ticker} {}", words.join(" "));
    match rng.gen_range(0..4) {
        0 => body.push('!'),
        1 => body.push_str(", again"),
        _ => {}
    }
    body
}

struct Writer {
    root: PathBuf,
}

impl Writer {
    fn dir(&self, name: &str) -> Result<PathBuf, GenerateError> {
        let p = self.root.join(name);
        fs::create_dir_all(&p).map_err(|source| GenerateError::Io {
            path: p.clone(),
            source,
        })?;
        Ok(p)
    }
}

struct StockDay {
    advancing: u64,
}

/// Write raw stocks, tweets and e-commerce events under `out_dir`.
pub fn generate(cfg: &GeneratorConfig, out_dir: &Path) -> Result<GeneratorSummary, GenerateError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let writer = Writer {
        root: out_dir.to_path_buf(),
    };
    let dates = cfg.dates();
    let tickers = ticker_names(cfg.tickers, &mut rng);
    let top: Vec<&String> = tickers.iter().take(cfg.top_count).collect();
    let mut summary = GeneratorSummary::default();

    // Tweets first: planted winners depend on positive counts.
    let mut positive_by_day = Vec::with_capacity(dates.len());
    let mut tweet_lines = vec!["tweet_id,writer,post_date,body,comment_num,retweet_num,like_num".to_string()];
    let mut tweet_id: u64 = 1_180_000_000_000_000_000;
    let mut junk_seq = 0usize;
    for &day in &dates {
        let n = cfg.rows_per_day as usize;
        let pos_share = rng.gen_range(0.25..0.55);
        let neg_share = rng.gen_range(0.10..0.25);
        let pos = (n as f64 * pos_share).round() as usize;
        let neg = ((n as f64 * neg_share).round() as usize).min(n - pos);
        positive_by_day.push(pos as f64);
        let mut tones: Vec<Tone> = std::iter::repeat_n(Tone::Positive, pos)
            .chain(std::iter::repeat_n(Tone::Negative, neg))
            .chain(std::iter::repeat_n(Tone::Neutral, n - pos - neg))
            .collect();
        tones.shuffle(&mut rng);
        let midnight = day.and_hms_opt(0, 0, 0).expect("valid time").and_utc().timestamp();
        for tone in tones {
            tweet_id += rng.gen_range(1..1000);
            let ticker = tickers.choose(&mut rng).expect("tickers");
            let likes = match tone {
                Tone::Negative => rng.gen_range(0..=30),
                _ => rng.gen_range(0..=20),
            };
            let comments = rng.gen_range(0..=likes / 3 + 1);
            let retweets = rng.gen_range(0..=likes / 4 + 1);
            tweet_lines.push(format!(
                "{tweet_id},user{},{},{},{comments},{retweets},{likes}",
                rng.gen_range(1..5000),
                midnight + rng.gen_range(0..86_400),
                quote_value(&tweet_body(tone, ticker, &mut rng)),
            ));
            summary.tweet_rows += 1;
        }
        let junk = junk_count(cfg, n, &mut rng);
        for _ in 0..junk {
            junk_seq += 1;
            let line = match junk_seq % 3 {
                0 => format!("{tweet_id},junk,{midnight},bullish rally,1,1,-4"),
                1 => format!("{tweet_id},junk,,bullish rally,1,1,1"),
                _ => format!("{tweet_id},junk,{midnight},bullish rally,many,1,1"),
            };
            tweet_lines.push(line);
            summary.junk_rows += 1;
        }
    }
    let dir = writer.dir("tweets")?;
    engine::write_atomic(
        &dir.join("tweets.csv"),
        engine::render_lines(None, &tweet_lines).as_bytes(),
    )?;

    // Stocks: trading days only.
    let mut prices: Vec<f64> = tickers.iter().map(|_| rng.gen_range(20.0..400.0)).collect();
    let mut stock_lines: Vec<Vec<String>> = tickers
        .iter()
        .map(|_| vec!["Date,Open,High,Low,Close,Volume,Dividends,Stock Splits".to_string()])
        .collect();
    let mut stock_days: Vec<Option<StockDay>> = Vec::with_capacity(dates.len());
    let threshold = 5.0;
    for (i, &day) in dates.iter().enumerate() {
        if is_weekend(day) {
            stock_days.push(None);
            continue;
        }
        let t = tickers.len();
        let winners = match cfg.planted {
            Planted::Lag1TweetsWinners if i > 0 => {
                let max_pos = cfg.rows_per_day as f64 * 0.55;
                let scale = 0.5 * t as f64 / max_pos;
                ((scale * positive_by_day[i - 1] * cfg.jitter(&mut rng)).round() as usize).min(t)
            }
            _ => rng.gen_range(0..=t / 10),
        };
        let losers = rng.gen_range(0..=t / 10).min(t - winners);
        let mut order: Vec<usize> = (0..t).collect();
        order.shuffle(&mut rng);
        let mut class = vec![0i8; t];
        for &k in &order[..winners] {
            class[k] = 1;
        }
        for &k in &order[winners..winners + losers] {
            class[k] = -1;
        }
        let market: f64 = rng.gen_range(-1.0..1.0);
        let mut advancing = 0;
        for k in 0..t {
            let is_top = k < cfg.top_count;
            let pct = match class[k] {
                1 => rng.gen_range(threshold + 0.5..threshold + 7.0),
                -1 => -rng.gen_range(threshold + 0.5..threshold + 7.0),
                _ => {
                    let drift = if is_top { 3.0 * market } else { 0.0 };
                    let m: f64 = drift + rng.gen_range(-1.5..1.5);
                    let m = m.clamp(-4.5, 4.5);
                    if m.abs() < 0.2 {
                        0.2f64.copysign(m)
                    } else {
                        m
                    }
                }
            };
            let open = round_cents(prices[k] * (1.0 + rng.gen_range(-0.003..0.003)));
            let close = round_cents(open * (1.0 + pct / 100.0));
            if close > open {
                advancing += 1;
            }
            let high = round_cents(open.max(close) * (1.0 + rng.gen_range(0.0..0.01)));
            let low = round_cents(open.min(close) * (1.0 - rng.gen_range(0.0..0.01)));
            stock_lines[k].push(format!(
                "{day},{open},{high},{low},{close},{},0.0,0.0",
                rng.gen_range(100_000..5_000_000)
            ));
            summary.stock_rows += 1;
            prices[k] = close;
        }
        stock_days.push(Some(StockDay { advancing }));
        let junk = junk_count(cfg, t, &mut rng);
        for _ in 0..junk {
            junk_seq += 1;
            let k = rng.gen_range(0..t);
            let line = match junk_seq % 4 {
                0 => format!("{day},0,1,0,1,100,0.0,0.0"),
                1 => format!("{day},,1,0,1,100,0.0,0.0"),
                2 => format!("{day},10,11,9,-3,100,0.0,0.0"),
                _ => format!("{day},10,11,9"),
            };
            stock_lines[k].push(line);
            summary.junk_rows += 1;
        }
    }
    let dir = writer.dir("stocks")?;
    for (name, lines) in tickers.iter().zip(&stock_lines) {
        engine::write_atomic(
            &dir.join(format!("{name}.csv")),
            engine::render_lines(None, lines).as_bytes(),
        )?;
    }

    // E-commerce events.
    let base_purchases = f64::from(cfg.rows_per_day) / 10.0;
    let mean_advancing = {
        let adv: Vec<f64> = stock_days.iter().flatten().map(|s| s.advancing as f64).collect();
        if adv.is_empty() {
            1.0
        } else {
            adv.iter().sum::<f64>() / adv.len() as f64
        }
    };
    let mut event_lines =
        vec!["event_time,event_type,product_id,category_id,category_code,brand,price,user_id,user_session".to_string()];
    for (i, &day) in dates.iter().enumerate() {
        let weekend = cfg.planted == Planted::WeekendBoost && is_weekend(day);
        let boost = if weekend { cfg.weekend_factor } else { 1.0 };
        let purchases = match cfg.planted {
            Planted::ProportionalPurchases => {
                let prev = i.checked_sub(1).and_then(|j| stock_days[j].as_ref());
                let adv = prev.map_or(mean_advancing, |s| s.advancing as f64);
                base_purchases * adv / mean_advancing * cfg.jitter(&mut rng)
            }
            _ => base_purchases * boost * cfg.jitter(&mut rng),
        };
        let carts = base_purchases * 2.0 * boost * cfg.jitter(&mut rng);
        let views = base_purchases * 5.0 * cfg.jitter(&mut rng);
        let removes = base_purchases * 0.5 * cfg.jitter(&mut rng);
        let mut kinds: Vec<&str> = Vec::new();
        for (kind, n) in [
            ("view", views),
            ("cart", carts),
            ("remove_from_cart", removes),
            ("purchase", purchases),
        ] {
            kinds.extend(std::iter::repeat_n(kind, n.round().max(0.0) as usize));
        }
        kinds.shuffle(&mut rng);
        for kind in kinds {
            let secs = rng.gen_range(0..86_400u32);
            let (cat, cat_id) = if rng.gen_bool(0.1) {
                ("", 2_053_013_550_000_000_000u64)
            } else {
                let weights: Vec<u64> = CATEGORIES.iter().map(|c| 20 - c.1).collect();
                let total: u64 = weights.iter().sum();
                let mut pick = rng.gen_range(0..total);
                let mut idx = 0;
                while pick >= weights[idx] {
                    pick -= weights[idx];
                    idx += 1;
                }
                (CATEGORIES[idx].0, 2_053_013_550_000_000_000 + CATEGORIES[idx].1)
            };
            let brand = if rng.gen_bool(0.1) {
                ""
            } else {
                BRANDS.choose(&mut rng).expect("brands")
            };
            event_lines.push(format!(
                "{day} {:02}:{:02}:{:02} UTC,{kind},{},{cat_id},{cat},{brand},{:.2},{},{:08x}-{:04x}",
                secs / 3600,
                secs / 60 % 60,
                secs % 60,
                rng.gen_range(1_000_000..1_100_000),
                rng.gen_range(5.0..1500.0),
                rng.gen_range(500_000_000..600_000_000),
                rng.gen::<u32>(),
                rng.gen::<u16>(),
            ));
            summary.event_rows += 1;
        }
        let junk = junk_count(cfg, cfg.rows_per_day as usize, &mut rng);
        for _ in 0..junk {
            junk_seq += 1;
            let line = match junk_seq % 3 {
                0 => format!("{day} 10:00:00 UTC,wishlist,1,1,,,1.00,1,x"),
                1 => format!("{day} 10:00:00 UTC,purchase,1,1,,,-1.00,1,x"),
                _ => format!("{day} 10:00:00 UTC,purchase,,1,,,1.00,1,x"),
            };
            event_lines.push(line);
            summary.junk_rows += 1;
        }
    }
    let dir = writer.dir("ecommerce")?;
    engine::write_atomic(
        &dir.join("events.csv"),
        engine::render_lines(None, &event_lines).as_bytes(),
    )?;

    let mut top_sorted: Vec<&str> = top.iter().map(|s| s.as_str()).collect();
    top_sorted.sort_unstable();
    let top_text = format!("# top tickers\n{}\n", top_sorted.join("\n"));
    engine::write_atomic(&out_dir.join("top_list.txt"), top_text.as_bytes())?;

    let meta = [
        format!("seed={}", cfg.seed),
        format!("start={}", cfg.start),
        format!("days={}", cfg.days),
        format!("rows_per_day={}", cfg.rows_per_day),
        format!("tickers={}", cfg.tickers),
        format!("top_count={}", cfg.top_count),
        format!("planted={}", cfg.planted),
        format!("noise={}", cfg.noise),
        format!("weekend_factor={}", cfg.weekend_factor),
        format!("junk_rate={}", cfg.junk_rate),
        format!("stock_rows={}", summary.stock_rows),
        format!("tweet_rows={}", summary.tweet_rows),
        format!("event_rows={}", summary.event_rows),
        format!("junk_rows={}", summary.junk_rows),
    ];
    engine::write_atomic(
        &out_dir.join("generator.meta"),
        engine::render_lines(None, &meta).as_bytes(),
    )?;
    Ok(summary)
}

fn junk_count(cfg: &GeneratorConfig, rows: usize, rng: &mut ChaCha8Rng) -> usize {
    let expected = cfg.junk_rate * rows as f64;
    let whole = expected.floor();
    whole as usize + usize::from(rng.gen_bool((expected - whole).clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleaning::normalize_tweet_text;
    use crate::sentiment::{classify_sentiment, score_polarity, SentimentLabel};

    #[test]
    fn tweet_tones_classify_as_intended() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tickers = ticker_names(40, &mut rng);
        let stop = StopwordSet::builtin();
        let lex = PolarityLexicon::builtin();
        for (tone, want) in [
            (Tone::Positive, SentimentLabel::Positive),
            (Tone::Negative, SentimentLabel::Negative),
            (Tone::Neutral, SentimentLabel::Neutral),
        ] {
            for i in 0..300 {
                let body = tweet_body(tone, &tickers[i % tickers.len()], &mut rng);
                let tokens = normalize_tweet_text(&body, stop);
                assert_eq!(classify_sentiment(score_polarity(&tokens, lex)), want, "{body}");
            }
        }
    }

    #[test]
    fn config_validation() {
        let ok = GeneratorConfig::default();
        assert!(ok.validate().is_ok());
        assert!(GeneratorConfig { days: 13, ..ok.clone() }.validate().is_err());
        assert!(GeneratorConfig {
            top_count: 50,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(GeneratorConfig { noise: 0.5, ..ok }.validate().is_err());
    }

    #[test]
    fn planted_names_round_trip() {
        for p in Planted::ALL {
            assert_eq!(p.as_str().parse::<Planted>(), Ok(p));
        }
        assert_eq!("weekend-boost".parse::<Planted>(), Ok(Planted::WeekendBoost));
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GeneratorConfig {
            days: 14,
            rows_per_day: 20,
            tickers: 6,
            top_count: 2,
            planted: Planted::WeekendBoost,
            ..GeneratorConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate(&cfg, a.path()).unwrap();
        generate(&cfg, b.path()).unwrap();
        for rel in [
            "tweets/tweets.csv",
            "ecommerce/events.csv",
            "top_list.txt",
            "generator.meta",
        ] {
            assert_eq!(
                fs::read(a.path().join(rel)).unwrap(),
                fs::read(b.path().join(rel)).unwrap(),
                "{rel}"
            );
        }
        let meta = fs::read_to_string(a.path().join("generator.meta")).unwrap();
        assert!(meta.contains("weekend_factor=1.5"));
        assert_eq!(fs::read_dir(a.path().join("stocks")).unwrap().count(), 6);
    }
}
