//! Argument parsing, config-file merging and command dispatch for the
//! `crosstrend` binary.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crosstrend_core::analytics::{AnalysisError, LagMode};
use crosstrend_core::cleaning::StopwordSet;
use crosstrend_core::engine::{EngineError, PartitionMode};
use crosstrend_core::generate::{self, GenerateError, GeneratorConfig, Planted};
use crosstrend_core::ingestion::{DatasetKind, IngestError};
use crosstrend_core::pipeline::{self, CleanOptions, PipelineError};
use crosstrend_core::report::{self, AnalysisName, AnalysisParams, ReportError, ReportStatus};
use crosstrend_core::sentiment::PolarityLexicon;
use crosstrend_core::stock_metrics::{MoveThreshold, TopList};
use crosstrend_core::textlist;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "CROSSTREND_OUT";

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

const CONFIG_KEYS: [&str; 24] = [
    "stocks",
    "tweets",
    "ecommerce",
    "stopwords",
    "lexicon",
    "top_list",
    "threshold_pct",
    "max_lag",
    "lag_mode",
    "anomaly",
    "workers",
    "block_size",
    "out",
    "data",
    "seed",
    "start",
    "days",
    "rows_per_day",
    "tickers",
    "top_count",
    "planted",
    "noise",
    "weekend_factor",
    "junk_rate",
];

#[derive(Debug, Parser)]
#[command(
    name = "crosstrend",
    version,
    about = "Clean and cross-analyze stock, tweet and clickstream data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean one raw dataset directory into `<out>/<kind>.clean.csv`.
    Clean(CleanArgs),
    /// Run a named analysis over cleaned files and write a report.
    Analyze(AnalyzeArgs),
    /// Write a seeded synthetic raw corpus.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[arg(long)]
    pub kind: DatasetKind,
    /// Raw directory; falls back to the config key named after the kind.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fixed partition size instead of one chunk per worker.
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub name: AnalysisName,
    /// Directory holding cleaned files; defaults to the output directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub top_list: Option<PathBuf>,
    #[arg(long)]
    pub threshold_pct: Option<f64>,
    #[arg(long)]
    pub max_lag: Option<u32>,
    /// `calendar` (default) or `trading`.
    #[arg(long)]
    pub lag_mode: Option<LagMode>,
    /// Missing and inflated dates, as `YYYY-MM-DD/YYYY-MM-DD`.
    #[arg(long)]
    pub anomaly: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub start: Option<NaiveDate>,
    #[arg(long)]
    pub days: Option<u32>,
    #[arg(long)]
    pub rows_per_day: Option<u32>,
    #[arg(long)]
    pub tickers: Option<usize>,
    #[arg(long)]
    pub top_count: Option<usize>,
    #[arg(long)]
    pub planted: Option<Planted>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub weekend_factor: Option<f64>,
    #[arg(long)]
    pub junk_rate: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::Io { .. } => CliError::input(e.to_string()),
        _ => CliError::internal(e.to_string()),
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Engine(inner) => engine_error(inner),
            PipelineError::Ingest(IngestError::NotADirectory(_) | IngestError::Io { .. })
            | PipelineError::Schema(_)
            | PipelineError::OutputDir { .. } => CliError::input(e.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Engine(inner) => engine_error(inner),
            ReportError::Analysis(AnalysisError::NoValidLag { .. } | AnalysisError::Stat(_)) => Self {
                code: EXIT_DEGENERATE,
                message: e.to_string(),
            },
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<GenerateError> for CliError {
    fn from(e: GenerateError) -> Self {
        match e {
            GenerateError::Write(inner) => engine_error(inner),
            _ => CliError::input(e.to_string()),
        }
    }
}

/// Flat `key = value` settings; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    /// Directory relative paths in the file resolve against.
    base: PathBuf,
}

impl ConfigFile {
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for line in textlist::lines(text) {
            let (key, value) = line
                .content
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("config line {}: expected key = value", line.number)))?;
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::input(format!(
                    "config line {}: unknown key '{key}'",
                    line.number
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self {
            values,
            base: base.to_path_buf(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("failed to read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag when given, else the parsed config value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|e| CliError::input(format!("config key '{key}': {e}")))
            })
            .transpose()
    }

    pub fn pick_path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.get(key).map(|p| self.base.join(p)))
    }
}

/// Output directory: flag, then config, then the environment, then `out`.
pub fn resolve_out(flag: Option<PathBuf>, cfg: &ConfigFile) -> PathBuf {
    cfg.pick_path(flag, "out")
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn parse_anomaly(raw: &str) -> Result<(NaiveDate, NaiveDate), CliError> {
    let (a, b) = raw
        .split_once(['/', ','])
        .ok_or_else(|| CliError::input(format!("anomaly '{raw}' must look like YYYY-MM-DD/YYYY-MM-DD")))?;
    let date = |s: &str| {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
            .map_err(|_| CliError::input(format!("anomaly date '{}' is not YYYY-MM-DD", s.trim())))
    };
    Ok((date(a)?, date(b)?))
}

/// Run a parsed command, returning the process exit code on success.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Clean(args) => cmd_clean(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Generate(args) => cmd_generate(args),
    }
}

pub fn cmd_clean(args: CleanArgs) -> Result<u8, CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let kind = args.kind;
    let input = cfg
        .pick_path(args.input, kind.as_str())
        .ok_or_else(|| CliError::input(format!("no input directory for {kind}; pass --input")))?;
    let out = resolve_out(args.out, &cfg);
    let workers = cfg
        .pick(args.workers, "workers")?
        .unwrap_or_else(pipeline::default_workers);
    if workers == 0 {
        return Err(CliError::input("workers must be at least 1"));
    }
    let partition_mode = match cfg.pick(args.block_size, "block_size")? {
        Some(0) => return Err(CliError::input("block_size must be at least 1")),
        Some(block_size) => PartitionMode::Blocks { block_size },
        None => PartitionMode::Chunked,
    };
    let stopwords = cfg
        .pick_path(args.stopwords, "stopwords")
        .map(|p| StopwordSet::from_file(&p))
        .transpose()
        .map_err(|e| CliError::input(e.to_string()))?;
    let lexicon = cfg
        .pick_path(args.lexicon, "lexicon")
        .map(|p| PolarityLexicon::from_file(&p))
        .transpose()
        .map_err(|e| CliError::input(e.to_string()))?;
    let opts = CleanOptions {
        workers,
        partition_mode,
        schema: None,
        stopwords,
        lexicon,
    };

    let summary = pipeline::run_clean(kind, &input, &out, &opts)?;
    let stats = &summary.stats;
    println!(
        "{kind}: {} rows in, {} cleaned, {} dropped, {} malformed lines",
        stats.input_rows,
        stats.output_rows,
        stats.dropped_total(),
        summary.ingest.malformed_total()
    );
    for (reason, n) in &stats.dropped {
        println!("  drop {reason}: {n}");
    }
    for skipped in &summary.ingest.skipped_files {
        println!("  skipped {}: {}", skipped.file.display(), skipped.reason);
    }
    println!("wrote {}", summary.output.display());
    println!("wrote {}", summary.meta.display());
    Ok(EXIT_OK)
}

pub fn cmd_analyze(args: AnalyzeArgs) -> Result<u8, CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let out = resolve_out(args.out, &cfg);
    let data = cfg.pick_path(args.data, "data").unwrap_or_else(|| out.clone());

    let threshold_pct = cfg
        .pick(args.threshold_pct, "threshold_pct")?
        .unwrap_or(crosstrend_core::stock_metrics::DEFAULT_THRESHOLD_PCT);
    let threshold = MoveThreshold::new(threshold_pct).map_err(|e| CliError::input(e.to_string()))?;
    let top_path = cfg.pick_path(args.top_list, "top_list");
    let top_list = top_path
        .as_deref()
        .map(TopList::from_file)
        .transpose()
        .map_err(|e| CliError::input(e.to_string()))?;
    let anomaly = cfg
        .pick(args.anomaly, "anomaly")?
        .map(|raw: String| parse_anomaly(&raw))
        .transpose()?;
    let params = AnalysisParams {
        threshold,
        max_lag: cfg
            .pick(args.max_lag, "max_lag")?
            .unwrap_or(crosstrend_core::analytics::DEFAULT_MAX_LAG),
        lag_mode: cfg.pick(args.lag_mode, "lag_mode")?.unwrap_or_default(),
        anomaly,
        top_list,
        top_list_name: top_path
            .as_deref()
            .and_then(Path::file_name)
            .map(|n| n.to_string_lossy().into_owned()),
    };

    let report = report::run_analysis(args.name, &data, &params)?;
    let written = report::write_report(&report, &out)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    match report.status {
        ReportStatus::Ok => {
            println!("{}: ok", report.analysis);
            Ok(EXIT_OK)
        }
        ReportStatus::Degenerate => {
            for reason in &report.reasons {
                eprintln!("{}: degenerate: {reason}", report.analysis);
            }
            Ok(EXIT_DEGENERATE)
        }
    }
}

pub fn cmd_generate(args: GenerateArgs) -> Result<u8, CliError> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let out = resolve_out(args.out, &cfg);
    let d = GeneratorConfig::default();
    let gen_cfg = GeneratorConfig {
        seed: cfg.pick(args.seed, "seed")?.unwrap_or(d.seed),
        start: cfg.pick(args.start, "start")?.unwrap_or(d.start),
        days: cfg.pick(args.days, "days")?.unwrap_or(d.days),
        rows_per_day: cfg.pick(args.rows_per_day, "rows_per_day")?.unwrap_or(d.rows_per_day),
        tickers: cfg.pick(args.tickers, "tickers")?.unwrap_or(d.tickers),
        top_count: cfg.pick(args.top_count, "top_count")?.unwrap_or(d.top_count),
        planted: cfg.pick(args.planted, "planted")?.unwrap_or(d.planted),
        noise: cfg.pick(args.noise, "noise")?.unwrap_or(d.noise),
        weekend_factor: cfg
            .pick(args.weekend_factor, "weekend_factor")?
            .unwrap_or(d.weekend_factor),
        junk_rate: cfg.pick(args.junk_rate, "junk_rate")?.unwrap_or(d.junk_rate),
    };
    let summary = generate::generate(&gen_cfg, &out)?;
    println!(
        "generated {} stock rows, {} tweets, {} events ({} junk rows) in {}",
        summary.stock_rows,
        summary.tweet_rows,
        summary.event_rows,
        summary.junk_rows,
        out.display()
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = ConfigFile::parse("# run\nmax-lag = 3\nstocks = raw/stocks\n", Path::new("/base")).unwrap();
        assert_eq!(cfg.pick::<u32>(None, "max_lag").unwrap(), Some(3));
        assert_eq!(cfg.pick(Some(1u32), "max_lag").unwrap(), Some(1));
        assert_eq!(cfg.pick_path(None, "stocks"), Some(PathBuf::from("/base/raw/stocks")));
        assert!(ConfigFile::parse("bogus = 1", Path::new("")).is_err());
        assert!(ConfigFile::parse("no equals", Path::new("")).is_err());
        let bad = ConfigFile::parse("max_lag = x", Path::new("")).unwrap();
        assert_eq!(bad.pick::<u32>(None, "max_lag").unwrap_err().code, EXIT_INPUT);
    }

    #[test]
    fn anomaly_parsing() {
        let (a, b) = parse_anomaly("2019-11-18/2019-11-19").unwrap();
        assert_eq!(a.to_string(), "2019-11-18");
        assert_eq!(b.to_string(), "2019-11-19");
        assert!(parse_anomaly("2019-11-18,2019-11-19").is_ok());
        assert!(parse_anomaly("2019-11-18").is_err());
    }

    #[test]
    fn clap_definition_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
