//! The cleaning job: raw directory → engine → `<kind>.clean.csv` plus a
//! `<kind>.meta` file of counters.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cleaning::{
    CleanEcommEvent, CleanRecord, CleanStockRecord, CleanTweetRecord, EcommCleaner, MissingColumn, StockCleaner,
    StopwordSet, TweetCleaner,
};
use crate::engine::{self, EngineError, JobOutput, JobStats, MapOutput, Mapped, PartitionMode};
use crate::ingestion::{read_dataset, DatasetKind, IngestError, IngestReport, RawRow, SchemaDescriptor};
use crate::sentiment::PolarityLexicon;

/// Meta keys that vary between runs of the same job.
pub const VOLATILE_META_KEYS: [&str; 3] = ["workers", "partitions", "wall_time_ms"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Schema(#[from] MissingColumn),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("failed to create output directory {path}: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct CleanOptions {
    pub workers: usize,
    pub partition_mode: PartitionMode,
    /// Raw layout; the kind's default when `None`.
    pub schema: Option<SchemaDescriptor>,
    pub stopwords: Option<StopwordSet>,
    pub lexicon: Option<PolarityLexicon>,
}

impl Default for CleanOptions {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            partition_mode: PartitionMode::Chunked,
            schema: None,
            stopwords: None,
            lexicon: None,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn clean_output_path(out_dir: &Path, kind: DatasetKind) -> PathBuf {
    out_dir.join(format!("{kind}.clean.csv"))
}

pub fn meta_path(out_dir: &Path, kind: DatasetKind) -> PathBuf {
    out_dir.join(format!("{kind}.meta"))
}

enum Cleaner<'a> {
    Stocks(StockCleaner),
    Tweets(TweetCleaner, &'a StopwordSet, &'a PolarityLexicon),
    Ecommerce(EcommCleaner),
}

fn emit<R: CleanRecord>(result: Result<R, crate::cleaning::DropReason>) -> Mapped {
    match result {
        Ok(rec) => Mapped::Emit(MapOutput::new(
            rec.date().format("%Y-%m-%d").to_string(),
            rec.to_csv_line(),
        )),
        Err(reason) => Mapped::Dropped(reason.as_str()),
    }
}

impl Cleaner<'_> {
    fn map(&self, row: &RawRow) -> Mapped {
        match self {
            Cleaner::Stocks(c) => emit::<CleanStockRecord>(c.clean(row)),
            Cleaner::Tweets(c, stop, lex) => emit::<CleanTweetRecord>(c.clean(row, stop, lex)),
            Cleaner::Ecommerce(c) => emit::<CleanEcommEvent>(c.clean(row)),
        }
    }
}

pub fn header_for(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::Stocks => CleanStockRecord::HEADER,
        DatasetKind::Tweets => CleanTweetRecord::HEADER,
        DatasetKind::Ecommerce => CleanEcommEvent::HEADER,
    }
}

/// Clean already-ingested rows. Output lines are ordered by date, then by
/// line text.
pub fn clean_rows(schema: &SchemaDescriptor, rows: &[RawRow], opts: &CleanOptions) -> Result<JobOutput, PipelineError> {
    let stop = opts.stopwords.as_ref().unwrap_or_else(|| StopwordSet::builtin());
    let lex = opts.lexicon.as_ref().unwrap_or_else(|| PolarityLexicon::builtin());
    let cleaner = match schema.kind() {
        DatasetKind::Stocks => Cleaner::Stocks(StockCleaner::new(schema)?),
        DatasetKind::Tweets => Cleaner::Tweets(TweetCleaner::new(schema)?, stop, lex),
        DatasetKind::Ecommerce => Cleaner::Ecommerce(EcommCleaner::new(schema)?),
    };
    let workers = opts.workers.max(1);
    let partitions = engine::plan_partitions(rows, workers, opts.partition_mode);
    Ok(engine::run_map_reduce(
        &partitions,
        |row| cleaner.map(row),
        engine::pass_through,
        workers,
    )?)
}

#[derive(Debug, Clone)]
pub struct CleanSummary {
    pub kind: DatasetKind,
    pub output: PathBuf,
    pub meta: PathBuf,
    pub stats: JobStats,
    pub ingest: IngestReport,
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Meta lines for a finished clean job.
pub fn render_meta(kind: DatasetKind, ingest: &IngestReport, stats: &JobStats) -> String {
    let mut lines = vec![
        format!("kind={kind}"),
        format!("ingest.files_read={}", ingest.files_read.len()),
        format!("ingest.files_skipped={}", ingest.skipped_files.len()),
    ];
    for skipped in &ingest.skipped_files {
        lines.push(format!(
            "ingest.skipped.{}={}",
            file_name(&skipped.file),
            skipped.reason
        ));
    }
    lines.push(format!("ingest.lines_seen={}", ingest.lines_seen));
    lines.push(format!("ingest.malformed_total={}", ingest.malformed_total()));
    for (reason, n) in &ingest.malformed {
        lines.push(format!("ingest.malformed.{}={n}", reason.as_str()));
    }
    lines.extend(stats.meta_lines());
    engine::render_lines(None, &lines)
}

/// Read `dir` as a raw `kind` dataset, clean it, and write the cleaned CSV
/// and meta file into `out_dir`.
pub fn run_clean(
    kind: DatasetKind,
    input_dir: &Path,
    out_dir: &Path,
    opts: &CleanOptions,
) -> Result<CleanSummary, PipelineError> {
    let schema = match &opts.schema {
        Some(s) => s.clone(),
        None => SchemaDescriptor::default_for(kind),
    };
    let dataset = read_dataset(input_dir, &schema)?;
    let job = clean_rows(&schema, &dataset.rows, opts)?;

    fs::create_dir_all(out_dir).map_err(|source| PipelineError::OutputDir {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let output = clean_output_path(out_dir, kind);
    let meta = meta_path(out_dir, kind);
    engine::write_atomic(
        &output,
        engine::render_lines(Some(header_for(kind)), &job.lines).as_bytes(),
    )?;
    engine::write_atomic(&meta, render_meta(kind, &dataset.report, &job.stats).as_bytes())?;

    Ok(CleanSummary {
        kind,
        output,
        meta,
        stats: job.stats,
        ingest: dataset.report,
    })
}

/// Parse `key=value` lines; later duplicates win.
pub fn parse_meta(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Meta entries that do not depend on worker count or timing.
pub fn stable_meta(meta: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    meta.iter()
        .filter(|(k, _)| !VOLATILE_META_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn clean_writes_output_and_meta() {
        let raw = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write(
            raw.path(),
            "aapl.csv",
            "Date,Open,High,Low,Close,Volume,Dividends,Stock Splits\n\
             2019-10-02,100,0,0,104,1,0,0\n\
             2019-10-01,100,0,0,106,1,0,0\n\
             2019-10-03,0,0,0,1,1,0,0\n\
             2019-10-04,,0,0,1,1,0,0\n\
             \n",
        );
        let opts = CleanOptions {
            workers: 2,
            ..CleanOptions::default()
        };
        let summary = run_clean(DatasetKind::Stocks, raw.path(), out.path(), &opts).unwrap();
        let text = fs::read_to_string(&summary.output).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CleanStockRecord::HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("AAPL,2019-10-01,"));
        assert!(lines[2].starts_with("AAPL,2019-10-02,"));

        let meta = parse_meta(&fs::read_to_string(&summary.meta).unwrap());
        assert_eq!(meta["input_rows"], "4");
        assert_eq!(meta["output_rows"], "2");
        assert_eq!(meta["drop.zero_open"], "1");
        assert_eq!(meta["drop.null_required_field"], "1");
        assert_eq!(meta["ingest.lines_seen"], "5");
        assert_eq!(meta["ingest.malformed.blank_line"], "1");
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let raw = tempfile::tempdir().unwrap();
        let mut body = String::from("post_date,body,comment_num,retweet_num,like_num\n");
        for i in 0..300 {
            let words = ["great gains", "terrible loss", "the market", "null", "bullish rally"];
            let likes = if i % 17 == 0 {
                "-1".to_string()
            } else {
                (i % 9).to_string()
            };
            body.push_str(&format!(
                "{},{},{},1,{likes}\n",
                1_572_566_400 + i * 3600,
                words[i % 5],
                i % 4
            ));
        }
        write(raw.path(), "tweets.csv", &body);
        let mut reference: Option<(String, BTreeMap<String, String>)> = None;
        for workers in [1, 3, 8] {
            let out = tempfile::tempdir().unwrap();
            let opts = CleanOptions {
                workers,
                partition_mode: PartitionMode::Blocks { block_size: 7 },
                ..CleanOptions::default()
            };
            let s = run_clean(DatasetKind::Tweets, raw.path(), out.path(), &opts).unwrap();
            let text = fs::read_to_string(&s.output).unwrap();
            let meta = stable_meta(&parse_meta(&fs::read_to_string(&s.meta).unwrap()));
            match &reference {
                None => reference = Some((text, meta)),
                Some((t, m)) => {
                    assert_eq!(&text, t);
                    assert_eq!(&meta, m);
                }
            }
        }
    }

    #[test]
    fn missing_input_dir_is_an_error() {
        let out = tempfile::tempdir().unwrap();
        let err = run_clean(
            DatasetKind::Ecommerce,
            &out.path().join("absent"),
            out.path(),
            &CleanOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::Ingest(IngestError::NotADirectory(_))));
        assert!(err.to_string().contains("absent"));
    }
}
