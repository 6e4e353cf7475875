//! Local map-reduce executor: contiguous partitions, scoped worker threads,
//! a canonical (key, value) sort, and atomic output files.

use std::any::Any;
use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PartitionMode {
    /// One contiguous chunk per worker, sizes differing by at most one.
    #[default]
    Chunked,
    /// Fixed-size contiguous blocks; the last block may be short.
    Blocks { block_size: usize },
}

/// A contiguous slice of the job input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition<'a, T> {
    pub id: usize,
    pub rows: &'a [T],
}

/// Split `rows` into non-empty contiguous partitions with ids `0..n`.
/// Concatenating them in id order reproduces `rows`.
pub fn plan_partitions<T>(rows: &[T], worker_count: usize, mode: PartitionMode) -> Vec<Partition<'_, T>> {
    assert!(worker_count >= 1, "worker_count must be at least 1");
    if rows.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    match mode {
        PartitionMode::Chunked => {
            let parts = worker_count.min(rows.len());
            let base = rows.len() / parts;
            let extra = rows.len() % parts;
            let mut start = 0;
            for id in 0..parts {
                let len = base + usize::from(id < extra);
                out.push(Partition {
                    id,
                    rows: &rows[start..start + len],
                });
                start += len;
            }
        }
        PartitionMode::Blocks { block_size } => {
            assert!(block_size >= 1, "block_size must be at least 1");
            for (id, chunk) in rows.chunks(block_size).enumerate() {
                out.push(Partition { id, rows: chunk });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MapOutput {
    pub key: String,
    pub value: String,
}

impl MapOutput {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            value: value.into(),
        }
    }
}

/// Result of mapping one row.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapped {
    Emit(MapOutput),
    Dropped(&'static str),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("worker {worker} failed: {message}")]
    WorkerFailure { worker: usize, message: String },
    #[error("reducer failed on key '{key}': {message}")]
    ReducerFailure { key: String, message: String },
    #[error("mapper emitted an invalid record: {0}")]
    InvalidOutput(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JobStats {
    pub input_rows: u64,
    pub output_rows: u64,
    pub dropped: BTreeMap<String, u64>,
    pub workers: usize,
    pub partitions: usize,
    pub wall_time: Duration,
}

impl JobStats {
    pub fn dropped_total(&self) -> u64 {
        self.dropped.values().sum()
    }

    /// `key=value` lines that do not depend on worker count or timing.
    pub fn deterministic_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("input_rows={}", self.input_rows),
            format!("output_rows={}", self.output_rows),
            format!("dropped_total={}", self.dropped_total()),
        ];
        lines.extend(self.dropped.iter().map(|(reason, n)| format!("drop.{reason}={n}")));
        lines
    }

    /// All metadata lines, including worker count and wall time.
    pub fn meta_lines(&self) -> Vec<String> {
        let mut lines = self.deterministic_lines();
        lines.push(format!("workers={}", self.workers));
        lines.push(format!("partitions={}", self.partitions));
        lines.push(format!("wall_time_ms={}", self.wall_time.as_millis()));
        lines
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobOutput {
    /// Reducer output in canonical key order.
    pub lines: Vec<String>,
    pub stats: JobStats,
}

/// Reducer that writes each value unchanged.
pub fn pass_through(_key: &str, values: &[String]) -> Vec<String> {
    values.to_vec()
}

struct WorkerResult {
    pairs: Vec<MapOutput>,
    dropped: BTreeMap<&'static str, u64>,
    rows: u64,
}

fn panic_message(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic with non-string payload".to_string()
    }
}

fn validate(out: &MapOutput) -> Result<(), EngineError> {
    if out.key.is_empty() {
        return Err(EngineError::InvalidOutput("empty key".into()));
    }
    if out.key.contains('\n') || out.value.contains('\n') {
        return Err(EngineError::InvalidOutput(format!(
            "newline in record for key '{}'",
            out.key
        )));
    }
    Ok(())
}

/// Map every partition on up to `workers` threads, group by key, and reduce
/// in key order. Values reach the reducer sorted, so the output does not
/// depend on the worker count or partitioning.
pub fn run_map_reduce<T, M, R>(
    partitions: &[Partition<'_, T>],
    mapper: M,
    reducer: R,
    workers: usize,
) -> Result<JobOutput, EngineError>
where
    T: Sync,
    M: Fn(&T) -> Mapped + Sync,
    R: Fn(&str, &[String]) -> Vec<String>,
{
    let started = Instant::now();
    let workers = workers.max(1);
    let threads = workers.min(partitions.len()).max(1);
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let results: Mutex<Vec<WorkerResult>> = Mutex::new(Vec::new());

    let worker_body = |_worker: usize| {
        let mut local = WorkerResult {
            pairs: Vec::new(),
            dropped: BTreeMap::new(),
            rows: 0,
        };
        loop {
            if failed.load(Ordering::Relaxed) {
                break;
            }
            let i = next.fetch_add(1, Ordering::Relaxed);
            let Some(part) = partitions.get(i) else { break };
            for row in part.rows {
                local.rows += 1;
                match mapper(row) {
                    Mapped::Emit(out) => local.pairs.push(out),
                    Mapped::Dropped(reason) => *local.dropped.entry(reason).or_insert(0) += 1,
                }
            }
        }
        results.lock().unwrap_or_else(|e| e.into_inner()).push(local);
    };

    let mut failure: Option<EngineError> = None;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let body = &worker_body;
                let failed = &failed;
                scope.spawn(move || {
                    let r = panic::catch_unwind(AssertUnwindSafe(|| body(w)));
                    if r.is_err() {
                        failed.store(true, Ordering::Relaxed);
                    }
                    r
                })
            })
            .collect();
        for (w, h) in handles.into_iter().enumerate() {
            let outcome = h.join().unwrap_or_else(Err);
            if let Err(payload) = outcome {
                failure.get_or_insert(EngineError::WorkerFailure {
                    worker: w,
                    message: panic_message(payload.as_ref()),
                });
            }
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }

    let mut input_rows = 0;
    let mut dropped: BTreeMap<String, u64> = BTreeMap::new();
    let mut pairs = Vec::new();
    for r in results.into_inner().unwrap_or_else(|e| e.into_inner()) {
        input_rows += r.rows;
        for (reason, n) in r.dropped {
            *dropped.entry(reason.to_string()).or_insert(0) += n;
        }
        pairs.extend(r.pairs);
    }
    for p in &pairs {
        validate(p)?;
    }
    pairs.sort_unstable();

    let mut lines = Vec::with_capacity(pairs.len());
    let mut iter = pairs.into_iter().peekable();
    let mut values = Vec::new();
    while let Some(first) = iter.next() {
        let key = first.key;
        values.clear();
        values.push(first.value);
        while let Some(next) = iter.next_if(|p| p.key == key) {
            values.push(next.value);
        }
        let reduced = panic::catch_unwind(AssertUnwindSafe(|| reducer(&key, &values))).map_err(|payload| {
            EngineError::ReducerFailure {
                key: key.clone(),
                message: panic_message(payload.as_ref()),
            }
        })?;
        for line in &reduced {
            if line.contains('\n') {
                return Err(EngineError::InvalidOutput(format!(
                    "reducer output for '{key}' contains a newline"
                )));
            }
        }
        lines.extend(reduced);
    }

    let stats = JobStats {
        input_rows,
        output_rows: lines.len() as u64,
        dropped,
        workers,
        partitions: partitions.len(),
        wall_time: started.elapsed(),
    };
    Ok(JobOutput { lines, stats })
}

/// Write `contents` to `path` through a sibling temporary file and a rename,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), EngineError> {
    let io_err = |source| EngineError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| io_err(io::Error::new(io::ErrorKind::InvalidInput, "path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);

    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

/// Newline-terminated lines, optionally preceded by a header.
pub fn render_lines(header: Option<&str>, lines: &[String]) -> String {
    let cap = lines.iter().map(|l| l.len() + 1).sum::<usize>() + header.map_or(0, |h| h.len() + 1);
    let mut out = String::with_capacity(cap);
    if let Some(h) = header {
        out.push_str(h);
        out.push('\n');
    }
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}
