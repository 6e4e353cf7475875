//! Raw dataset ingestion.
//!
//! A dataset is a directory of `.csv` files with one header row each. Files
//! are visited in lexicographic filename order and every data line becomes a
//! [`RawRow`] whose cells are projected onto the schema's expected column
//! order. Lines that cannot be split, or whose cell count disagrees with the
//! header, are counted as malformed rather than failing the read.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::cleaning::trim_field;

/// Which of the three source datasets a file belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Stocks,
    Tweets,
    Ecommerce,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 3] = [DatasetKind::Stocks, DatasetKind::Tweets, DatasetKind::Ecommerce];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Stocks => "stocks",
            DatasetKind::Tweets => "tweets",
            DatasetKind::Ecommerce => "ecommerce",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stocks" | "stock" => Ok(DatasetKind::Stocks),
            "tweets" | "tweet" => Ok(DatasetKind::Tweets),
            "ecommerce" | "ecomm" | "e-commerce" => Ok(DatasetKind::Ecommerce),
            other => Err(format!("unknown dataset kind '{other}'")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema has no columns")]
    Empty,
    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),
    #[error("required column '{0}' is not an expected column")]
    RequiredNotExpected(String),
}

/// Column layout of one raw dataset.
///
/// Column names are stored trimmed and lowercased; header matching is
/// case-insensitive and order-insensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaDescriptor {
    kind: DatasetKind,
    expected_columns: Vec<String>,
    required_columns: Vec<String>,
}

fn normalize_column(name: &str) -> String {
    trim_field(name).to_lowercase()
}

impl SchemaDescriptor {
    pub fn new<S: AsRef<str>>(
        kind: DatasetKind,
        expected_columns: &[S],
        required_columns: &[S],
    ) -> Result<Self, SchemaError> {
        let expected: Vec<String> = expected_columns.iter().map(|c| normalize_column(c.as_ref())).collect();
        if expected.is_empty() {
            return Err(SchemaError::Empty);
        }
        for (i, col) in expected.iter().enumerate() {
            if col.is_empty() {
                return Err(SchemaError::Empty);
            }
            if expected[..i].contains(col) {
                return Err(SchemaError::DuplicateColumn(col.clone()));
            }
        }
        let mut required = Vec::with_capacity(required_columns.len());
        for col in required_columns.iter().map(|c| normalize_column(c.as_ref())) {
            if !expected.contains(&col) {
                return Err(SchemaError::RequiredNotExpected(col));
            }
            if !required.contains(&col) {
                required.push(col);
            }
        }
        Ok(Self {
            kind,
            expected_columns: expected,
            required_columns: required,
        })
    }

    /// Raw layouts of the public sources each dataset kind is modelled on.
    pub fn default_for(kind: DatasetKind) -> Self {
        let (expected, required): (&[&str], &[&str]) = match kind {
            DatasetKind::Stocks => (
                &[
                    "Date",
                    "Open",
                    "High",
                    "Low",
                    "Close",
                    "Volume",
                    "Dividends",
                    "Stock Splits",
                ],
                &["Date", "Open", "Close", "Stock Splits"],
            ),
            DatasetKind::Tweets => (
                &[
                    "tweet_id",
                    "writer",
                    "post_date",
                    "body",
                    "comment_num",
                    "retweet_num",
                    "like_num",
                ],
                &["post_date", "body", "comment_num", "retweet_num", "like_num"],
            ),
            DatasetKind::Ecommerce => (
                &[
                    "event_time",
                    "event_type",
                    "product_id",
                    "category_id",
                    "category_code",
                    "brand",
                    "price",
                    "user_id",
                    "user_session",
                ],
                &[
                    "event_time",
                    "event_type",
                    "product_id",
                    "category_code",
                    "brand",
                    "price",
                ],
            ),
        };
        Self::new(kind, expected, required).expect("built-in schema is valid")
    }

    pub fn kind(&self) -> DatasetKind {
        self.kind
    }

    pub fn expected_columns(&self) -> &[String] {
        &self.expected_columns
    }

    pub fn required_columns(&self) -> &[String] {
        &self.required_columns
    }

    /// Stock rows carry the ticker (taken from the file name) as a synthetic
    /// leading cell.
    pub fn has_ticker_cell(&self) -> bool {
        self.kind == DatasetKind::Stocks
    }

    /// Width of a projected [`RawRow`] for this schema.
    pub fn row_width(&self) -> usize {
        self.expected_columns.len() + usize::from(self.has_ticker_cell())
    }

    /// Position of `column` inside a projected [`RawRow`].
    pub fn column_index(&self, column: &str) -> Option<usize> {
        let wanted = normalize_column(column);
        self.expected_columns
            .iter()
            .position(|c| *c == wanted)
            .map(|i| i + usize::from(self.has_ticker_cell()))
    }
}

/// One data line of a raw file, projected onto the schema column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    pub source_file: Arc<PathBuf>,
    /// 1-based line number in the source file; the header is line 1.
    pub line_number: usize,
    pub fields: Vec<String>,
}

impl RawRow {
    pub fn field(&self, index: usize) -> &str {
        self.fields.get(index).map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("unterminated quote in cell {cell}")]
    UnterminatedQuote { cell: usize },
}

/// Split one CSV line on commas outside double quotes.
///
/// A quote opens a quoted section only when it is the first non-whitespace
/// character of a cell. Inside a quoted section `""` stands for one quote.
/// Quote characters themselves are kept in the cell.
pub fn split_csv_line(line: &str) -> Result<Vec<String>, SplitError> {
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut chars = line.chars().peekable();

    while let Some(c) = chars.next() {
        if in_quotes {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                } else {
                    in_quotes = false;
                }
            }
            cur.push(c);
            continue;
        }
        match c {
            ',' => cells.push(std::mem::take(&mut cur)),
            '"' if cur.chars().all(char::is_whitespace) => {
                in_quotes = true;
                cur.push(c);
            }
            _ => cur.push(c),
        }
    }
    if in_quotes {
        return Err(SplitError::UnterminatedQuote { cell: cells.len() + 1 });
    }
    cells.push(cur);
    Ok(cells)
}

/// Inverse of [`split_csv_line`] for cells it produced: re-escapes the quoted
/// section of each cell and joins with commas.
pub fn join_csv_line<S: AsRef<str>>(cells: &[S]) -> String {
    let mut out = String::new();
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let cell = cell.as_ref();
        let body_start = cell
            .char_indices()
            .find(|(_, c)| !c.is_whitespace())
            .map(|(i, _)| i)
            .unwrap_or(cell.len());
        let (prefix, body) = cell.split_at(body_start);
        match body.rfind('"') {
            Some(last) if body.starts_with('"') && last > 0 => {
                out.push_str(prefix);
                out.push('"');
                out.push_str(&body[1..last].replace('"', "\"\""));
                out.push('"');
                out.push_str(&body[last + 1..]);
            }
            _ => out.push_str(cell),
        }
    }
    out
}

/// Quote a clean value for CSV output when it would not survive splitting.
pub fn quote_value(value: &str) -> String {
    let needs_quotes = value.contains(',')
        || value.contains('"')
        || value.starts_with(char::is_whitespace)
        || value.ends_with(char::is_whitespace);
    if needs_quotes {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MalformedReason {
    BlankLine,
    UnterminatedQuote,
    FieldCount,
}

impl MalformedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            MalformedReason::BlankLine => "blank_line",
            MalformedReason::UnterminatedQuote => "unterminated_quote",
            MalformedReason::FieldCount => "field_count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    MissingHeader { column: String },
    EmptyFile,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::MissingHeader { column } => write!(f, "missing header column '{column}'"),
            SkipReason::EmptyFile => f.write_str("empty file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub file: PathBuf,
    pub reason: SkipReason,
}

/// Bookkeeping for one dataset read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub files_read: Vec<PathBuf>,
    pub skipped_files: Vec<SkippedFile>,
    /// Non-header lines across accepted files.
    pub lines_seen: u64,
    pub rows_emitted: u64,
    pub malformed: BTreeMap<MalformedReason, u64>,
}

impl IngestReport {
    pub fn malformed_total(&self) -> u64 {
        self.malformed.values().sum()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input directory {0} does not exist or is not a directory")]
    NotADirectory(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Ticker symbol for a per-ticker stock file: the uppercased file stem.
pub fn ticker_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_uppercase())
        .unwrap_or_default()
}

/// `.csv` files directly inside `dir`, in lexicographic filename order.
pub fn list_csv_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    if !dir.is_dir() {
        return Err(IngestError::NotADirectory(dir.to_path_buf()));
    }
    let io_err = |source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_csv = path.extension().map(|e| e.eq_ignore_ascii_case("csv")).unwrap_or(false);
        if is_csv && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

struct FileCursor {
    path: Arc<PathBuf>,
    ticker: Option<String>,
    content: String,
    pos: usize,
    line_number: usize,
    header_width: usize,
    /// For each expected column, its index in the file's header.
    projection: Vec<Option<usize>>,
}

/// Lazily reads a dataset directory, one file in memory at a time.
pub struct DatasetReader {
    schema: SchemaDescriptor,
    files: std::vec::IntoIter<PathBuf>,
    current: Option<FileCursor>,
    report: IngestReport,
}

impl DatasetReader {
    pub fn open(dir: &Path, schema: SchemaDescriptor) -> Result<Self, IngestError> {
        let files = list_csv_files(dir)?;
        Ok(Self {
            schema,
            files: files.into_iter(),
            current: None,
            report: IngestReport::default(),
        })
    }

    pub fn schema(&self) -> &SchemaDescriptor {
        &self.schema
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }

    fn open_file(&mut self, path: PathBuf) -> Result<Option<FileCursor>, IngestError> {
        let bytes = fs::read(&path).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        let content = String::from_utf8_lossy(&bytes).into_owned();

        let header_end = content.find('\n').unwrap_or(content.len());
        let header_line = content[..header_end].trim_end_matches('\r');
        if header_line.trim().is_empty() {
            self.report.skipped_files.push(SkippedFile {
                file: path,
                reason: SkipReason::EmptyFile,
            });
            return Ok(None);
        }
        let header: Vec<String> = match split_csv_line(header_line) {
            Ok(cells) => cells.iter().map(|c| normalize_column(c)).collect(),
            Err(_) => {
                let column = self.schema.required_columns.first().cloned().unwrap_or_default();
                self.report.skipped_files.push(SkippedFile {
                    file: path,
                    reason: SkipReason::MissingHeader { column },
                });
                return Ok(None);
            }
        };
        if let Some(missing) = self.schema.required_columns.iter().find(|col| !header.contains(col)) {
            self.report.skipped_files.push(SkippedFile {
                file: path,
                reason: SkipReason::MissingHeader {
                    column: missing.clone(),
                },
            });
            return Ok(None);
        }

        let projection = self
            .schema
            .expected_columns
            .iter()
            .map(|col| header.iter().position(|h| h == col))
            .collect();
        let ticker = self.schema.has_ticker_cell().then(|| ticker_from_path(&path));
        self.report.files_read.push(path.clone());
        Ok(Some(FileCursor {
            path: Arc::new(path),
            ticker,
            pos: (header_end + 1).min(content.len()),
            content,
            line_number: 1,
            header_width: header.len(),
            projection,
        }))
    }

    fn count_malformed(&mut self, reason: MalformedReason) {
        *self.report.malformed.entry(reason).or_insert(0) += 1;
    }
}

impl Iterator for DatasetReader {
    type Item = Result<RawRow, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let Some(cursor) = self.current.as_mut() else {
                let path = self.files.next()?;
                match self.open_file(path) {
                    Ok(cursor) => self.current = cursor,
                    Err(e) => return Some(Err(e)),
                }
                continue;
            };
            if cursor.pos >= cursor.content.len() {
                self.current = None;
                continue;
            }

            let rest = &cursor.content[cursor.pos..];
            let line_len = rest.find('\n').unwrap_or(rest.len());
            let line = rest[..line_len].trim_end_matches('\r');
            cursor.pos += line_len + 1;
            cursor.line_number += 1;
            self.report.lines_seen += 1;

            if line.trim().is_empty() {
                self.count_malformed(MalformedReason::BlankLine);
                continue;
            }
            let cells = match split_csv_line(line) {
                Ok(cells) => cells,
                Err(SplitError::UnterminatedQuote { .. }) => {
                    self.count_malformed(MalformedReason::UnterminatedQuote);
                    continue;
                }
            };
            if cells.len() != cursor.header_width {
                self.count_malformed(MalformedReason::FieldCount);
                continue;
            }

            let mut fields = Vec::with_capacity(self.schema.row_width());
            if let Some(ticker) = &cursor.ticker {
                fields.push(ticker.clone());
            }
            fields.extend(
                cursor
                    .projection
                    .iter()
                    .map(|idx| idx.map(|i| cells[i].clone()).unwrap_or_default()),
            );
            self.report.rows_emitted += 1;
            return Some(Ok(RawRow {
                source_file: Arc::clone(&cursor.path),
                line_number: cursor.line_number,
                fields,
            }));
        }
    }
}

/// Fully materialized read of a dataset directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<RawRow>,
    pub report: IngestReport,
}

pub fn read_dataset(dir: &Path, schema: &SchemaDescriptor) -> Result<Dataset, IngestError> {
    let mut reader = DatasetReader::open(dir, schema.clone())?;
    let mut rows = Vec::new();
    for row in reader.by_ref() {
        rows.push(row?);
    }
    Ok(Dataset {
        rows,
        report: reader.into_report(),
    })
}
