//! Time series ingestion and table emission.
//!
//! Input is a Yahoo-style daily CSV (`Date,Open,High,Low,Close,Adj Close,Volume`)
//! or any CSV with a date/index column and a numeric value column. Output tables
//! are CSV (with a leading `# meta: {...}` comment line) or JSON (an object of
//! named arrays plus a `meta` object). Floats are written in shortest
//! round-trip form, so reading a table back reproduces every value exactly.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Timestamp {
    Date(NaiveDate),
    /// Integer sample index, used for synthetic data.
    Index(i64),
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timestamp::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Timestamp::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Ordered, timestamped scalar samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    ticker: String,
    timestamps: Vec<Timestamp>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Validates N >= 2, finite values and strictly increasing timestamps.
    pub fn new(
        ticker: impl Into<String>,
        timestamps: Vec<Timestamp>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} timestamps for {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if values.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: values.len(),
                context: "time series",
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        for w in timestamps.windows(2) {
            match w[0].cmp(&w[1]) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => {
                    return Err(Error::DuplicateTimestamp(w[0].to_string()))
                }
                std::cmp::Ordering::Greater => {
                    return Err(Error::invalid(format!(
                        "timestamps not increasing: {} then {}",
                        w[0], w[1]
                    )))
                }
            }
        }
        Ok(Self {
            ticker: ticker.into(),
            timestamps,
            values,
        })
    }

    /// Series indexed 0..N.
    pub fn from_values(ticker: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let ts = (0..values.len() as i64).map(Timestamp::Index).collect();
        Self::new(ticker, ts, values)
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the price-series invariant (all values > 0).
    pub fn ensure_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(index) => Err(Error::NonPositive {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    pub fn to_table(&self, value_column: &str) -> Table {
        let dates = match self.timestamps.first() {
            Some(Timestamp::Index(_)) => Column::Int(
                self.timestamps
                    .iter()
                    .map(|t| match t {
                        Timestamp::Index(i) => *i,
                        Timestamp::Date(_) => unreachable!("mixed timestamp kinds"),
                    })
                    .collect(),
            ),
            _ => Column::Text(self.timestamps.iter().map(|t| t.to_string()).collect()),
        };
        let mut t = Table::new();
        t.push("Date", dates);
        t.push(value_column, Column::Float(self.values.clone()));
        t.meta
            .insert("ticker".into(), Value::from(self.ticker.clone()));
        t.meta.insert("N".into(), Value::from(self.len()));
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    /// Skip rows with a missing or non-positive value and count them.
    Drop,
    /// Fail on the first such row.
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestConfig {
    pub value_column: String,
    pub date_column: String,
    /// chrono format string; integer indices are accepted as a fallback.
    pub date_format: String,
    pub missing: MissingPolicy,
    /// Defaults to the file stem.
    pub ticker: Option<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            value_column: "Close".into(),
            date_column: "Date".into(),
            date_format: "%Y-%m-%d".into(),
            missing: MissingPolicy::Drop,
            ticker: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Ingested {
    pub series: TimeSeries,
    pub source_rows: usize,
    pub dropped: usize,
}

fn parse_timestamp(raw: &str, fmt: &str) -> Option<Timestamp> {
    let raw = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(raw, fmt) {
        return Some(Timestamp::Date(d));
    }
    raw.parse::<i64>().ok().map(Timestamp::Index)
}

fn parse_value(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("null") {
        return None;
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a CSV into a validated price [`TimeSeries`], sorted by date.
pub fn ingest_csv(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<Ingested> {
    let path = path.as_ref();
    if cfg.value_column.trim().is_empty() {
        return Err(Error::invalid("value column name is empty"));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = find(&cfg.date_column)?;
    let value_idx = find(&cfg.value_column)?;

    let mut rows: Vec<(Timestamp, f64)> = Vec::new();
    let mut source_rows = 0usize;
    let mut dropped = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        source_rows += 1;
        let row = i + 1;
        let raw_date = rec.get(date_idx).unwrap_or("");
        let ts = parse_timestamp(raw_date, &cfg.date_format).ok_or_else(|| Error::BadRow {
            row,
            message: format!("unparseable timestamp `{raw_date}`"),
        })?;
        match parse_value(rec.get(value_idx).unwrap_or("")).filter(|&v| v > 0.0) {
            Some(v) => rows.push((ts, v)),
            None => match cfg.missing {
                MissingPolicy::Drop => dropped += 1,
                MissingPolicy::Error => {
                    return Err(Error::BadRow {
                        row,
                        message: format!("missing or non-positive `{}`", cfg.value_column),
                    })
                }
            },
        }
    }
    if rows.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: rows.len(),
            context: "valid rows after ingestion",
        });
    }
    // stable sort keeps duplicate detection deterministic
    rows.sort_by_key(|r| r.0);
    let ticker = cfg.ticker.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let (timestamps, values): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let series = TimeSeries::new(ticker, timestamps, values)?;
    Ok(Ingested {
        series,
        source_rows,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Float(Vec<f64>),
    Int(Vec<i64>),
    Text(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Float(v) => v.len(),
            Column::Int(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn csv_cell(&self, i: usize) -> String {
        match self {
            Column::Float(v) => fmt_float(v[i]),
            Column::Int(v) => v[i].to_string(),
            Column::Text(v) => v[i].clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Column::Float(v) => Value::Array(
                v.iter()
                    .map(|&x| serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number))
                    .collect(),
            ),
            Column::Int(v) => Value::from(v.clone()),
            Column::Text(v) => Value::from(v.clone()),
        }
    }
}

/// Shortest round-trip float text. Always contains `.`, `e`, or is a
/// non-finite token, so it never reads back as an integer. NaN is written empty.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

/// Named columns of equal length plus free-form metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Column)>,
    pub meta: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, col: Column) -> &mut Self {
        self.columns.push((name.into(), col));
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.meta.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    fn validate(&self) -> Result<()> {
        let Some((_, first)) = self.columns.first() else {
            return Err(Error::EmptyTable);
        };
        let expected = first.len();
        for (name, col) in &self.columns {
            if col.len() != expected {
                return Err(Error::RaggedTable {
                    column: name.clone(),
                    len: col.len(),
                    expected,
                });
            }
        }
        Ok(())
    }
}

/// Writes `table` to `path` as CSV or JSON.
pub fn emit_table(table: &Table, path: impl AsRef<Path>, format: TableFormat) -> Result<()> {
    let path = path.as_ref();
    table.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        TableFormat::Csv => {
            if !table.meta.is_empty() {
                let meta = serde_json::to_string(&table.meta)?;
                writeln!(out, "# meta: {meta}").map_err(|e| Error::io(path, e))?;
            }
            let mut w = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::Csv {
                path: path.to_path_buf(),
                message: e.to_string(),
            };
            w.write_record(table.columns.iter().map(|(n, _)| n.as_str()))
                .map_err(csv_err)?;
            for i in 0..table.rows() {
                w.write_record(table.columns.iter().map(|(_, c)| c.csv_cell(i)))
                    .map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        TableFormat::Json => {
            let mut obj = Map::new();
            for (name, col) in &table.columns {
                if name == "meta" {
                    return Err(Error::invalid(
                        "column name `meta` is reserved in JSON output",
                    ));
                }
                obj.insert(name.clone(), col.to_json());
            }
            obj.insert("meta".into(), Value::Object(table.meta.clone()));
            serde_json::to_writer_pretty(&mut out, &Value::Object(obj))?;
            writeln!(out).map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes a JSON document (used for summaries that are not tables).
pub fn emit_json(value: &impl Serialize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CSV table written by [`emit_table`]. Column types are inferred:
/// all-integer columns become `Int`, numeric columns `Float` (empty cells are
/// NaN), anything else `Text`.
pub fn read_table_csv(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut meta = Map::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(json) = line.strip_prefix("# meta: ") {
            if let Value::Object(m) = serde_json::from_str(json)? {
                meta = m;
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        for (i, cell) in rec.iter().enumerate() {
            if i < raw.len() {
                raw[i].push(cell.to_string());
            }
        }
    }
    let columns = headers
        .into_iter()
        .zip(raw)
        .map(|(name, cells)| (name, infer_column(cells)))
        .collect();
    Ok(Table { columns, meta })
}

fn infer_column(cells: Vec<String>) -> Column {
    if let Ok(v) = cells
        .iter()
        .map(|c| c.parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
    {
        return Column::Int(v);
    }
    let floats: Option<Vec<f64>> = cells
        .iter()
        .map(|c| {
            if c.is_empty() {
                Some(f64::NAN)
            } else {
                c.parse::<f64>().ok()
            }
        })
        .collect();
    match floats {
        Some(v) => Column::Float(v),
        None => Column::Text(cells),
    }
}
