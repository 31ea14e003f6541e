//! Typed result tables and their CSV and JSON encodings.
//!
//! Both encodings carry the same information: the config echo, the column
//! schema, one row per sample in sample order, and the aggregate, theory and
//! check sections. Floats are written with 17 significant digits and dyadic
//! rationals as `a/2^k`, so a parsed report reproduces every cell exactly.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

use super::config::ExperimentConfig;

pub const SCHEMA: &str = "dtq-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Int,
    Float,
    Dyadic,
    Text,
}

impl ColumnKind {
    fn name(self) -> &'static str {
        match self {
            ColumnKind::Int => "int",
            ColumnKind::Float => "float",
            ColumnKind::Dyadic => "dyadic",
            ColumnKind::Text => "text",
        }
    }

    fn parse(s: &str) -> Result<ColumnKind> {
        match s {
            "int" => Ok(ColumnKind::Int),
            "float" => Ok(ColumnKind::Float),
            "dyadic" => Ok(ColumnKind::Dyadic),
            "text" => Ok(ColumnKind::Text),
            _ => Err(bad(format!("unknown column kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Dyadic(Dyadic),
    Text(String),
}

impl Cell {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Cell::Int(_) => ColumnKind::Int,
            Cell::Float(_) => ColumnKind::Float,
            Cell::Dyadic(_) => ColumnKind::Dyadic,
            Cell::Text(_) => ColumnKind::Text,
        }
    }

    fn parse(kind: ColumnKind, s: &str) -> Result<Cell> {
        let cell = match kind {
            ColumnKind::Int => Cell::Int(s.parse().map_err(|_| bad(format!("bad int {s:?}")))?),
            ColumnKind::Float => Cell::Float(parse_float(s)?),
            ColumnKind::Dyadic => Cell::Dyadic(s.parse()?),
            ColumnKind::Text => Cell::Text(s.to_string()),
        };
        Ok(cell)
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            other => Value::String(other.to_string()),
        }
    }

    fn from_json(kind: ColumnKind, v: &Value) -> Result<Cell> {
        match (kind, v) {
            (ColumnKind::Int, Value::Number(n)) => n
                .as_i64()
                .map(Cell::Int)
                .ok_or_else(|| bad(format!("bad int {n}"))),
            (ColumnKind::Float, Value::Number(n)) => n
                .as_f64()
                .map(Cell::Float)
                .ok_or_else(|| bad(format!("bad float {n}"))),
            (_, Value::String(s)) => Cell::parse(kind, s),
            _ => Err(bad(format!("cell {v} does not fit a {} column", kind.name()))),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&fmt_float(*v)),
            Cell::Dyadic(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse().map_err(|_| bad(format!("bad float {s:?}")))
}

fn bad(message: String) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message,
    }
}

/// Rows of typed cells under a fixed column schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, ColumnKind)]) -> Table {
        Table {
            columns: columns
                .iter()
                .map(|&(name, kind)| Column {
                    name: name.to_string(),
                    kind,
                })
                .collect(),
            rows: Vec::new(),
        }
    }

    /// Panics if the row does not match the schema; rows are built by the
    /// harness itself, so a mismatch is a bug.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        for (cell, col) in row.iter().zip(&self.columns) {
            assert_eq!(cell.kind(), col.kind, "column {}", col.name);
        }
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn index(&self, name: &str, kind: ColumnKind) -> Result<usize> {
        let i = self
            .columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| bad(format!("missing column {name:?}")))?;
        if self.columns[i].kind != kind {
            return Err(bad(format!("column {name:?} is not {}", kind.name())));
        }
        Ok(i)
    }

    pub fn ints(&self, name: &str) -> Result<Vec<i64>> {
        let i = self.index(name, ColumnKind::Int)?;
        Ok(self.rows.iter().map(|r| match r[i] {
            Cell::Int(v) => v,
            _ => unreachable!(),
        }).collect())
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index(name, ColumnKind::Float)?;
        Ok(self.rows.iter().map(|r| match r[i] {
            Cell::Float(v) => v,
            _ => unreachable!(),
        }).collect())
    }

    pub fn dyadics(&self, name: &str) -> Result<Vec<Dyadic>> {
        let i = self.index(name, ColumnKind::Dyadic)?;
        Ok(self.rows.iter().map(|r| match &r[i] {
            Cell::Dyadic(v) => v.clone(),
            _ => unreachable!(),
        }).collect())
    }

    pub fn texts(&self, name: &str) -> Result<Vec<String>> {
        let i = self.index(name, ColumnKind::Text)?;
        Ok(self.rows.iter().map(|r| match &r[i] {
            Cell::Text(v) => v.clone(),
            _ => unreachable!(),
        }).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Derived sections of a report. They are a pure function of the config and
/// the table, which is what `verify` relies on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub aggregates: BTreeMap<String, String>,
    pub theory: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn aggregate(&mut self, key: &str, value: impl ToString) {
        self.aggregates.insert(key.to_string(), value.to_string());
    }

    pub fn theory(&mut self, key: &str, value: impl ToString) {
        self.theory.insert(key.to_string(), value.to_string());
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub config: ExperimentConfig,
    pub table: Table,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.summary.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .table
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
            .collect();
        let value = json!({
            "schema": SCHEMA,
            "config": self.config,
            "columns": self.table.columns,
            "rows": rows,
            "aggregates": self.summary.aggregates,
            "theory": self.summary.theory,
            "checks": self.summary.checks,
        });
        let mut out = serde_json::to_string_pretty(&value).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut meta = |line: String| {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        };
        meta(format!("schema: {SCHEMA}"));
        meta(format!(
            "config: {}",
            serde_json::to_string(&self.config).expect("config serializes")
        ));
        let cols: Vec<String> = self
            .table
            .columns
            .iter()
            .map(|c| format!("{}:{}", c.name, c.kind.name()))
            .collect();
        meta(format!("columns: {}", cols.join(",")));
        for (k, v) in &self.summary.aggregates {
            meta(format!("aggregate: {k}={v}"));
        }
        for (k, v) in &self.summary.theory {
            meta(format!("theory: {k}={v}"));
        }
        for c in &self.summary.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            meta(format!("check: {status} {}: {}", c.name, c.detail));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.table.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for row in &self.table.rows {
            w.write_record(row.iter().map(|c| c.to_string()))
                .expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory flush");
        out.push_str(std::str::from_utf8(&body).expect("utf-8 cells"));
        out
    }

    /// Parses either encoding, telling them apart by the first character.
    pub fn parse(text: &str) -> Result<Report> {
        if text.trim_start().starts_with('{') {
            Report::from_json(text)
        } else {
            Report::from_csv(text)
        }
    }

    pub fn from_json(text: &str) -> Result<Report> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| bad(format!("invalid report JSON: {e}")))?;
        check_schema(v.get("schema").and_then(Value::as_str))?;
        let config: ExperimentConfig = field(&v, "config")?;
        let columns: Vec<Column> = field(&v, "columns")?;
        let raw_rows: Vec<Vec<Value>> = field(&v, "rows")?;
        let mut rows = Vec::with_capacity(raw_rows.len());
        for raw in raw_rows {
            if raw.len() != columns.len() {
                return Err(bad(format!("row has {} cells, expected {}", raw.len(), columns.len())));
            }
            rows.push(
                raw.iter()
                    .zip(&columns)
                    .map(|(cell, col)| Cell::from_json(col.kind, cell))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Report {
            config,
            table: Table { columns, rows },
            summary: Summary {
                aggregates: field(&v, "aggregates")?,
                theory: field(&v, "theory")?,
                checks: field(&v, "checks")?,
            },
        })
    }

    pub fn from_csv(text: &str) -> Result<Report> {
        let mut schema = None;
        let mut config = None;
        let mut columns = None;
        let mut summary = Summary::default();
        let mut body = String::new();
        for line in text.lines() {
            let Some(meta) = line.strip_prefix("# ") else {
                body.push_str(line);
                body.push('\n');
                continue;
            };
            let (key, value) = meta
                .split_once(": ")
                .ok_or_else(|| bad(format!("bad metadata line {line:?}")))?;
            match key {
                "schema" => schema = Some(value.to_string()),
                "config" => {
                    config = Some(
                        serde_json::from_str::<ExperimentConfig>(value)
                            .map_err(|e| bad(format!("bad config: {e}")))?,
                    )
                }
                "columns" => columns = Some(parse_columns(value)?),
                "aggregate" | "theory" => {
                    let (k, v) = value
                        .split_once('=')
                        .ok_or_else(|| bad(format!("bad {key} line {line:?}")))?;
                    let map = if key == "aggregate" {
                        &mut summary.aggregates
                    } else {
                        &mut summary.theory
                    };
                    map.insert(k.to_string(), v.to_string());
                }
                "check" => {
                    let (status, rest) = value
                        .split_once(' ')
                        .ok_or_else(|| bad(format!("bad check line {line:?}")))?;
                    let (name, detail) = rest
                        .split_once(": ")
                        .ok_or_else(|| bad(format!("bad check line {line:?}")))?;
                    let passed = match status {
                        "PASS" => true,
                        "FAIL" => false,
                        _ => return Err(bad(format!("bad check status {status:?}"))),
                    };
                    summary.checks.push(Check::new(name, passed, detail));
                }
                _ => return Err(bad(format!("unknown metadata key {key:?}"))),
            }
        }
        check_schema(schema.as_deref())?;
        let config = config.ok_or_else(|| bad("missing config line".into()))?;
        let columns = columns.ok_or_else(|| bad("missing columns line".into()))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(body.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| bad(format!("bad CSV header: {e}")))?;
        if header.len() != columns.len()
            || header.iter().zip(&columns).any(|(h, c)| h != c.name)
        {
            return Err(bad("CSV header does not match the column schema".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| bad(format!("bad CSV row: {e}")))?;
            rows.push(
                record
                    .iter()
                    .zip(&columns)
                    .map(|(s, c)| Cell::parse(c.kind, s))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Report {
            config,
            table: Table { columns, rows },
            summary,
        })
    }
}

fn check_schema(found: Option<&str>) -> Result<()> {
    match found {
        Some(SCHEMA) => Ok(()),
        Some(other) => Err(bad(format!("unsupported report schema {other:?}"))),
        None => Err(bad("missing report schema".into())),
    }
}

fn field<T: serde::de::DeserializeOwned>(v: &Value, key: &str) -> Result<T> {
    let inner = v
        .get(key)
        .ok_or_else(|| bad(format!("missing field {key:?}")))?;
    serde_json::from_value(inner.clone()).map_err(|e| bad(format!("bad field {key:?}: {e}")))
}

fn parse_columns(s: &str) -> Result<Vec<Column>> {
    s.split(',')
        .map(|part| {
            let (name, kind) = part
                .split_once(':')
                .ok_or_else(|| bad(format!("bad column spec {part:?}")))?;
            Ok(Column {
                name: name.to_string(),
                kind: ColumnKind::parse(kind)?,
            })
        })
        .collect()
}
