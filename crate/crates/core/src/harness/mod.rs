//! Seeded, reproducible experiments.
//!
//! Sample `i` of a run draws from substream `i` of the configured seed, and
//! results are collected in sample order, so a report is byte-identical for
//! any worker count. A written report can be parsed back and checked with
//! [`verify`], which recomputes every aggregate from the rows.

mod config;
mod experiments;
mod report;

pub use config::{Experiment, ExperimentConfig, Format};
pub use experiments::{run, summarize, tightness_case, verify};
pub use report::{fmt_float, Cell, Check, Column, ColumnKind, Report, Summary, Table, SCHEMA};

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}
