//! File formats, reports and pipeline commands on top of `bias-audit-core`.
//!
//! The core crate holds the metrics; this crate reads and writes the CSV,
//! JSONL, PNG and embedding files around them and drives the
//! `bias-audit` subcommands.

pub mod batch;
pub mod config;
pub mod embedding;
pub mod error;
pub mod masks;
pub mod pipeline;
pub mod png;
pub mod predictions;
pub mod report;
pub mod stub;
pub mod tables;

pub use error::{Error, Result};
