//! Experiment harness for the market regulation simulator: config files,
//! multi-seed parameter sweeps, table/trace emission, and the
//! stylized-facts validation run.

pub mod config;
pub mod harness;
pub mod output;
pub mod validate;

pub use config::ConfigValues;
pub use harness::{AggregateCell, SweepGrid, SweepSpec};
pub use validate::{validate_stylized_facts, StylizedFactsReport};
