//! Toolkit for building synthetic parallel-code instruction datasets and
//! scoring code models on compile-run-test benchmarks with pass@k.

pub mod cli;
pub mod clock;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod fixtures;
pub mod gateway;
pub mod ids;
pub mod jsonl;
pub mod mask;
pub mod prompt;
pub mod report;
