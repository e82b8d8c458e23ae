//! Experiment harness for federated clustering: configuration, data IO,
//! grid execution, results aggregation and the CLI.

pub mod cli;
pub mod config;
pub mod dataio;
pub mod report;
pub mod results;
pub mod runner;
