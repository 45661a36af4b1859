//! Experiment harness for the `nestlat` library: configuration, parallel
//! seeded runs, CSV and plot-data output.

pub mod cli;
pub mod config;
pub mod report;
pub mod run;
pub mod textio;
