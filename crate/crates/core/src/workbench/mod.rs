//! Experiment orchestration behind the `pbcq` command-line tool.

pub mod io;
pub mod pipeline;
pub mod config;
pub mod run;
pub mod report;
pub mod reproduce;
pub mod cli;
