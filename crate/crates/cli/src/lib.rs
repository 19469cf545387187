//! Command-line front end for the sparse kernel PCA detector: dataset
//! ingestion, model persistence, and the fit/score/eval/sweep/trials/probe
//! commands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod data;
pub mod model_file;
pub mod output;
