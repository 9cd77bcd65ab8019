//! Experiment runner for entangled ergodic averages: config parsing and the
//! `run`, `decompose`, `probe`, `fixtures` and `weights` subcommands.

pub mod commands;
pub mod config;

pub use commands::{Overrides, Verdict};
