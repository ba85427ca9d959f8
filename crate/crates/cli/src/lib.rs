//! Command pipelines and configuration for the `photoconv` binary.

pub mod commands;
pub mod config;
