//! Std companion to `pulselab-core`: configuration, artifacts, campaigns and the CLI.

pub mod acceptance;
pub mod bench;
pub mod cli;
pub mod config;
pub mod io;
pub mod manifest;
pub mod properties;

pub use bench::{Bench, Reference};
pub use config::Config;
