//! IO, file formats, the benchmark engine and command implementations for
//! `isle-core` ensembles.

pub mod benchmark;
pub mod commands;
pub mod config;
pub mod container;
pub mod csv_io;
pub mod error;
pub mod parallel;
pub mod settings;
pub mod text;

pub use error::{CliError, Result};
