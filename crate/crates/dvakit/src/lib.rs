//! File formats, reports and the `dvakit` command line around
//! [`dvakit_core`].
//!
//! - [`csv_io`]: reference and full-cell CSV parsing and writing.
//! - [`config`]: the JSON toolkit configuration.
//! - [`report`]: per-cell report documents in canonical JSON.
//! - [`pipeline`]: parse, fit and report a single file.
//! - [`cli`]: subcommands and exit codes (see [`error`]).

pub mod cli;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod json;
pub mod pipeline;
pub mod report;

pub use config::{LoadedConfig, ToolkitConfig};
pub use csv_io::{parse_full_cell, parse_reference};
pub use error::ToolError;
pub use report::Report;
