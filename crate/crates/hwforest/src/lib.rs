//! File formats, configuration, reports and commands around `hwforest-core`.
//!
//! * [`idx`]: IDX image/label files, plain or gzip.
//! * [`csv_io`]: tabular CSV with label remapping and categorical encodings.
//! * [`model_file`]: versioned JSON model container.
//! * [`config`]: flat `key = value` run configuration with named presets.
//! * [`report`] and [`dumps`]: JSON run reports and diagnostic CSVs.
//! * [`run`]: the `train`, `eval`, `bench` and `stats` commands.

mod atomic;
pub mod config;
pub mod csv_io;
pub mod dumps;
mod error;
pub mod idx;
pub mod model_file;
pub mod report;
pub mod run;

pub use atomic::write_atomic;
pub use config::RunConfig;
pub use error::{Error, Result};
pub use hwforest_core as core;
