//! File formats, run configuration and the command-line driver for
//! `gesc-core`.

pub mod bundle;
pub mod checkpoint;
pub mod citation;
pub mod cli;
pub mod error;
pub mod exec;
pub mod report;
pub mod runconfig;
pub mod suites;

pub use bundle::{load_bundle, save_bundle, Manifest};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use citation::{load_content_cites, CitationReport};
pub use error::{IoError, IoResult};
pub use runconfig::{load_dataset, DatasetSource, RunConfig};
