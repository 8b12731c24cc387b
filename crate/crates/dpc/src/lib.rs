//! File formats, the parallel study runner and the command implementations
//! behind the `dpc` binary.

pub mod cli;
pub mod csvio;
pub mod error;
pub mod model_file;
pub mod study;

pub use error::{CliError, ExitStatus};
