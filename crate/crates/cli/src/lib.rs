//! Batch pipeline and HTTP front end for relcrowd campaigns.

pub mod error;
pub mod http;
pub mod pipeline;

pub use error::{CliError, ExitStatus};
