//! File formats, reports and the `parcomp` command line on top of
//! `parcomp-core`.

pub mod cli;
pub mod corpus_io;
mod error;
pub mod model_files;
pub mod pipeline;
pub mod reports;
pub mod scores_io;

pub use error::{Error, Result};
