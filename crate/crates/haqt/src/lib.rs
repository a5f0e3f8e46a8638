//! File formats, the parallel benchmark runner and the `haqt` command line
//! on top of [`haqt_core`].

pub mod cli;
pub mod config;
pub mod counts;
pub mod error;
pub mod formats;
pub mod report;
pub mod runner;

pub use error::AppError;
