//! File formats, command-line front end and Monte Carlo driver for
//! [`replfdr_core`].

pub mod analyze;
pub mod cli;
pub mod error;
pub mod io;
pub mod oracle;
pub mod selftest;
pub mod simulate;

pub use error::{AppError, AppResult};
