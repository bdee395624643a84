//! File formats, command-line front end and synthetic corpora around
//! `prominence-core`.

pub mod cli;
pub mod error;
pub mod formats;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod pixels;
pub mod report;
pub mod synthetic;

pub use error::{AppError, Result};
