//! File formats, experiment pipeline and sweeps on top of `wpfusion-core`.

pub mod config;
pub mod error;
pub mod georef;
pub mod io;
pub mod pipeline;
pub mod sweep;

pub use error::{AppError, Result};
