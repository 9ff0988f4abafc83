//! File formats, plots and the command line for the gridlander stack.
//!
//! Numerical work lives in `gridlander-core`; this crate adds checkpoints,
//! PPM images, CSV/JSON records, SVG plots, layered TOML configuration and
//! the `gridlander` binary.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod ppm;
pub mod records;
pub mod svg;

pub use error::{Error, Result};
