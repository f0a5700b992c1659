//! File formats, experiment drivers and the `taurus` command line on top
//! of [`taurus_core`].

pub mod cli;
pub mod commands;
pub mod error;
pub mod files;
pub mod keyfile;
pub mod presets;

pub use error::{Error, Result};
pub use taurus_core as core;
