//! File formats, experiment drivers and the command-line front end for the
//! stable allocation simulator in `stabperc-core`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod parallel;
pub mod render;

pub use error::{Error, Result};
pub use stabperc_core as core;
