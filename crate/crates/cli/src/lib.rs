//! File formats and the experiment harness around [`dsvkernel`].
//!
//! Everything here is deterministic given a spec and seed; reports are plain
//! JSON and replay byte-for-byte.

pub mod boundary;
pub mod error;
pub mod experiment;
pub mod io;
pub mod model;
pub mod simulate;

pub use error::{CliError, Result};
