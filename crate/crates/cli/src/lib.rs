//! Library half of the runner so integration tests can exercise config
//! parsing, scenario dispatch, and rendering without spawning the binary.

pub mod config;
pub mod emit;
pub mod error;
pub mod scenarios;
