//! Construction and certification of measurement-device-independent
//! nonlinear entanglement witnesses.
//!
//! The crate covers the full pipeline: building a witness from a state with
//! a negative partial transpose, decomposing it over input-state bases,
//! simulating the four-party detection protocol, correcting certification
//! bounds for lossy or over-counting detectors, and probing robustness
//! under Kraus noise channels.

pub mod error;
pub mod io;
pub mod linalg;
pub mod loophole;
pub mod noise;
pub mod protocol;
pub mod random;
pub mod state;
pub mod witness;

pub use error::{Error, Result};
