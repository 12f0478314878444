//! Simulation and exhaustive verification of complete hyperentangled
//! Bell-state and GHZ-state analysis for photons entangled in polarization
//! and spatial mode.
//!
//! Spatial-mode information is read by cross-Kerr parity probes that leave
//! the photons and their spatial entanglement intact; single-photon
//! Bell-state measurements then reveal the polarization state with the help
//! of the known spatial state.

pub mod circuits;
pub mod cli;
pub mod decoder;
pub mod elements;
pub mod error;
pub mod hilbert;
pub mod oracle;
pub mod tables;

pub use error::{Error, Result};
