//! Simulation and analysis of a CW-pumped, polarization-entangled photon-pair
//! source in a Sagnac loop: the emitted two-photon state, gated detectors,
//! HOM and polarization-correlation measurements, CHSH tests, maximum
//! likelihood tomography and spectral brightness.

pub mod analysis;
pub mod defaults;
pub mod detection;
pub mod error;
pub mod expcli;
pub mod polarization;
pub mod qstate;
pub mod source;

pub use error::{Error, Result};
