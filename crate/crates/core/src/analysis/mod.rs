//! Estimators: fringe and HOM fits, CHSH, maximum-likelihood tomography and
//! spectral brightness.

pub mod brightness;
pub mod chsh;
pub mod fringe;
pub mod hom;
pub mod optimize;
pub mod tomography;

pub use brightness::{brightness_detected, brightness_inferred};
pub use chsh::{chsh, chsh_from_state, ChshResult};
pub use fringe::{fit_sinusoid, FringeFit};
pub use hom::{fit_triangle, HomFit};
pub use tomography::{mle_tomography, TomographyOptions, TomographyResult};
