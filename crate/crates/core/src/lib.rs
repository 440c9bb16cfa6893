//! Bilinear pseudo-differential operators on periodized grids.

pub mod battery;
pub mod closed_form;
pub mod error;
pub mod field;
pub mod fourier;
pub mod grid;
pub mod harness;
pub mod io;
pub mod quantization;
pub mod symbols;
pub mod timefreq;
pub mod weights;

pub use rustfft::num_complex::Complex64;

pub use error::{Error, ErrorClass, Result};
pub use field::{AxisRole, SampledField};
pub use fourier::{forward_ft, inverse_ft, shear, spectral_derivative, translate, Sheared};
pub use grid::{AxisSelection, AxisSpec, GridSpec};
