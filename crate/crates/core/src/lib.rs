//! Phasor-field non-line-of-sight reconstruction.
//!
//! Hidden scenes are recovered from time-resolved measurements on a relay
//! wall by backpropagating virtual wavefronts. Besides the plane-to-plane
//! Rayleigh-Sommerfeld path, the crate provides variants built on a scaled
//! FFT (frustum-shaped voxel grids) and on type-1/type-2 non-uniform FFTs
//! (scattered relay samples, arbitrary voxel lists, curved relay walls).

pub mod container;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod phasor;
pub mod pipeline;
pub mod reconstruct;
pub mod scene;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sign of the propagation phase `exp(s i (w/c) r)`.
///
/// Measurements are analysed with `exp(-s i w t)` and videos synthesised
/// with `exp(s i w t)`, so flipping this one constant flips the whole
/// convention consistently.
pub const PROPAGATION_SIGN: f64 = 1.0;
