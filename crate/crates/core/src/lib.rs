//! Forward and inverse fixed-angle scattering for `Δ²u + V(x, |u|) u = k⁴u`
//! in two and three dimensions.
//!
//! The crate solves the nonlinear Lippmann-Schwinger equation with the
//! outgoing biharmonic Green kernel, assembles far-field amplitude datasets,
//! applies the inverse fixed-angle Born approximation and measures the
//! Fourier-decay gain of the reconstruction error.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod farfield;
pub mod fft;
pub mod formats;
pub mod forward;
pub mod geometry;
pub mod inversion;
pub mod potential;
pub mod special;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
