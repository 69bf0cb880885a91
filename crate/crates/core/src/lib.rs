//! Periodic pseudo-spectral solver for dissipative-dispersive evolution
//! equations of Kuramoto-Sivashinsky type, with diagnostics that measure the
//! analyticity band of attractor solutions from the decay of their Fourier
//! coefficients.
//!
//! The library is organized around:
//! * [`grid`] and [`field`]: truncated Fourier representation of real
//!   periodic fields in one and two dimensions, with the l1 wavenumber norm
//!   used by all weights and shells;
//! * [`symbols`]: the linear-operator symbol families that define the
//!   equations, plus dissipation-bound certification;
//! * [`bessel`]: modified Bessel functions of integer order, needed by the
//!   film-flow symbol family;
//! * [`nonlinear`]: the dealiased quadratic term and its direct-summation
//!   oracles;
//! * [`integrator`]: fourth-order exponential time differencing;
//! * [`diagnostics`]: growth-constant fits, band estimates, and the
//!   mode-wise bootstrap inequality check;
//! * [`lemmas`]: numerical verification of the summation bounds and decay
//!   estimates the band diagnostics rest on.

pub mod bessel;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod lemmas;
pub mod nonlinear;
pub mod symbols;

pub use error::{Error, Result};
