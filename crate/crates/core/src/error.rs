//! Error type shared across the crate.
//!
//! Variants are grouped by how the CLI maps them onto exit codes:
//! configuration and precondition failures, numerical-domain failures
//! (singular symbol denominators, out-of-range Bessel arguments, degenerate
//! fits), trajectory blow-up, and I/O.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or argument. The message lists every offending
    /// field with its constraint, one per line.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its documented domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The dispersive-symbol denominator vanished at a concrete wavenumber.
    #[error("singular symbol denominator at (xi = {xi}, eta = {eta})")]
    SingularSymbol { xi: f64, eta: i64 },

    /// Bessel evaluation outside the supported (order, argument) box.
    #[error("bessel argument out of range: I_{n}({x}) exceeds |n| <= {max_n} or |x| <= {max_x}")]
    BesselRange { n: i64, x: f64, max_n: i64, max_x: f64 },

    /// A regression was requested on data that cannot support it.
    #[error("fit domain error: {0}")]
    FitDomain(String),

    /// Too few usable spectral shells above the coefficient floor.
    #[error("insufficient resolution: {found} shells above floor, {needed} required")]
    InsufficientResolution { found: usize, needed: usize },

    /// A coefficient exceeded the blow-up threshold during time stepping.
    #[error("blow-up at t = {t} (step {step}): |u_hat| = {magnitude:.3e} at mode ({}, {})", mode[0], mode[1])]
    BlowUp {
        t: f64,
        step: u64,
        mode: [i64; 2],
        magnitude: f64,
    },

    /// Malformed checkpoint or report file.
    #[error("file format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
