//! Uniform periodic grids in one and two dimensions and their retained
//! wavenumber sets.
//!
//! All dimensions share one period `L`; the base wavenumber is `q = 2 pi / L`.
//! A grid with `n` points per dimension retains integer wavenumbers
//! `-n/2 <= k_j <= n/2 - 1` in FFT storage order. The Nyquist row
//! (`k_j = -n/2`) is carried but pinned to zero by every constructor, since it
//! has no conjugate partner on the grid.
//!
//! Wavenumber magnitudes are measured everywhere with the l1 norm
//! `|k| = |k_1| + ... + |k_d|`. Diagnostics, seminorms and the dissipation
//! certificates all use the same norm so their constants are comparable.

use crate::error::{Error, Result};

/// A wavenumber in up to two dimensions. One-dimensional grids keep `ky = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Mode {
    pub kx: i64,
    pub ky: i64,
}

impl Mode {
    pub const ZERO: Mode = Mode { kx: 0, ky: 0 };

    pub fn new(kx: i64, ky: i64) -> Self {
        Mode { kx, ky }
    }

    pub fn one_d(kx: i64) -> Self {
        Mode { kx, ky: 0 }
    }

    /// l1 norm `|kx| + |ky|`.
    pub fn norm1(&self) -> u64 {
        self.kx.unsigned_abs() + self.ky.unsigned_abs()
    }

    /// `|k|^s` with the convention `0^0 = 1`, so `s = 0` weights every mode
    /// equally, including the mean.
    pub fn norm1_pow(&self, s: f64) -> f64 {
        let m = self.norm1();
        if m == 0 {
            if s == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (m as f64).powf(s)
        }
    }

    pub fn neg(&self) -> Mode {
        Mode {
            kx: -self.kx,
            ky: -self.ky,
        }
    }

    /// True on the half of the mode set that carries independent degrees of
    /// freedom for a real field: `kx > 0`, or `kx = 0` with `ky > 0`.
    pub fn is_canonical(&self) -> bool {
        self.kx > 0 || (self.kx == 0 && self.ky > 0)
    }
}

/// Grid geometry: dimension, points per dimension, period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    d: usize,
    n_per_dim: usize,
    period: f64,
}

impl Grid {
    /// `n_per_dim` must be a power of two, at least 8; `period` positive.
    pub fn new(d: usize, n_per_dim: usize, period: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if d != 1 && d != 2 {
            problems.push(format!("grid.d: must be 1 or 2 (got {d})"));
        }
        if n_per_dim < 8 || !n_per_dim.is_power_of_two() {
            problems.push(format!(
                "grid.n_per_dim: must be a power of two >= 8 (got {n_per_dim})"
            ));
        }
        if !(period.is_finite() && period > 0.0) {
            problems.push(format!("grid.period: must be positive (got {period})"));
        }
        if problems.is_empty() {
            Ok(Grid { d, n_per_dim, period })
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_per_dim(&self) -> usize {
        self.n_per_dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Base wavenumber `q = 2 pi / L`.
    pub fn q(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    /// Total number of retained coefficients (`n` or `n^2`).
    pub fn n_total(&self) -> usize {
        match self.d {
            1 => self.n_per_dim,
            _ => self.n_per_dim * self.n_per_dim,
        }
    }

    /// Largest l1 norm a nonzero retained mode can take once the Nyquist row
    /// is excluded: `d * (n/2 - 1)`.
    pub fn max_shell(&self) -> usize {
        self.d * (self.n_per_dim / 2 - 1)
    }

    /// Integer wavenumber for FFT storage position `i` along one dimension.
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n_per_dim as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of a retained mode. Callers must stay within
    /// `-n/2 <= k_j <= n/2 - 1`.
    pub fn index_of(&self, m: Mode) -> usize {
        let n = self.n_per_dim as i64;
        debug_assert!(m.kx >= -n / 2 && m.kx < n / 2, "kx out of truncation");
        let ix = if m.kx >= 0 { m.kx } else { m.kx + n } as usize;
        match self.d {
            1 => ix,
            _ => {
                debug_assert!(m.ky >= -n / 2 && m.ky < n / 2, "ky out of truncation");
                let iy = if m.ky >= 0 { m.ky } else { m.ky + n } as usize;
                ix * self.n_per_dim + iy
            }
        }
    }

    /// Mode stored at position `idx`.
    pub fn mode_at(&self, idx: usize) -> Mode {
        match self.d {
            1 => Mode::one_d(self.freq(idx)),
            _ => Mode::new(self.freq(idx / self.n_per_dim), self.freq(idx % self.n_per_dim)),
        }
    }

    /// True when `m` lies in the retained truncation (Nyquist included; the
    /// Nyquist coefficient itself is always zero).
    pub fn retains(&self, m: Mode) -> bool {
        let half = (self.n_per_dim / 2) as i64;
        let x_ok = m.kx >= -half && m.kx < half;
        match self.d {
            1 => x_ok && m.ky == 0,
            _ => x_ok && m.ky >= -half && m.ky < half,
        }
    }

    /// True when `m` sits on a Nyquist row (some `k_j = -n/2`).
    pub fn is_nyquist(&self, m: Mode) -> bool {
        let half = (self.n_per_dim / 2) as i64;
        m.kx == -half || (self.d == 2 && m.ky == -half)
    }

    /// Iterate over `(storage index, mode)` in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (usize, Mode)> + '_ {
        (0..self.n_total()).map(move |i| (i, self.mode_at(i)))
    }
}
