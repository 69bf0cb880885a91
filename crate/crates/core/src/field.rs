//! Truncated Fourier representation of real periodic fields, transforms, and
//! the seminorms the diagnostics are built from.
//!
//! Coefficient convention: `coeffs[idx]` holds the Fourier coefficient
//! `u_hat_k` of `u(x) = sum_k u_hat_k e^{i q k . x}`, i.e. the forward FFT of
//! the samples divided by the sample count. With this normalization the
//! mean-square of the samples equals `sum_k |u_hat_k|^2`.
//!
//! Invariants maintained by every constructor and mutator:
//! * Hermitian symmetry `u_hat_{-k} = conj(u_hat_k)` holds exactly (the field
//!   represents a real function);
//! * Nyquist rows (`k_j = -n/2`) are exactly zero. They have no conjugate
//!   partner in the truncation, so carrying them breaks symmetry under
//!   differentiation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mode};

/// Shared FFT plan cache. Plans are immutable and thread-safe; the planner is
/// serialized behind a mutex, which is uncontended after warm-up.
fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    type Cache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    map.entry((len, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Unnormalized in-place FFT of a 1D buffer.
pub(crate) fn fft_1d(buf: &mut [Complex64], inverse: bool) {
    let p = plan(buf.len(), inverse);
    let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];
    p.process_with_scratch(buf, &mut scratch);
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized in-place 2D FFT of an `n x n` row-major buffer, applied as
/// row transforms, transpose, row transforms, transpose.
pub(crate) fn fft_2d(buf: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), n * n);
    let p = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(n) {
        p.process_with_scratch(row, &mut scratch);
    }
    transpose_square(buf, n);
    for row in buf.chunks_exact_mut(n) {
        p.process_with_scratch(row, &mut scratch);
    }
    transpose_square(buf, n);
}

pub(crate) fn fft_grid(buf: &mut [Complex64], d: usize, n: usize, inverse: bool) {
    match d {
        1 => fft_1d(buf, inverse),
        _ => fft_2d(buf, n, inverse),
    }
}

/// Fourier coefficients of a real periodic field on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::default(); grid.n_total()],
        }
    }

    /// Forward transform of real samples on the uniform grid (row-major in
    /// 2D). The result satisfies both field invariants exactly.
    pub fn from_samples(grid: Grid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.n_total() {
            return Err(Error::Config(format!(
                "sample array has {} entries, grid holds {}",
                samples.len(),
                grid.n_total()
            )));
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        fft_grid(&mut buf, grid.d(), grid.n_per_dim(), false);
        let scale = 1.0 / grid.n_total() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        let mut f = SpectralField { grid, coeffs: buf };
        f.symmetrize();
        Ok(f)
    }

    /// Build a field from coefficient values supplied on the canonical half
    /// of the mode set (`kx > 0`, or `kx = 0, ky > 0`) plus the mean. The
    /// mirror modes are filled with conjugates, the imaginary part of the
    /// mean is discarded, and Nyquist rows stay zero, so the invariants hold
    /// by construction.
    pub fn from_mode_fn(grid: Grid, mut f: impl FnMut(Mode) -> Complex64) -> Self {
        let mut field = SpectralField::zeros(grid);
        for (idx, m) in grid.modes() {
            if grid.is_nyquist(m) {
                continue;
            }
            if m == Mode::ZERO {
                field.coeffs[idx] = Complex64::new(f(m).re, 0.0);
            } else if m.is_canonical() {
                let v = f(m);
                field.coeffs[idx] = v;
                field.coeffs[grid.index_of(m.neg())] = v.conj();
            }
        }
        field
    }

    /// Wrap raw coefficients. Rejects arrays that are not Hermitian within
    /// 1e-9 (absolute, relative to the largest coefficient), then enforces
    /// the symmetry exactly.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_total() {
            return Err(Error::Config(format!(
                "coefficient array has {} entries, grid holds {}",
                coeffs.len(),
                grid.n_total()
            )));
        }
        let mut f = SpectralField { grid, coeffs };
        let scale = f.max_abs().max(1e-30);
        let residual = f.hermitian_residual();
        if residual > 1e-9 * scale {
            return Err(Error::Format(format!(
                "coefficients are not Hermitian-symmetric: residual {residual:.3e} at scale {scale:.3e}"
            )));
        }
        f.symmetrize();
        Ok(f)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.coeffs
    }

    /// Coefficient of a retained mode.
    pub fn coeff(&self, m: Mode) -> Complex64 {
        debug_assert!(self.grid.retains(m));
        self.coeffs[self.grid.index_of(m)]
    }

    /// Coefficient of any mode; zero outside the truncation. Convolution
    /// oracles use this so their index ranges can run free.
    pub fn coeff_or_zero(&self, m: Mode) -> Complex64 {
        if self.grid.retains(m) {
            self.coeffs[self.grid.index_of(m)]
        } else {
            Complex64::default()
        }
    }

    /// Set `u_hat_m = v` and `u_hat_{-m} = conj(v)`. The imaginary part of
    /// the mean is discarded; Nyquist rows are left at zero.
    pub fn set_pair(&mut self, m: Mode, v: Complex64) {
        debug_assert!(self.grid.retains(m));
        if self.grid.is_nyquist(m) {
            return;
        }
        if m == Mode::ZERO {
            self.coeffs[self.grid.index_of(m)] = Complex64::new(v.re, 0.0);
        } else {
            self.coeffs[self.grid.index_of(m)] = v;
            self.coeffs[self.grid.index_of(m.neg())] = v.conj();
        }
    }

    /// Mean value of the field (`u_hat_0`, real by the invariants).
    pub fn mean(&self) -> Complex64 {
        self.coeffs[self.grid.index_of(Mode::ZERO)]
    }

    /// Inverse transform to complex samples (imaginary parts are rounding
    /// residue for a field satisfying the invariants).
    pub fn inverse_complex(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        fft_grid(&mut buf, self.grid.d(), self.grid.n_per_dim(), true);
        buf
    }

    /// Inverse transform to real samples.
    pub fn samples(&self) -> Vec<f64> {
        self.inverse_complex().iter().map(|c| c.re).collect()
    }

    /// Enforce both invariants exactly: zero Nyquist rows, conjugate-average
    /// every +/- pair, drop the imaginary part of the mean.
    pub fn symmetrize(&mut self) {
        for (idx, m) in self.grid.modes() {
            if self.grid.is_nyquist(m) {
                self.coeffs[idx] = Complex64::default();
            } else if m == Mode::ZERO {
                self.coeffs[idx].im = 0.0;
            } else if m.is_canonical() {
                let j = self.grid.index_of(m.neg());
                let avg = 0.5 * (self.coeffs[idx] + self.coeffs[j].conj());
                self.coeffs[idx] = avg;
                self.coeffs[j] = avg.conj();
            }
        }
    }

    /// Largest deviation from the invariants (conjugate mismatch, imaginary
    /// mean, nonzero Nyquist entries).
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (idx, m) in self.grid.modes() {
            if self.grid.is_nyquist(m) {
                worst = worst.max(self.coeffs[idx].norm());
            } else if m == Mode::ZERO {
                worst = worst.max(self.coeffs[idx].im.abs());
            } else if m.is_canonical() {
                let j = self.grid.index_of(m.neg());
                worst = worst.max((self.coeffs[idx] - self.coeffs[j].conj()).norm());
            }
        }
        worst
    }

    /// `sup_k |k|^s |u_hat_k|` with `0^0 = 1` (l1 wavenumber norm).
    pub fn seminorm_sup(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        self.grid
            .modes()
            .map(|(idx, m)| m.norm1_pow(s) * self.coeffs[idx].norm())
            .fold(0.0, f64::max)
    }

    /// `sum_k |k|^n |u_hat_k|` with `0^0 = 1`, so the mean participates only
    /// at `n = 0`.
    pub fn norm_l1_weighted(&self, n: f64) -> f64 {
        debug_assert!(n >= 0.0);
        self.grid
            .modes()
            .map(|(idx, m)| m.norm1_pow(n) * self.coeffs[idx].norm())
            .sum()
    }

    /// The weighted field `w_hat_k = |k|^p u_hat_k`. With `p = 0` this is the
    /// identity; for `p > 0` the mean is annihilated.
    pub fn weighted(&self, p: f64) -> SpectralField {
        let mut out = self.clone();
        for (idx, m) in self.grid.modes() {
            out.coeffs[idx] = self.coeffs[idx] * m.norm1_pow(p);
        }
        out
    }

    /// Root of `sum_k |u_hat_k|^2`, equal to the root-mean-square of the grid
    /// samples (Parseval under this normalization).
    pub fn l2_grid(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `L^{d/2}` times [`Self::l2_grid`]: the L2 norm of the field over one
    /// periodicity cell.
    pub fn l2_phys(&self) -> f64 {
        self.grid.period().powf(self.grid.d() as f64 / 2.0) * self.l2_grid()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_mode(&self) -> (Mode, f64) {
        let mut best = (Mode::ZERO, 0.0);
        for (idx, m) in self.grid.modes() {
            let a = self.coeffs[idx].norm();
            if a > best.1 {
                best = (m, a);
            }
        }
        best
    }

    /// Sup of `|u_hat_k|` over each l1 shell `|k| = m`, for `m = 0 ..= max_shell`.
    pub fn shell_sups(&self) -> Vec<f64> {
        let mut sups = vec![0.0f64; self.grid.max_shell() + 1];
        for (idx, m) in self.grid.modes() {
            if self.grid.is_nyquist(m) {
                continue;
            }
            let shell = m.norm1() as usize;
            let a = self.coeffs[idx].norm();
            if a > sups[shell] {
                sups[shell] = a;
            }
        }
        sups
    }
}

/// Per-mode sup of `|u_hat_k|` accumulated over a collection of fields: the
/// finite-window surrogate for the limsup envelope of a trajectory.
#[derive(Debug, Clone)]
pub struct ModeEnvelope {
    grid: Grid,
    sup: Vec<f64>,
    samples: usize,
}

impl ModeEnvelope {
    pub fn new(grid: Grid) -> Self {
        ModeEnvelope {
            grid,
            sup: vec![0.0; grid.n_total()],
            samples: 0,
        }
    }

    /// Raise the envelope pointwise to cover `f`. The stored value is the
    /// same `Complex64::norm` a caller would compute on the coefficient, so
    /// sups agree bit for bit with direct maxima over the snapshots.
    pub fn absorb(&mut self, f: &SpectralField) {
        debug_assert_eq!(f.grid(), self.grid);
        for (s, c) in self.sup.iter_mut().zip(f.coeffs()) {
            let m = c.norm();
            if m > *s {
                *s = m;
            }
        }
        self.samples += 1;
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Envelope values in storage order.
    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// Number of fields absorbed.
    pub fn samples(&self) -> usize {
        self.samples
    }

    /// `sup_k |k|^s env_k` with `0^0 = 1`.
    pub fn seminorm_sup(&self, s: f64) -> f64 {
        self.grid
            .modes()
            .map(|(idx, m)| m.norm1_pow(s) * self.sup[idx])
            .fold(0.0, f64::max)
    }

    /// Sup of the envelope over each l1 shell.
    pub fn shell_sups(&self) -> Vec<f64> {
        let mut sups = vec![0.0f64; self.grid.max_shell() + 1];
        for (idx, m) in self.grid.modes() {
            if self.grid.is_nyquist(m) {
                continue;
            }
            let shell = m.norm1() as usize;
            if self.sup[idx] > sups[shell] {
                sups[shell] = self.sup[idx];
            }
        }
        sups
    }
}
