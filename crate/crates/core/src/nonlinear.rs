//! The quadratic term `u u_{x1}` in spectral space: a dealiased
//! pseudo-spectral fast path and two direct-summation oracles.
//!
//! Convention: the evolution equation keeps the nonlinearity on the left
//! (`u_t + u u_x1 + P u = 0`), so the right-hand-side contribution computed
//! here is `N(u)_k = -i q k_1 phi_hat_k` with `phi = u^2 / 2`. Products are
//! formed on a 3/2-padded grid, which makes the quadratic term exactly
//! alias-free on the retained modes: the fast path, the direct convolution,
//! and the quadrant decomposition agree to rounding, not to a modelling
//! tolerance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{fft_grid, SpectralField};
use crate::grid::{Grid, Mode};

/// Scratch buffers for the padded product. Single-owner and reusable across
/// steps; one workspace per concurrent simulation.
#[derive(Debug)]
pub struct NonlinearWorkspace {
    grid: Grid,
    padded_n: usize,
    /// Grid storage index -> padded storage index, fixed per grid.
    scatter: Vec<usize>,
    buf: Vec<Complex64>,
}

impl NonlinearWorkspace {
    pub fn new(grid: Grid) -> Self {
        let padded_n = 3 * grid.n_per_dim() / 2;
        let pn = padded_n as i64;
        let scatter = grid
            .modes()
            .map(|(_, m)| {
                let px = m.kx.rem_euclid(pn) as usize;
                match grid.d() {
                    1 => px,
                    _ => px * padded_n + m.ky.rem_euclid(pn) as usize,
                }
            })
            .collect();
        let total = padded_n.pow(grid.d() as u32);
        let mut ws = NonlinearWorkspace {
            grid,
            padded_n,
            scatter,
            buf: vec![Complex64::default(); total],
        };
        // Warm the FFT plans so the first step costs the same as the rest.
        fft_grid(&mut ws.buf, grid.d(), padded_n, true);
        fft_grid(&mut ws.buf, grid.d(), padded_n, false);
        for c in ws.buf.iter_mut() {
            *c = Complex64::default();
        }
        ws
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }
}

/// Dealiased `N(u)_k = -i q k_1 phi_hat_k`, written into `out`.
pub fn nonlinear_term_into(u: &SpectralField, ws: &mut NonlinearWorkspace, out: &mut SpectralField) {
    let grid = u.grid();
    debug_assert_eq!(grid, ws.grid);
    debug_assert_eq!(grid, out.grid());
    for c in ws.buf.iter_mut() {
        *c = Complex64::default();
    }
    for (idx, &c) in u.coeffs().iter().enumerate() {
        ws.buf[ws.scatter[idx]] = c;
    }
    fft_grid(&mut ws.buf, grid.d(), ws.padded_n, true);
    // The imaginary parts of the padded samples are rounding residue of a
    // Hermitian input; squaring the real part alone keeps phi real.
    for c in ws.buf.iter_mut() {
        *c = Complex64::new(0.5 * c.re * c.re, 0.0);
    }
    fft_grid(&mut ws.buf, grid.d(), ws.padded_n, false);
    let scale = 1.0 / ws.buf.len() as f64;
    let q = grid.q();
    let coeffs = out.coeffs_mut();
    for (idx, m) in grid.modes() {
        if grid.is_nyquist(m) {
            coeffs[idx] = Complex64::default();
        } else {
            let phi = ws.buf[ws.scatter[idx]] * scale;
            coeffs[idx] = phi * Complex64::new(0.0, -q * m.kx as f64);
        }
    }
    out.symmetrize();
}

/// Dealiased `N(u)` as a fresh field.
pub fn nonlinear_term(u: &SpectralField, ws: &mut NonlinearWorkspace) -> SpectralField {
    let mut out = SpectralField::zeros(u.grid());
    nonlinear_term_into(u, ws, &mut out);
    out
}

/// Exact truncated convolution coefficient `phi_hat_k = (1/2) sum_j u_hat_j
/// u_hat_{k-j}` over the retained modes. O(N^d) per coefficient; an oracle,
/// not a production path.
pub fn convolution_direct(u: &SpectralField, k: Mode) -> Complex64 {
    let mut acc = Complex64::default();
    for (idx, j) in u.grid().modes() {
        let rest = Mode::new(k.kx - j.kx, k.ky - j.ky);
        acc += u.coeffs()[idx] * u.coeff_or_zero(rest);
    }
    0.5 * acc
}

/// The five-sum quadrant decomposition of `phi_hat_{k,l}` for `k, l >= 0`,
/// truncated at the retained-mode radius. Each of the four series runs until
/// its coefficients leave the truncation, which matches the dynamical system
/// being integrated, so this equals [`convolution_direct`] up to summation
/// order. The printed decomposition covers only the nonnegative quadrant;
/// other quadrants follow from `u_hat_{-k} = conj(u_hat_k)`.
pub fn convolution_quadrants(u: &SpectralField, k: i64, l: i64) -> Result<Complex64> {
    let grid = u.grid();
    if grid.d() != 2 {
        return Err(Error::Precondition(
            "quadrant decomposition is defined for two-dimensional fields".into(),
        ));
    }
    if k < 0 || l < 0 {
        return Err(Error::Precondition(format!(
            "quadrant decomposition needs k, l >= 0 (got ({k}, {l}))"
        )));
    }
    let half = (grid.n_per_dim() / 2) as i64;
    let at = |kx: i64, ky: i64| u.coeff_or_zero(Mode::new(kx, ky));

    let mut s1 = Complex64::default();
    for j in 0..=k {
        for m in 0..=l {
            s1 += at(j, m) * at(k - j, l - m);
        }
    }
    let mut s2 = Complex64::default();
    for j in 0..=k {
        for m in 1..=half {
            s2 += at(j, -m) * at(k - j, l + m);
        }
    }
    let mut s3 = Complex64::default();
    for j in 1..=half {
        for m in 0..=l {
            s3 += at(-j, m) * at(k + j, l - m);
        }
    }
    let mut s4 = Complex64::default();
    let mut s5 = Complex64::default();
    for j in 1..=half {
        for m in 1..=half {
            s4 += at(-j, -m) * at(k + j, l + m);
            s5 += at(-j, l + m) * at(k + j, -m);
        }
    }
    Ok(0.5 * s1 + s2 + s3 + s4 + s5)
}

/// `theta_hat_{k,l} = mu w_hat_{k,l} - i q k (|k|+|l|)^3 phi_hat_{k,l}`,
/// the forcing of the weighted-mode equation, evaluated through the quadrant
/// oracle (`k, l >= 0`). The weight exponent is the cubic one the
/// boundedness argument uses.
pub fn theta_hat(u: &SpectralField, mu: f64, m: Mode) -> Result<Complex64> {
    let phi = convolution_quadrants(u, m.kx, m.ky)?;
    let w = m.norm1_pow(3.0) * u.coeff_or_zero(m);
    let q = u.grid().q();
    Ok(mu * w + phi * m.norm1_pow(3.0) * Complex64::new(0.0, -q * m.kx as f64))
}
