//! Symbol families of the linear operator, dissipation-bound certification,
//! and the order fit used to pick certificate parameters automatically.
//!
//! Orientation: the operator sits on the left of the evolution equation
//! (`u_t + u u_x + P u = 0`), so a mode grows when `Re lambda_k < 0`. The
//! classical Kuramoto-Sivashinsky instability band `|q k| < 1` fixes
//! `lambda_k = -(qk)^2 + (qk)^4`; every family follows this sign convention.
//!
//! Dissipation certificates state `Re lambda_k >= c1 |k|^gamma - mu` over a
//! finite check radius, with `|k|` the l1 wavenumber norm. The differential
//! families use the Euclidean norm inside their Laplacian powers; the norm
//! equivalence constant is absorbed into `c1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_i, bessel_i_ratios, two_i1_minus_x_i0};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mode};

/// Equation family plus its parameters. The base wavenumber `q` is supplied
/// by the grid at evaluation time so that configs carry a single source of
/// truth for the period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SymbolSpec {
    /// `lambda = -(qk)^2 + (qk)^4`, one space dimension.
    KuramotoSivashinsky,
    /// `lambda = -(qk)^2 + ((qk)^2 + (ql)^2)^2`: destabilization only along
    /// the streamwise direction, biharmonic damping in both.
    Pinto,
    /// `lambda = -a1 (qk)^2 - a2 s + a3 s^2 - i a4 (qk) s` with
    /// `s = (qk)^2 + (ql)^2`. Requires `a3 > 0` for high-mode damping.
    TopperKawahara {
        alpha1: f64,
        alpha2: f64,
        alpha3: f64,
        alpha4: f64,
    },
    /// `lambda = -alpha s + s^2 + delta N(qk, l)` with `s` as above and `N`
    /// the film-flow dispersion symbol (purely imaginary). The transverse
    /// Bessel order is the integer mode index `l` itself: the second
    /// coordinate of this model is an azimuthal angle with fixed period
    /// `2 pi`, regardless of the streamwise period.
    CowardHall { alpha: f64, delta: f64 },
    /// `lambda = |k|^gamma - mu_tilde` in the l1 norm of the integer mode
    /// index, independent of the period. Satisfies the dissipation bound
    /// with `(c1, gamma, mu) = (1, gamma, mu_tilde)` exactly, and the
    /// unstable modes are exactly `|k|^gamma < mu_tilde`, which makes it the
    /// clean instrument for threshold sweeps in the exponent.
    GeneralizedGamma { gamma: f64, mu_tilde: f64 },
}

impl SymbolSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            SymbolSpec::KuramotoSivashinsky => "kuramoto_sivashinsky",
            SymbolSpec::Pinto => "pinto",
            SymbolSpec::TopperKawahara { .. } => "topper_kawahara",
            SymbolSpec::CowardHall { .. } => "coward_hall",
            SymbolSpec::GeneralizedGamma { .. } => "generalized_gamma",
        }
    }

    /// Space dimension the family is defined in; `None` means any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SymbolSpec::KuramotoSivashinsky => Some(1),
            SymbolSpec::Pinto | SymbolSpec::TopperKawahara { .. } | SymbolSpec::CowardHall { .. } => {
                Some(2)
            }
            SymbolSpec::GeneralizedGamma { .. } => None,
        }
    }

    /// Check parameter invariants and dimension agreement.
    pub fn validate_for(&self, d: usize) -> Result<()> {
        if let Some(need) = self.dimension() {
            if need != d {
                return Err(Error::Config(format!(
                    "symbol family {} is defined in {} dimension(s), grid has {}",
                    self.family_name(),
                    need,
                    d
                )));
            }
        }
        match *self {
            SymbolSpec::TopperKawahara {
                alpha1,
                alpha2,
                alpha3,
                alpha4,
            } => {
                if ![alpha1, alpha2, alpha3, alpha4].iter().all(|a| a.is_finite()) {
                    return Err(Error::Config(
                        "topper_kawahara: parameters must be finite".into(),
                    ));
                }
                if alpha3 <= 0.0 {
                    // The s^2 coefficient is the only damping at high modes.
                    return Err(Error::Config(format!(
                        "topper_kawahara: alpha3 must be positive (got {alpha3})"
                    )));
                }
            }
            SymbolSpec::CowardHall { alpha, delta } => {
                if !alpha.is_finite() || !delta.is_finite() {
                    return Err(Error::Config("coward_hall: parameters must be finite".into()));
                }
            }
            SymbolSpec::GeneralizedGamma { gamma, mu_tilde } => {
                if !(gamma.is_finite() && gamma > 0.0) {
                    return Err(Error::Config(format!(
                        "generalized_gamma: gamma must be positive (got {gamma})"
                    )));
                }
                if !(mu_tilde.is_finite() && mu_tilde >= 0.0) {
                    return Err(Error::Config(format!(
                        "generalized_gamma: mu_tilde must be nonnegative (got {mu_tilde})"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Scaled pieces of the dispersion-symbol fraction: everything is divided by
/// `I_eta(xi)^3`, which cancels exactly and keeps the arithmetic in range
/// where the raw Bessel products would overflow or underflow.
struct DispersionParts {
    value: Complex64,
    den: f64,
    den_scale: f64,
}

fn dispersion_parts(xi: f64, eta: i64) -> Result<DispersionParts> {
    if !xi.is_finite() {
        return Err(Error::Precondition(format!(
            "dispersion symbol needs finite xi (got {xi})"
        )));
    }
    if xi == 0.0 {
        // Every term carries a factor of xi after scaling; the limit is 0.
        return Ok(DispersionParts {
            value: Complex64::default(),
            den: 1.0,
            den_scale: 1.0,
        });
    }
    let (rm, rp) = bessel_i_ratios(eta, xi)?;
    if eta == 0 {
        // With I_{-1} = I_1 the denominator factors as
        // 2 I_1 (xi I_1^2 + I_0 (2 I_1 - xi I_0)); the parenthesized
        // difference cancels catastrophically near 0 and is evaluated by its
        // own series. Numerator: 4 i xi^2 I_1^3.
        let r = rp;
        let t = two_i1_minus_x_i0(xi) / bessel_i(0, xi)?;
        let den = 2.0 * r * (xi * r * r + t);
        let den_scale = 2.0 * r.abs() * ((xi * r * r).abs() + t.abs());
        if den.abs() < 1e-300 {
            return Err(Error::SingularSymbol { xi, eta });
        }
        let value = Complex64::new(0.0, 4.0 * xi * xi * r * r * r / den);
        return Ok(DispersionParts {
            value,
            den,
            den_scale,
        });
    }
    let (e, rm, rp) = (eta as f64, rm, rp);
    let t1 = 2.0 * xi * rp * rp * rm;
    let t2 = -xi * rm;
    let t3 = -xi * rp;
    let t4 = 2.0 * (2.0 + e) * rp * rm;
    let den = t1 + t2 + t3 + t4;
    let den_scale = t1.abs() + t2.abs() + t3.abs() + t4.abs();
    if den.abs() < 1e-300 {
        return Err(Error::SingularSymbol { xi, eta });
    }
    let num1 = 2.0 * e * e * (xi - 2.0 * e * rp - xi * rp);
    let num2 = xi * xi * rp * (xi * rm - 2.0 * (e - 2.0) * rm * rp - xi * rp);
    let value = Complex64::new(0.0, (num1 + num2) / den + xi * e);
    Ok(DispersionParts {
        value,
        den,
        den_scale,
    })
}

/// Dispersion symbol of the film-flow model: the two-fraction Bessel
/// expression plus `i xi eta`. Purely imaginary by construction (the
/// numerators are real multiples of `i` and the denominator is real).
pub fn coward_hall_symbol(xi: f64, eta: i64) -> Result<Complex64> {
    dispersion_parts(xi, eta).map(|p| p.value)
}

/// Symbol of the linear operator at integer mode `m` for base wavenumber `q`.
///
/// Conjugate symmetry `lambda_{-k} = conj(lambda_k)` is exact for every
/// family. The film-flow dispersion formula does not satisfy it termwise for
/// `eta != 0`, so that family is evaluated on the half-space `kx > 0` and
/// mirrored; the `kx = 0` column has zero dispersion and is real.
pub fn eval_symbol(spec: &SymbolSpec, q: f64, m: Mode) -> Result<Complex64> {
    let (kx, ky) = (m.kx as f64 * q, m.ky as f64 * q);
    match *spec {
        SymbolSpec::KuramotoSivashinsky => {
            let x2 = kx * kx;
            Ok(Complex64::new(-x2 + x2 * x2, 0.0))
        }
        SymbolSpec::Pinto => {
            let s = kx * kx + ky * ky;
            Ok(Complex64::new(-kx * kx + s * s, 0.0))
        }
        SymbolSpec::TopperKawahara {
            alpha1,
            alpha2,
            alpha3,
            alpha4,
        } => {
            let s = kx * kx + ky * ky;
            Ok(Complex64::new(
                -alpha1 * kx * kx - alpha2 * s + alpha3 * s * s,
                -alpha4 * kx * s,
            ))
        }
        SymbolSpec::CowardHall { alpha, delta } => {
            if m.kx < 0 {
                return eval_symbol(spec, q, m.neg()).map(|v| v.conj());
            }
            let s = kx * kx + ky * ky;
            let diss = Complex64::new(-alpha * s + s * s, 0.0);
            if m.kx == 0 {
                return Ok(diss);
            }
            Ok(diss + delta * coward_hall_symbol(kx, m.ky)?)
        }
        SymbolSpec::GeneralizedGamma { gamma, mu_tilde } => {
            Ok(Complex64::new(m.norm1_pow(gamma) - mu_tilde, 0.0))
        }
    }
}

/// Precomputed symbol values in grid storage order. Immutable after
/// construction; Nyquist rows hold zero because their coefficients are
/// pinned to zero and never evolve.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    grid: Grid,
    q: f64,
    values: Vec<Complex64>,
    warnings: Vec<String>,
}

impl SymbolTable {
    pub fn build(grid: Grid, spec: &SymbolSpec) -> Result<SymbolTable> {
        spec.validate_for(grid.d())?;
        let q = grid.q();
        let mut values = vec![Complex64::default(); grid.n_total()];
        let mut warnings = Vec::new();
        for (idx, m) in grid.modes() {
            if grid.is_nyquist(m) {
                continue;
            }
            values[idx] = eval_symbol(spec, q, m)?;
            if let SymbolSpec::CowardHall { .. } = spec {
                if m.kx > 0 {
                    let parts = dispersion_parts(m.kx as f64 * q, m.ky)?;
                    // A denominator much smaller than its term magnitudes
                    // signals heavy cancellation (possible nearby zero of
                    // the dispersion denominator); report, don't guess.
                    if parts.den.abs() < 1e-6 * parts.den_scale {
                        warnings.push(format!(
                            "dispersion denominator nearly singular at (xi = {}, eta = {}): \
                             |den| = {:.3e} against term scale {:.3e}",
                            m.kx as f64 * q,
                            m.ky,
                            parts.den.abs(),
                            parts.den_scale
                        ));
                    }
                }
            }
        }
        Ok(SymbolTable {
            grid,
            q,
            values,
            warnings,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Identically-zero symbol (free transport of every mode); tests use it
    /// to isolate the nonlinear part of the stepper.
    #[cfg(test)]
    pub(crate) fn zero_for_tests(grid: Grid) -> SymbolTable {
        SymbolTable {
            grid,
            q: grid.q(),
            values: vec![Complex64::default(); grid.n_total()],
            warnings: Vec::new(),
        }
    }
}

/// Outcome of an exhaustive dissipation-bound check over `|k| <= K`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DissipationCertificate {
    pub c1: f64,
    pub gamma: f64,
    pub mu: f64,
    pub check_radius: u64,
    pub verified: bool,
    /// Mode attaining the smallest margin `Re lambda_k - (c1 |k|^gamma - mu)`.
    pub worst_mode: Mode,
    pub worst_margin: f64,
}

/// Certificate parameters produced by [`fit_dissipation_order`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FittedDissipation {
    pub gamma: f64,
    pub c1: f64,
    pub mu: f64,
}

fn for_each_mode_in_ball(d: usize, radius: u64, mut f: impl FnMut(Mode) -> Result<()>) -> Result<()> {
    let r = radius as i64;
    match d {
        1 => {
            for kx in -r..=r {
                f(Mode::one_d(kx))?;
            }
        }
        _ => {
            for kx in -r..=r {
                let rest = r - kx.abs();
                for ky in -rest..=rest {
                    f(Mode::new(kx, ky))?;
                }
            }
        }
    }
    Ok(())
}

fn certify_with(
    mut symbol: impl FnMut(Mode) -> Result<Complex64>,
    d: usize,
    c1: f64,
    gamma: f64,
    mu: f64,
    check_radius: u64,
) -> Result<DissipationCertificate> {
    if check_radius < 1 {
        return Err(Error::Precondition("check radius must be at least 1".into()));
    }
    if !(c1 > 0.0 && gamma > 0.0 && mu >= 0.0) {
        return Err(Error::Precondition(format!(
            "certificate needs c1 > 0, gamma > 0, mu >= 0 (got {c1}, {gamma}, {mu})"
        )));
    }
    let mut verified = true;
    let mut worst_mode = Mode::ZERO;
    let mut worst_margin = f64::INFINITY;
    for_each_mode_in_ball(d, check_radius, |m| {
        let re = symbol(m)?.re;
        let rhs = c1 * m.norm1_pow(gamma) - mu;
        // The comparison is done on the same floats as the margin so that a
        // family satisfying the bound with exact equality verifies cleanly.
        if !(re >= rhs) {
            verified = false;
        }
        let margin = re - rhs;
        if margin < worst_margin {
            worst_margin = margin;
            worst_mode = m;
        }
        Ok(())
    })?;
    Ok(DissipationCertificate {
        c1,
        gamma,
        mu,
        check_radius,
        verified,
        worst_mode,
        worst_margin,
    })
}

/// Exhaustively check `Re lambda_k >= c1 |k|^gamma - mu` for all integer
/// modes with `|k| <= check_radius` (l1 norm, mean mode included). A failed
/// bound is a valid certificate with `verified = false`; only evaluation
/// problems are errors.
pub fn certify_dissipation(
    spec: &SymbolSpec,
    q: f64,
    c1: f64,
    gamma: f64,
    mu: f64,
    check_radius: u64,
) -> Result<DissipationCertificate> {
    let d = spec.dimension().unwrap_or(1);
    certify_with(|m| eval_symbol(spec, q, m), d, c1, gamma, mu, check_radius)
}

/// Smallest `Re lambda` on the l1 shell `|k| = m`. The real part of every
/// family is even in each coordinate separately, so the scan covers the
/// nonnegative quadrant only.
fn shell_min_re(spec: &SymbolSpec, q: f64, d: usize, shell: u64) -> Result<f64> {
    let mut min = f64::INFINITY;
    if d == 1 {
        min = eval_symbol(spec, q, Mode::one_d(shell as i64))?.re;
    } else {
        for kx in 0..=shell as i64 {
            let ky = shell as i64 - kx;
            min = min.min(eval_symbol(spec, q, Mode::new(kx, ky))?.re);
        }
    }
    Ok(min)
}

/// Estimate the dissipation order by least squares on the shell minima of
/// `Re lambda` over the tail `|k| in [K/2, K]`, then pick `(c1, mu)` so the
/// resulting certificate verifies at radius `K`:
/// `mu = 1 + max(0, -min Re lambda)` and `c1` the smallest observed ratio
/// `(Re lambda_k + mu) / |k|^gamma`, shaved by one part in 1e12 so the
/// re-verification is safe against rounding.
pub fn fit_dissipation_order(spec: &SymbolSpec, q: f64, check_radius: u64) -> Result<FittedDissipation> {
    let d = spec.dimension().unwrap_or(1);
    let lo = check_radius.div_ceil(2);
    if check_radius < 2 || lo >= check_radius {
        return Err(Error::FitDomain(format!(
            "fit range [{lo}, {check_radius}] holds fewer than two shells"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for shell in lo..=check_radius {
        let r = shell_min_re(spec, q, d, shell)?;
        if !(r > 0.0) {
            return Err(Error::FitDomain(format!(
                "Re lambda must be positive on the fit tail; shell {shell} has minimum {r:.3e}"
            )));
        }
        xs.push((shell as f64).ln());
        ys.push(r.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let gamma = sxy / sxx;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::FitDomain(format!(
            "tail regression produced a nonpositive order estimate ({gamma})"
        )));
    }

    let mut min_re = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for_each_mode_in_ball(d, check_radius, |m| {
        let re = eval_symbol(spec, q, m)?.re;
        min_re = min_re.min(re);
        Ok(())
    })?;
    let mu = 1.0 + (-min_re).max(0.0);
    for_each_mode_in_ball(d, check_radius, |m| {
        if m.norm1() > 0 {
            let re = eval_symbol(spec, q, m)?.re;
            min_ratio = min_ratio.min((re + mu) / m.norm1_pow(gamma));
        }
        Ok(())
    })?;
    let c1 = min_ratio * (1.0 - 1e-12);
    Ok(FittedDissipation { gamma, c1, mu })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn family_validation() {
        assert!(SymbolSpec::KuramotoSivashinsky.validate_for(1).is_ok());
        assert!(SymbolSpec::KuramotoSivashinsky.validate_for(2).is_err());
        assert!(SymbolSpec::Pinto.validate_for(1).is_err());
        let tk = SymbolSpec::TopperKawahara {
            alpha1: 1.0,
            alpha2: 0.0,
            alpha3: 0.0,
            alpha4: 1.0,
        };
        assert!(matches!(tk.validate_for(2), Err(Error::Config(msg)) if msg.contains("alpha3")));
        let gg = SymbolSpec::GeneralizedGamma {
            gamma: 0.0,
            mu_tilde: 1.0,
        };
        assert!(gg.validate_for(1).is_err());
        let gg2 = SymbolSpec::GeneralizedGamma {
            gamma: 1.5,
            mu_tilde: 2.0,
        };
        assert!(gg2.validate_for(1).is_ok());
        assert!(gg2.validate_for(2).is_ok());
    }

    #[test]
    fn spec_survives_toml_roundtrip() {
        let specs = vec![
            SymbolSpec::KuramotoSivashinsky,
            SymbolSpec::Pinto,
            SymbolSpec::TopperKawahara {
                alpha1: 1.0,
                alpha2: 0.5,
                alpha3: 1.0,
                alpha4: 0.1,
            },
            SymbolSpec::CowardHall {
                alpha: 1.0,
                delta: 0.3,
            },
            SymbolSpec::GeneralizedGamma {
                gamma: 2.5,
                mu_tilde: 1.0,
            },
        ];
        for spec in specs {
            let text = toml::to_string(&spec).unwrap();
            let back: SymbolSpec = toml::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
        let parsed: SymbolSpec =
            toml::from_str("family = \"coward_hall\"\nalpha = 1.0\ndelta = 0.3\n").unwrap();
        assert_eq!(
            parsed,
            SymbolSpec::CowardHall {
                alpha: 1.0,
                delta: 0.3
            }
        );
    }

    #[test]
    fn arithmetic_spot_values() {
        let ks = SymbolSpec::KuramotoSivashinsky;
        assert_eq!(eval_symbol(&ks, 1.0, Mode::one_d(1)).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(eval_symbol(&ks, 1.0, Mode::one_d(2)).unwrap(), Complex64::new(12.0, 0.0));
        let pinto = SymbolSpec::Pinto;
        assert_eq!(
            eval_symbol(&pinto, 1.0, Mode::new(1, 1)).unwrap(),
            Complex64::new(3.0, 0.0)
        );
        let tk = SymbolSpec::TopperKawahara {
            alpha1: 1.0,
            alpha2: 0.0,
            alpha3: 1.0,
            alpha4: 1.0,
        };
        assert!(close(
            eval_symbol(&tk, 1.0, Mode::new(1, 0)).unwrap(),
            Complex64::new(0.0, -1.0),
            1e-15
        ));
        let gg = SymbolSpec::GeneralizedGamma {
            gamma: 1.5,
            mu_tilde: 4.0,
        };
        assert_eq!(
            eval_symbol(&gg, 0.7, Mode::new(2, 2)).unwrap().re,
            4.0f64.powf(1.5) - 4.0
        );
    }

    #[test]
    fn dispersion_pinned_values() {
        // Reference values from a 40-digit series evaluation of the
        // two-fraction Bessel formula.
        let cases = [
            (1.0, 1, 2.2892258883424815729),
            (2.0, 3, 9.9287069885816727406),
            (0.5, -2, 173.79215706468488352),
            (5.0, 0, 51.331304206303186963),
            (0.25, 0, 1.00520493547977),
            (0.01, 0, 0.0400003333329861),
            (50.0, 0, 5000.78136051366),
        ];
        for (xi, eta, expect_im) in cases {
            let v = coward_hall_symbol(xi, eta).unwrap();
            assert_eq!(v.re, 0.0);
            assert!(
                (v.im - expect_im).abs() <= 1e-12 * expect_im.abs(),
                "N({xi}, {eta}) = {:.17e}, want {expect_im:.17e}",
                v.im
            );
        }
        assert_eq!(coward_hall_symbol(0.0, 0).unwrap(), Complex64::default());
        assert_eq!(coward_hall_symbol(0.0, 5).unwrap(), Complex64::default());
    }

    #[test]
    fn dispersion_is_purely_imaginary_and_finite() {
        for &xi in &[0.5, 1.0, 2.0, 5.0] {
            for eta in -3..=3 {
                let v = coward_hall_symbol(xi, eta).unwrap();
                assert_eq!(v.re, 0.0, "N({xi}, {eta})");
                assert!(v.im.is_finite(), "N({xi}, {eta})");
            }
        }
    }

    #[test]
    fn dispersion_argument_guard() {
        assert!(matches!(
            coward_hall_symbol(800.0, 1),
            Err(Error::BesselRange { .. })
        ));
    }

    #[test]
    fn conjugate_symmetry_every_family() {
        let specs = vec![
            (SymbolSpec::KuramotoSivashinsky, 1usize),
            (SymbolSpec::Pinto, 2),
            (
                SymbolSpec::TopperKawahara {
                    alpha1: 1.0,
                    alpha2: 0.2,
                    alpha3: 1.0,
                    alpha4: 0.5,
                },
                2,
            ),
            (
                SymbolSpec::CowardHall {
                    alpha: 1.0,
                    delta: 0.3,
                },
                2,
            ),
            (
                SymbolSpec::GeneralizedGamma {
                    gamma: 1.5,
                    mu_tilde: 2.0,
                },
                2,
            ),
        ];
        for (spec, d) in specs {
            for_each_mode_in_ball(d, 64, |m| {
                let a = eval_symbol(&spec, 0.5, m)?;
                let b = eval_symbol(&spec, 0.5, m.neg())?;
                assert_eq!(b, a.conj(), "family {} at {m:?}", spec.family_name());
                Ok(())
            })
            .unwrap();
        }
    }

    #[test]
    fn dispersive_addition_preserves_real_part() {
        let with = SymbolSpec::CowardHall {
            alpha: 1.0,
            delta: 0.7,
        };
        let without = SymbolSpec::CowardHall {
            alpha: 1.0,
            delta: 0.0,
        };
        for_each_mode_in_ball(2, 16, |m| {
            let a = eval_symbol(&with, 1.0, m)?;
            let b = eval_symbol(&without, 1.0, m)?;
            assert!((a.re - b.re).abs() <= 1e-10 * b.re.abs().max(1.0));
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn certificate_examples() {
        let ks = SymbolSpec::KuramotoSivashinsky;
        let cert = certify_dissipation(&ks, 1.0, 0.5, 4.0, 1.0, 64).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.worst_mode.norm1(), 1);
        assert!((cert.worst_margin - 0.5).abs() < 1e-12);

        let zero = certify_with(|_| Ok(Complex64::default()), 1, 1.0, 2.0, 0.0, 8).unwrap();
        assert!(!zero.verified);
        assert_eq!(zero.worst_mode.norm1(), 8);
        assert_eq!(zero.worst_margin, -64.0);
    }

    #[test]
    fn generalized_gamma_bound_is_exact() {
        let gg = SymbolSpec::GeneralizedGamma {
            gamma: 1.5,
            mu_tilde: 4.0,
        };
        let cert = certify_dissipation(&gg, 1.0, 1.0, 1.5, 4.0, 128).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.worst_margin, 0.0);
    }

    #[test]
    fn fitted_orders_match_known_families() {
        let ks = SymbolSpec::KuramotoSivashinsky;
        let fit = fit_dissipation_order(&ks, 1.0, 128).unwrap();
        assert!((fit.gamma - 4.0).abs() <= 0.05, "ks order {}", fit.gamma);

        let gg = SymbolSpec::GeneralizedGamma {
            gamma: 2.5,
            mu_tilde: 1.0,
        };
        let fit = fit_dissipation_order(&gg, 1.0, 128).unwrap();
        assert!((fit.gamma - 2.5).abs() <= 0.02, "gg order {}", fit.gamma);

        let pinto = SymbolSpec::Pinto;
        let fit = fit_dissipation_order(&pinto, 1.0, 64).unwrap();
        assert!((fit.gamma - 4.0).abs() <= 0.1, "pinto order {}", fit.gamma);
    }

    #[test]
    fn fitted_certificates_verify_for_every_family() {
        let families: Vec<(SymbolSpec, u64)> = vec![
            (SymbolSpec::KuramotoSivashinsky, 128),
            (SymbolSpec::Pinto, 64),
            (
                SymbolSpec::TopperKawahara {
                    alpha1: 1.0,
                    alpha2: 0.0,
                    alpha3: 1.0,
                    alpha4: 0.5,
                },
                64,
            ),
            (
                SymbolSpec::CowardHall {
                    alpha: 1.0,
                    delta: 0.3,
                },
                48,
            ),
            (
                SymbolSpec::GeneralizedGamma {
                    gamma: 1.5,
                    mu_tilde: 2.0,
                },
                128,
            ),
        ];
        for (spec, radius) in families {
            let fit = fit_dissipation_order(&spec, 1.0, radius).unwrap();
            let cert =
                certify_dissipation(&spec, 1.0, fit.c1, fit.gamma, fit.mu, radius).unwrap();
            assert!(
                cert.verified,
                "family {} failed its own fit: worst {:?} margin {:.3e}",
                spec.family_name(),
                cert.worst_mode,
                cert.worst_margin
            );
        }
    }

    #[test]
    fn fit_rejects_nonpositive_tail() {
        let gg = SymbolSpec::GeneralizedGamma {
            gamma: 1.0,
            mu_tilde: 1e9,
        };
        assert!(matches!(
            fit_dissipation_order(&gg, 1.0, 8),
            Err(Error::FitDomain(_))
        ));
    }

    #[test]
    fn table_build_zeroes_nyquist() {
        let grid = Grid::new(1, 16, 2.0 * std::f64::consts::PI).unwrap();
        let table = SymbolTable::build(grid, &SymbolSpec::KuramotoSivashinsky).unwrap();
        assert!(table.warnings().is_empty());
        let nyq = grid.index_of(Mode::one_d(-8));
        assert_eq!(table.value(nyq), Complex64::default());
        let k2 = grid.index_of(Mode::one_d(2));
        assert_eq!(table.value(k2), Complex64::new(12.0, 0.0));
        // Dimension mismatch surfaces at build time.
        assert!(SymbolTable::build(grid, &SymbolSpec::Pinto).is_err());
    }

    #[test]
    fn coward_hall_table_on_coarse_grid() {
        let grid = Grid::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let spec = SymbolSpec::CowardHall {
            alpha: 1.0,
            delta: 0.5,
        };
        let table = SymbolTable::build(grid, &spec).unwrap();
        for (idx, m) in grid.modes() {
            if grid.is_nyquist(m) {
                continue;
            }
            let mirror = table.value(grid.index_of(m.neg()));
            assert_eq!(table.value(idx).conj(), mirror, "at {m:?}");
        }
    }
}
