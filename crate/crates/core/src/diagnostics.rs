//! Attractor-window measurements: the weighted growth profile h(s), band
//! estimation from Fourier tail slopes, the growth-constant fit feeding the
//! 1/(e a) lower bound, the per-mode bootstrap inequality check, and the
//! gamma threshold sweep.
//!
//! Everything here approximates a limsup over t -> infinity by a sup over
//! the recorded trailing window of a run, so every report carries the window
//! it was measured on. Estimates are fits, not certificates: the hard
//! guarantees live in the symbol certificates and the lemma suite.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{ModeEnvelope, SpectralField};
use crate::integrator::{integrate, IntegrationOutput, RunOutcome, WindowData};
use crate::io;
use crate::nonlinear::{nonlinear_term_into, NonlinearWorkspace};
use crate::symbols::{DissipationCertificate, SymbolSpec};

/// Coefficients at or below this magnitude are rounding debris for
/// unit-scale fields; shells whose sup does not clear it never enter fits.
pub const SPECTRAL_FLOOR: f64 = 1e-14;

/// Smallest number of usable shells for a tail fit.
pub const MIN_TAIL_SHELLS: usize = 8;

/// `max_m m^{s+p} S_m` over shells above the floor, with `0^0 = 1`, plus the
/// attaining shell. Shell 0 contributes only when `s + p = 0`.
fn weighted_shell_max(shell_sups: &[f64], s: f64, p: f64) -> (f64, usize) {
    let mut best = 0.0f64;
    let mut best_shell = 0usize;
    for (m, &sup) in shell_sups.iter().enumerate() {
        if sup <= SPECTRAL_FLOOR {
            continue;
        }
        let w = if m == 0 {
            if s + p == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (m as f64).powf(s + p)
        };
        let v = w * sup;
        if v > best {
            best = v;
            best_shell = m;
        }
    }
    (best, best_shell)
}

/// Growth profile of a window: `h(s) = sup over window and modes of
/// |k|_1^s |w_hat_k|` where `w = |k|_1^p u` is the weighted field.
#[derive(Debug, Clone, Serialize)]
pub struct HProfile {
    pub s_grid: Vec<f64>,
    pub h_values: Vec<f64>,
    /// Shell attaining each `h(s)`; drives the fit-range rule.
    pub argmax_shell: Vec<usize>,
    pub max_shell: usize,
    pub weight_p: f64,
    /// Time span the sup was taken over.
    pub window: (f64, f64),
}

impl HProfile {
    /// Profile from externally supplied values (synthetic models, replayed
    /// tables). Argmax bookkeeping is absent, so the fit-range rule admits
    /// every point.
    pub fn from_values(s_grid: Vec<f64>, h_values: Vec<f64>) -> HProfile {
        let n = s_grid.len();
        HProfile {
            s_grid,
            h_values,
            argmax_shell: vec![0; n],
            max_shell: usize::MAX,
            weight_p: 0.0,
            window: (0.0, 0.0),
        }
    }
}

fn validate_s_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() {
        return Err(Error::Precondition("empty s grid".into()));
    }
    if !s_grid.iter().all(|s| s.is_finite() && *s >= 0.0) {
        return Err(Error::Precondition(
            "s grid values must be finite and nonnegative".into(),
        ));
    }
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("s grid must be increasing".into()));
    }
    Ok(())
}

fn profile_from_shells(
    shells: &[f64],
    max_shell: usize,
    window: (f64, f64),
    s_grid: &[f64],
    p: f64,
) -> Result<HProfile> {
    validate_s_grid(s_grid)?;
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::Precondition(format!(
            "weight exponent must be finite and nonnegative (got {p})"
        )));
    }
    let mut h_values = Vec::with_capacity(s_grid.len());
    let mut argmax_shell = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let (h, m) = weighted_shell_max(shells, s, p);
        h_values.push(h);
        argmax_shell.push(m);
    }
    Ok(HProfile {
        s_grid: s_grid.to_vec(),
        h_values,
        argmax_shell,
        max_shell,
        weight_p: p,
        window,
    })
}

/// Profile over explicit snapshots: the sup runs over every snapshot and
/// every retained mode. Snapshots must share one grid.
pub fn h_profile(
    snapshots: &[(f64, SpectralField)],
    s_grid: &[f64],
    p: f64,
) -> Result<HProfile> {
    let (first, rest) = snapshots
        .split_first()
        .ok_or_else(|| Error::Precondition("empty window: no snapshots to profile".into()))?;
    let grid = first.1.grid();
    let mut shells = first.1.shell_sups();
    for (_, u) in rest {
        if u.grid() != grid {
            return Err(Error::Precondition(
                "window snapshots live on different grids".into(),
            ));
        }
        for (acc, s) in shells.iter_mut().zip(u.shell_sups()) {
            if s > *acc {
                *acc = s;
            }
        }
    }
    let window = (first.0, snapshots.last().expect("nonempty").0);
    profile_from_shells(&shells, grid.max_shell(), window, s_grid, p)
}

/// Profile from a step-dense envelope; tighter than thinned snapshots since
/// the envelope absorbed every window step.
pub fn h_profile_from_envelope(
    env: &ModeEnvelope,
    window: (f64, f64),
    s_grid: &[f64],
    p: f64,
) -> Result<HProfile> {
    if env.samples() == 0 {
        return Err(Error::Precondition("empty window: envelope absorbed nothing".into()));
    }
    profile_from_shells(&env.shell_sups(), env.grid().max_shell(), window, s_grid, p)
}

/// Ordinary least squares of `y` on `x`; returns (intercept, slope, rms
/// residual). Callers guarantee at least two distinct abscissae.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum::<f64>();
    (intercept, slope, (ss / n).sqrt())
}

/// Fitted envelope constants for the model `h(s) = M (a s)^s`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthFit {
    pub m_hat: f64,
    pub a_hat: f64,
    /// First and last `s` that entered the fit.
    pub fit_range: (f64, f64),
    pub n_points: usize,
    /// RMS residual of the fit in log coordinates.
    pub residual: f64,
    /// No usable profile points (flat or empty field). `m_hat` and `a_hat`
    /// are zero and the band lower bound degenerates to infinity.
    pub degenerate: bool,
}

impl GrowthFit {
    /// Band lower bound `1/(e a_hat)` implied by the fitted envelope; an
    /// identically flat profile bounds nothing, reported as infinity.
    pub fn beta_lemma1(&self) -> f64 {
        if self.degenerate {
            f64::INFINITY
        } else {
            1.0 / (std::f64::consts::E * self.a_hat)
        }
    }
}

/// Least squares for (M, a) in `log h(s) = log M + s log a + s log s`,
/// linear in `(log M, log a)` after moving `s log s` to the left side.
///
/// Only `s` values whose argmax shell sits at least 4 shells below
/// truncation enter, so truncation-contaminated profile points cannot bias
/// the fit; points with `h = 0` are skipped.
pub fn fit_growth_constants(profile: &HProfile) -> GrowthFit {
    let margin = profile.max_shell.saturating_sub(4);
    let xlnx = |s: f64| if s == 0.0 { 0.0 } else { s * s.ln() };
    let pts: Vec<(f64, f64)> = profile
        .s_grid
        .iter()
        .zip(&profile.h_values)
        .zip(&profile.argmax_shell)
        .filter(|((_, &h), &m)| h > 0.0 && h.is_finite() && m <= margin)
        .map(|((&s, &h), _)| (s, h.ln() - xlnx(s)))
        .collect();
    if pts.len() < 2 {
        return GrowthFit {
            m_hat: 0.0,
            a_hat: 0.0,
            fit_range: (0.0, 0.0),
            n_points: pts.len(),
            residual: 0.0,
            degenerate: true,
        };
    }
    let (intercept, slope, residual) = linear_fit(&pts);
    GrowthFit {
        m_hat: intercept.exp(),
        a_hat: slope.exp(),
        fit_range: (pts[0].0, pts[pts.len() - 1].0),
        n_points: pts.len(),
        residual,
        degenerate: false,
    }
}

/// Band estimate from the slope of `ln S_m` against the shell index `m`,
/// where `S_m` is the sup of `|u_hat|` over the shell `|k|_1 = m`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandEstimate {
    /// Decay rate per shell index: `|u_hat| ~ e^{-beta_index m}`.
    pub beta_index: f64,
    /// Decay rate per physical wavenumber `q m`; the analyticity-band width
    /// in the same length units as the period. Exactly `beta_index / q`.
    pub beta_physical: f64,
    pub k_min: usize,
    pub shells_used: usize,
    pub residual: f64,
}

fn band_fit(shells: &[f64], q: f64, k_min: usize) -> Result<BandEstimate> {
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .enumerate()
        .skip(k_min.max(1))
        .filter(|(_, &s)| s > SPECTRAL_FLOOR)
        .map(|(m, &s)| (m as f64, s.ln()))
        .collect();
    if pts.len() < MIN_TAIL_SHELLS {
        return Err(Error::InsufficientResolution {
            found: pts.len(),
            needed: MIN_TAIL_SHELLS,
        });
    }
    let (_, slope, residual) = linear_fit(&pts);
    let beta_index = -slope;
    Ok(BandEstimate {
        beta_index,
        beta_physical: beta_index / q,
        k_min,
        shells_used: pts.len(),
        residual,
    })
}

/// Tail fit over a single field's shells, from `k_min` upward.
pub fn band_from_tail(f: &SpectralField, k_min: usize) -> Result<BandEstimate> {
    band_fit(&f.shell_sups(), f.grid().q(), k_min)
}

/// Tail fit over a window envelope, the closest available stand-in for the
/// limsup-in-time tail.
pub fn band_from_envelope(env: &ModeEnvelope, k_min: usize) -> Result<BandEstimate> {
    band_fit(&env.shell_sups(), env.grid().q(), k_min)
}

/// One mode's window sups and bootstrap ratio.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeRatio {
    pub kx: i64,
    pub ky: i64,
    /// Window sup of `|k|_1^3 |u_hat_k|`.
    pub sup_w: f64,
    /// Window sup of `|k|_1^3 |mu u_hat_k + N(u)_k|`.
    pub sup_theta: f64,
    /// `sup_w c1 |k|_1^gamma / sup_theta`; absent when the denominator sup
    /// vanished and there is nothing to compare (vacuous mode).
    pub ratio: Option<f64>,
    pub flagged: bool,
}

/// Per-mode outcome of the bootstrap inequality measurement.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapReport {
    pub entries: Vec<ModeRatio>,
    /// Modes with a defined ratio.
    pub n_checked: usize,
    pub n_vacuous: usize,
    pub n_flagged: usize,
    /// Among checked modes, the fraction with ratio <= 1 + tol; NaN when
    /// every mode was vacuous.
    pub fraction_within: f64,
    pub tol: f64,
    pub window: (f64, f64),
}

/// Measure, mode by mode, whether the window sups satisfy
/// `sup |w_hat_k| <= sup |theta_hat_k| / (c1 |k|_1^gamma)`, the inequality
/// the boundedness argument bootstraps on. Ratios above `1 + tol` are
/// flagged, never fatal: a finite window only approximates the limsup, so
/// violations are findings to report.
///
/// `linear_only` mirrors the run that produced the window: when the run
/// dropped the quadratic term, `theta` reduces to `mu w` and the comparison
/// stays consistent with the dynamics actually integrated. Sups for both
/// sides are taken over the same snapshots so neither side samples a denser
/// time set than the other.
pub fn bootstrap_inequality_check(
    window: &WindowData,
    cert: &DissipationCertificate,
    linear_only: bool,
    tol: f64,
) -> Result<BootstrapReport> {
    if !cert.verified {
        return Err(Error::Precondition(
            "bootstrap check needs a verified dissipation certificate".into(),
        ));
    }
    let (first, _) = window
        .snapshots
        .split_first()
        .ok_or_else(|| Error::Precondition("empty window: no snapshots".into()))?;
    let grid = first.1.grid();
    if grid.d() != 2 {
        return Err(Error::Precondition(format!(
            "bootstrap check is defined for 2-d runs (grid is {}-d)",
            grid.d()
        )));
    }
    let n = grid.n_total();
    let mut sup_w = vec![0.0f64; n];
    let mut sup_theta = vec![0.0f64; n];
    let mut ws = if linear_only {
        None
    } else {
        Some(NonlinearWorkspace::new(grid))
    };
    let mut nbuf = SpectralField::zeros(grid);
    for (_, u) in &window.snapshots {
        if u.grid() != grid {
            return Err(Error::Precondition(
                "window snapshots live on different grids".into(),
            ));
        }
        if let Some(ws) = ws.as_mut() {
            nonlinear_term_into(u, ws, &mut nbuf);
        }
        for (idx, m) in grid.modes() {
            let w3 = m.norm1_pow(3.0);
            let u_k = u.coeffs()[idx];
            let theta_k = if linear_only {
                cert.mu * u_k
            } else {
                cert.mu * u_k + nbuf.coeffs()[idx]
            };
            let w_abs = w3 * u_k.norm();
            let th_abs = w3 * theta_k.norm();
            if w_abs > sup_w[idx] {
                sup_w[idx] = w_abs;
            }
            if th_abs > sup_theta[idx] {
                sup_theta[idx] = th_abs;
            }
        }
    }

    let mut entries = Vec::with_capacity(n);
    let mut n_checked = 0usize;
    let mut n_vacuous = 0usize;
    let mut n_flagged = 0usize;
    let mut n_within = 0usize;
    for (idx, m) in grid.modes() {
        let (ratio, flagged) = if sup_theta[idx] == 0.0 {
            n_vacuous += 1;
            (None, false)
        } else {
            let r = sup_w[idx] * cert.c1 * m.norm1_pow(cert.gamma) / sup_theta[idx];
            n_checked += 1;
            let f = r > 1.0 + tol;
            if f {
                n_flagged += 1;
            } else {
                n_within += 1;
            }
            (Some(r), f)
        };
        entries.push(ModeRatio {
            kx: m.kx,
            ky: m.ky,
            sup_w: sup_w[idx],
            sup_theta: sup_theta[idx],
            ratio,
            flagged,
        });
    }
    let fraction_within = if n_checked == 0 {
        f64::NAN
    } else {
        n_within as f64 / n_checked as f64
    };
    Ok(BootstrapReport {
        entries,
        n_checked,
        n_vacuous,
        n_flagged,
        fraction_within,
        tol,
        window: (window.t0, window.t1),
    })
}

/// One row of the gamma threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRow {
    pub gamma: f64,
    /// Tail-slope band estimate in shell-index units (NaN after a blow-up).
    pub beta_tail: f64,
    /// `1/(e a_hat)` from the growth fit (NaN after a blow-up).
    pub beta_lemma1: f64,
    pub blow_up: bool,
}

/// Default `s` grid for growth fits: march from 0 in `s_step` increments
/// until the profile argmax nears truncation, the values near overflow, or
/// the optional cap is hit.
pub fn default_s_grid(
    shells: &[f64],
    max_shell: usize,
    p: f64,
    s_step: f64,
    s_max: Option<f64>,
) -> Vec<f64> {
    let margin = max_shell.saturating_sub(4);
    let mut grid = Vec::new();
    let hard_cap = 32.0 * (max_shell as f64).max(1.0);
    for i in 0.. {
        let s = i as f64 * s_step;
        if let Some(cap) = s_max {
            if s > cap + 1e-12 {
                break;
            }
        }
        grid.push(s);
        if s_max.is_none() {
            let (h, m) = weighted_shell_max(shells, s, p);
            if h == 0.0 || h > 1e280 || m > margin || s > hard_cap {
                break;
            }
        }
    }
    grid
}

/// Independent runs of the base config with the symbol's order swept over
/// `gammas`; rows come back in input order. Each run draws the same seed, so
/// a repeated sweep is bit-identical. Per-run blow-ups are recorded in the
/// flag column with NaN estimates rather than aborting the sweep. Run
/// artifacts are not written (the caller owns serialization of the table),
/// which also keeps parallel rows from colliding on output paths.
pub fn gamma_sweep(base: &RunConfig, gammas: &[f64]) -> Result<Vec<GammaRow>> {
    let mu_tilde = match base.symbol {
        SymbolSpec::GeneralizedGamma { mu_tilde, .. } => mu_tilde,
        _ => {
            return Err(Error::Precondition(
                "gamma sweep requires a generalized_gamma base config".into(),
            ))
        }
    };
    gammas
        .par_iter()
        .map(|&gamma| {
            let mut cfg = base.clone();
            cfg.symbol = SymbolSpec::GeneralizedGamma { gamma, mu_tilde };
            cfg.output.dir = None;
            let out = integrate(&cfg)?;
            if matches!(out.outcome, RunOutcome::BlowUp { .. }) {
                return Ok(GammaRow {
                    gamma,
                    beta_tail: f64::NAN,
                    beta_lemma1: f64::NAN,
                    blow_up: true,
                });
            }
            let env = &out.window.envelope;
            let band = band_from_envelope(env, cfg.diagnostics.tail_k_min)?;
            let shells = env.shell_sups();
            let d = &cfg.diagnostics;
            let s_grid =
                default_s_grid(&shells, env.grid().max_shell(), d.weight_p, d.s_step, d.s_max);
            let prof = h_profile_from_envelope(
                env,
                (out.window.t0, out.window.t1),
                &s_grid,
                d.weight_p,
            )?;
            let fit = fit_growth_constants(&prof);
            Ok(GammaRow {
                gamma,
                beta_tail: band.beta_index.max(0.0),
                beta_lemma1: fit.beta_lemma1(),
                blow_up: false,
            })
        })
        .collect()
}

pub fn gamma_rows_to_csv(rows: &[GammaRow]) -> String {
    let mut s = String::from("gamma,beta_tail,beta_lemma1,blow_up\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.gamma, r.beta_tail, r.beta_lemma1, r.blow_up
        ));
    }
    s
}

/// Band measurements of one completed run, self-describing enough to stand
/// alone: the producing config hash and the content id of the final state
/// are embedded so a report can be traced to its run.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticityReport {
    /// Tail band in shell-index units, clamped to 0 from below.
    pub beta_tail: f64,
    /// Tail band per physical wavenumber (`beta_tail / q`).
    pub beta_tail_physical: f64,
    /// Growth-fit lower bound `1/(e a_hat)`.
    pub beta_lemma1: f64,
    pub m_hat: f64,
    pub a_hat: f64,
    pub fit_range: (f64, f64),
    pub fit_residual: f64,
    pub tail_residual: f64,
    pub tail_shells_used: usize,
    pub weight_p: f64,
    pub window: (f64, f64),
    /// SHA-256 of the canonical JSON of the producing config.
    pub config_sha256: String,
    /// SHA-256 of the final-state checkpoint image.
    pub content_id: String,
}

pub fn analyticity_report(
    config: &RunConfig,
    output: &IntegrationOutput,
) -> Result<AnalyticityReport> {
    let env = &output.window.envelope;
    let d = &config.diagnostics;
    let band = band_from_envelope(env, d.tail_k_min)?;
    let shells = env.shell_sups();
    let s_grid = default_s_grid(&shells, env.grid().max_shell(), d.weight_p, d.s_step, d.s_max);
    let window = (output.window.t0, output.window.t1);
    let profile = h_profile_from_envelope(env, window, &s_grid, d.weight_p)?;
    let fit = fit_growth_constants(&profile);
    let config_json = serde_json::to_vec(config)
        .map_err(|e| Error::Format(format!("config serialization failed: {e}")))?;
    Ok(AnalyticityReport {
        beta_tail: band.beta_index.max(0.0),
        beta_tail_physical: band.beta_physical.max(0.0),
        beta_lemma1: fit.beta_lemma1(),
        m_hat: fit.m_hat,
        a_hat: fit.a_hat,
        fit_range: fit.fit_range,
        fit_residual: fit.residual,
        tail_residual: band.residual,
        tail_shells_used: band.shells_used,
        weight_p: d.weight_p,
        window,
        config_sha256: io::sha256_hex(&config_json),
        content_id: io::sha256_hex(&io::checkpoint_bytes(&output.final_state.u)),
    })
}
