//! Run configuration: a single TOML file with explicit seed and step size,
//! so completed runs are reproducible bit-for-bit on one platform.
//!
//! Unknown keys are rejected everywhere, including inside the `[symbol]`
//! table (a typo must never become a silent default).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::symbols::SymbolSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Space dimension, 1 or 2.
    pub d: usize,
    /// Samples per dimension; power of two, at least 8.
    pub n_per_dim: usize,
    /// Spatial period of the solution cell.
    pub period: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.d, self.n_per_dim, self.period)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Fixed step size.
    pub dt: f64,
    /// Integration horizon; 0 means initial state only.
    pub t_final: f64,
    /// Diagnostics row cadence in steps.
    pub record_every: u64,
    /// Seed for the initial coefficients.
    pub seed: u64,
    /// Initial-data amplitude.
    pub rho: f64,
    /// Drop the quadratic term (exact exponential decay reference runs).
    pub linear_only: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            t_final: 100.0,
            record_every: 10,
            seed: 1,
            rho: 0.1,
            linear_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Exponent of the coefficient weight `|k|^p` (the boundedness argument
    /// uses 3).
    pub weight_p: f64,
    /// Fraction of the horizon kept as the statistics window `[T(1-f), T]`.
    pub window_fraction: f64,
    /// Spacing of the `s` grid for the growth-constant profile.
    pub s_step: f64,
    /// Upper end of the `s` grid; when absent it is chosen from the grid
    /// resolution.
    pub s_max: Option<f64>,
    /// Smallest shell entering band tail fits.
    pub tail_k_min: usize,
    /// Cap on stored window snapshots (thinned evenly beyond this).
    pub max_window_snapshots: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            weight_p: 3.0,
            window_fraction: 0.5,
            s_step: 0.5,
            s_max: None,
            tail_k_min: 8,
            max_window_snapshots: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; `None` keeps everything in memory.
    pub dir: Option<String>,
    /// Checkpoint cadence in steps; 0 disables intermediate checkpoints.
    pub checkpoint_every_steps: u64,
    /// Emit the diagnostics time series as CSV (only when `dir` is set).
    pub write_series_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            checkpoint_every_steps: 0,
            write_series_csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub symbol: SymbolSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Domain validation beyond what deserialization enforces. Problems are
    /// collected so one pass reports every offending field.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(Error::Config(msg)) = self.grid.build().map(|_| ()) {
            problems.push(format!("grid: {msg}"));
        }
        if let Err(Error::Config(msg)) = self.symbol.validate_for(self.grid.d).map(|_| ()) {
            problems.push(format!("symbol: {msg}"));
        }
        let it = &self.integrator;
        if !(it.dt.is_finite() && it.dt > 0.0) {
            problems.push(format!("integrator.dt: must be positive (got {})", it.dt));
        }
        if !(it.t_final.is_finite() && it.t_final >= 0.0) {
            problems.push(format!(
                "integrator.t_final: must be nonnegative (got {})",
                it.t_final
            ));
        }
        if it.record_every == 0 {
            problems.push("integrator.record_every: must be at least 1".into());
        }
        if !(it.rho.is_finite() && it.rho >= 0.0) {
            problems.push(format!("integrator.rho: must be nonnegative (got {})", it.rho));
        }
        let dg = &self.diagnostics;
        if !(dg.weight_p.is_finite() && dg.weight_p >= 0.0) {
            problems.push(format!(
                "diagnostics.weight_p: must be nonnegative (got {})",
                dg.weight_p
            ));
        }
        if !(dg.window_fraction > 0.0 && dg.window_fraction <= 1.0) {
            problems.push(format!(
                "diagnostics.window_fraction: must lie in (0, 1] (got {})",
                dg.window_fraction
            ));
        }
        if !(dg.s_step.is_finite() && dg.s_step > 0.0) {
            problems.push(format!(
                "diagnostics.s_step: must be positive (got {})",
                dg.s_step
            ));
        }
        if let Some(s_max) = dg.s_max {
            if !(s_max.is_finite() && s_max >= dg.s_step) {
                problems.push(format!(
                    "diagnostics.s_max: must be at least s_step (got {s_max})"
                ));
            }
        }
        if dg.tail_k_min < 1 {
            problems.push("diagnostics.tail_k_min: must be at least 1".into());
        }
        if dg.max_window_snapshots < 2 {
            problems.push("diagnostics.max_window_snapshots: must be at least 2".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }
}

/// Keys admitted in the `[symbol]` table per family. The family enum is
/// internally tagged, which disables serde's own unknown-key rejection, so
/// the check runs on the raw table before typed deserialization.
fn check_symbol_keys(table: &toml::Table) -> Result<()> {
    let symbol = match table.get("symbol") {
        Some(toml::Value::Table(t)) => t,
        _ => return Ok(()), // absence surfaces as a missing-field error later
    };
    let family = match symbol.get("family") {
        Some(toml::Value::String(f)) => f.as_str(),
        _ => return Ok(()),
    };
    let allowed: &[&str] = match family {
        "kuramoto_sivashinsky" | "pinto" => &[],
        "topper_kawahara" => &["alpha1", "alpha2", "alpha3", "alpha4"],
        "coward_hall" => &["alpha", "delta"],
        "generalized_gamma" => &["gamma", "mu_tilde"],
        _ => return Ok(()), // unknown family surfaces from the enum itself
    };
    for key in symbol.keys() {
        if key != "family" && !allowed.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "symbol: unknown key `{key}` for family {family}"
            )));
        }
    }
    Ok(())
}

/// Parse and fully validate a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    check_symbol_keys(&raw)?;
    let config: RunConfig =
        raw.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
