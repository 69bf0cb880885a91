//! `ksband`: command-line front end for the solver and diagnostics library.
//!
//! Every run-producing subcommand leaves a `manifest.json` in its output
//! directory, written atomically and last, listing each emitted file with a
//! SHA-256 checksum; a missing or stale manifest therefore marks an
//! interrupted run. Analysis subcommands print their JSON report to stdout
//! unless `--out` redirects it to a directory.
//!
//! Exit codes: 0 success, 2 configuration or parameter error, 3 trajectory
//! blow-up, 4 I/O or file-format error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use ksband_core::bessel;
use ksband_core::config::{parse_config, RunConfig};
use ksband_core::diagnostics::{
    analyticity_report, band_from_tail, gamma_rows_to_csv, gamma_sweep, BandEstimate,
};
use ksband_core::integrator::{integrate, RunOutcome};
use ksband_core::io::{read_checkpoint, sha256_file, sha256_hex, write_json_atomic};
use ksband_core::lemmas::{
    lemma1_oracle, lemma2_uniformity_scan, Lemma1Report, ScanReport, ALL_ITEMS,
};
use ksband_core::symbols::{
    certify_dissipation, fit_dissipation_order, DissipationCertificate, FittedDissipation,
};
use ksband_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ksband",
    version,
    about = "Pseudo-spectral solver and analyticity-band diagnostics \
             for dissipative-dispersive interface equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and scans (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Override the config's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory; writes the series CSV, checkpoints, and the
    /// band report into the output directory.
    Simulate,
    /// Rerun the configured generalized-dissipation base case across a list
    /// of exponents and tabulate the measured bands. Rows that blow up are
    /// recorded in the table; the sweep itself still completes.
    SweepGamma {
        /// Comma-separated dissipation exponents, e.g. 1.1,1.5,2.
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
    },
    /// Evaluate the summation-bound suite and the constructed-envelope
    /// oracle; emits one JSON report with per-check verdicts.
    VerifyLemmas {
        /// Scan every weight pair with k + l up to this value.
        #[arg(long, default_value_t = 30)]
        k_max: u64,
        /// Truncation cutoff for the infinite sums.
        #[arg(long, default_value_t = 2000)]
        cutoff: u64,
    },
    /// Exhaustively check a dissipation lower bound for the configured
    /// symbol, either with explicit constants or fitted ones.
    CertifySymbol {
        /// Lower-bound coefficient c1 (with --gamma and --mu).
        #[arg(long)]
        c1: Option<f64>,
        /// Dissipation exponent gamma.
        #[arg(long)]
        gamma: Option<f64>,
        /// Additive slack mu.
        #[arg(long)]
        mu: Option<f64>,
        /// Check every mode with |k| up to this radius.
        #[arg(long, default_value_t = 64)]
        radius: u64,
        /// Fit (c1, gamma, mu) from the symbol before certifying.
        #[arg(long)]
        fit: bool,
    },
    /// Tabulate modified Bessel values I_n(x) for n = 0..=n_max.
    BesselTable {
        /// Argument x.
        #[arg(long)]
        x: f64,
        /// Largest order.
        #[arg(long, default_value_t = 20)]
        n_max: usize,
    },
    /// Measure the spectral tail decay of a stored checkpoint.
    EstimateBand {
        /// Checkpoint file written by `simulate`.
        checkpoint: PathBuf,
        /// Smallest shell entering the tail fit.
        #[arg(long, default_value_t = 8)]
        k_min: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        // The pool is process-global; a repeated initialization only returns
        // an error, which is fine to drop.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Format(_) => 4,
        Error::BlowUp { .. } => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Simulate => simulate(cli),
        Command::SweepGamma { gammas } => sweep_gamma(cli, gammas),
        Command::VerifyLemmas { k_max, cutoff } => verify_lemmas(cli, *k_max, *cutoff),
        Command::CertifySymbol {
            c1,
            gamma,
            mu,
            radius,
            fit,
        } => certify_symbol(cli, *c1, *gamma, *mu, *radius, *fit),
        Command::BesselTable { x, n_max } => bessel_table(cli, *x, *n_max),
        Command::EstimateBand { checkpoint, k_min } => estimate_band(cli, checkpoint, *k_min),
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

const ARTIFACT_VERSION: u32 = 1;

#[derive(Serialize)]
struct FileEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    artifact_version: u32,
    command: String,
    config_sha256: Option<String>,
    started_unix: u64,
    finished_unix: u64,
    outcome: String,
    files: Vec<FileEntry>,
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if entry.file_type()?.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Checksum everything currently in the output directory and write the
/// manifest last, atomically.
fn write_manifest(
    dir: &Path,
    command: &str,
    config_sha256: Option<String>,
    started_unix: u64,
    outcome: &str,
) -> Result<()> {
    let mut paths = Vec::new();
    collect_files(dir, &mut paths)?;
    paths.sort();
    let mut files = Vec::new();
    for path in paths {
        let rel = path
            .strip_prefix(dir)
            .unwrap_or(&path)
            .display()
            .to_string();
        if rel == "manifest.json" {
            continue;
        }
        files.push(FileEntry {
            bytes: fs::metadata(&path)?.len(),
            sha256: sha256_file(&path)?,
            path: rel,
        });
    }
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION,
        command: command.into(),
        config_sha256,
        started_unix,
        finished_unix: unix_now(),
        outcome: outcome.into(),
        files,
    };
    write_json_atomic(&dir.join("manifest.json"), &manifest)
}

/// Load `--config`, then apply the `--seed` and `--out` overrides.
fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --config <PATH>".into()))?;
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.integrator.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("config serializes"))
}

/// Create the run directory and store the fully resolved config next to the
/// artifacts it produced.
fn prepare_run_dir(cfg: &RunConfig, subcommand: &str) -> Result<PathBuf> {
    let dir = cfg.output.dir.clone().ok_or_else(|| {
        Error::Config(format!(
            "{subcommand} needs an output directory: pass --out or set [output] dir"
        ))
    })?;
    let dir = PathBuf::from(dir);
    fs::create_dir_all(&dir)?;
    let text = toml::to_string_pretty(cfg)
        .map_err(|e| Error::Format(format!("config serialization failed: {e}")))?;
    fs::write(dir.join("effective_config.toml"), text)?;
    Ok(dir)
}

fn simulate(cli: &Cli) -> Result<u8> {
    let started = unix_now();
    let cfg = load_config(cli)?;
    let dir = prepare_run_dir(&cfg, "simulate")?;
    let sha = config_hash(&cfg);

    let output = match integrate(&cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = write_manifest(&dir, "simulate", Some(sha), started, "error");
            return Err(e);
        }
    };

    let (outcome_name, code) = match &output.outcome {
        RunOutcome::Completed => ("completed", 0u8),
        RunOutcome::BlowUp {
            t,
            step,
            mode,
            magnitude,
        } => {
            eprintln!(
                "blow-up at t = {t:.6} (step {step}), mode ({}, {}), |u_hat| = {magnitude:.3e}",
                mode[0], mode[1]
            );
            ("blow_up", 3u8)
        }
    };

    if matches!(output.outcome, RunOutcome::Completed) {
        match analyticity_report(&cfg, &output) {
            Ok(report) => {
                write_json_atomic(&dir.join("report.json"), &report)?;
                if !cli.quiet {
                    eprintln!(
                        "t = {:.3}: beta_tail = {:.6} (physical {:.6}), envelope band = {:.6}",
                        output.final_state.t,
                        report.beta_tail,
                        report.beta_tail_physical,
                        report.beta_lemma1
                    );
                }
            }
            // A short or under-resolved run has no usable tail; the
            // trajectory artifacts stand on their own.
            Err(Error::InsufficientResolution { found, needed }) => {
                if !cli.quiet {
                    eprintln!("band fit skipped: {found} usable tail shells, need {needed}");
                }
            }
            Err(Error::FitDomain(msg)) => {
                if !cli.quiet {
                    eprintln!("band fit skipped: {msg}");
                }
            }
            Err(e) => {
                let _ = write_manifest(&dir, "simulate", Some(sha), started, "error");
                return Err(e);
            }
        }
    }

    write_manifest(&dir, "simulate", Some(sha), started, outcome_name)?;
    Ok(code)
}

fn sweep_gamma(cli: &Cli, gammas: &[f64]) -> Result<u8> {
    let started = unix_now();
    let cfg = load_config(cli)?;
    let dir = prepare_run_dir(&cfg, "sweep-gamma")?;
    let sha = config_hash(&cfg);

    let rows = match gamma_sweep(&cfg, gammas) {
        Ok(rows) => rows,
        Err(e) => {
            let _ = write_manifest(&dir, "sweep-gamma", Some(sha), started, "error");
            return Err(e);
        }
    };
    fs::write(dir.join("sweep.csv"), gamma_rows_to_csv(&rows))?;
    if !cli.quiet {
        for r in &rows {
            eprintln!(
                "gamma = {}: beta_tail = {:.6}{}",
                r.gamma,
                r.beta_tail,
                if r.blow_up { " (blow-up)" } else { "" }
            );
        }
    }
    write_manifest(&dir, "sweep-gamma", Some(sha), started, "completed")?;
    Ok(0)
}

/// Analysis reports go to stdout, or to `name` plus a manifest when `--out`
/// is given.
fn emit_report<T: Serialize>(cli: &Cli, command: &str, name: &str, value: &T) -> Result<()> {
    let started = unix_now();
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_json_atomic(&dir.join(name), value)?;
            write_manifest(dir, command, None, started, "completed")
        }
        None => {
            let text = serde_json::to_string_pretty(value)
                .map_err(|e| Error::Format(format!("report serialization failed: {e}")))?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct LemmaSuiteReport {
    k_max: u64,
    cutoff: u64,
    scans: Vec<ScanReport>,
    envelope_checks: Vec<Lemma1Report>,
    all_ok: bool,
}

fn verify_lemmas(cli: &Cli, k_max: u64, cutoff: u64) -> Result<u8> {
    let scans = ALL_ITEMS
        .iter()
        .map(|&item| lemma2_uniformity_scan(item, k_max, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let envelope_checks = [0.2, 0.5, 1.0, 5.0, 20.0]
        .iter()
        .map(|&a| lemma1_oracle(a, 1.0, 256, 4))
        .collect::<Result<Vec<_>>>()?;
    let all_ok =
        scans.iter().all(|s| s.within_bound) && envelope_checks.iter().all(|r| r.passed);
    if !all_ok {
        eprintln!("warning: a bound check failed; see the report for the offending entry");
    } else if !cli.quiet {
        for s in &scans {
            eprintln!(
                "item {}: sup {:.6} (+tail {:.6}) < {:.6} at ({}, {})",
                s.item,
                s.sup_partial,
                s.sup_with_tail - s.sup_partial,
                s.bound,
                s.arg_k,
                s.arg_l
            );
        }
    }
    let report = LemmaSuiteReport {
        k_max,
        cutoff,
        scans,
        envelope_checks,
        all_ok,
    };
    emit_report(cli, "verify-lemmas", "report.json", &report)?;
    Ok(0)
}

#[derive(Serialize)]
struct CertifyReport {
    family: String,
    q: f64,
    fitted: Option<FittedDissipation>,
    certificate: DissipationCertificate,
}

fn certify_symbol(
    cli: &Cli,
    c1: Option<f64>,
    gamma: Option<f64>,
    mu: Option<f64>,
    radius: u64,
    fit: bool,
) -> Result<u8> {
    let cfg = load_config(cli)?;
    let q = cfg.grid.build()?.q();
    let (fitted, c1, gamma, mu) = if fit {
        let f = fit_dissipation_order(&cfg.symbol, q, radius)?;
        (Some(f), f.c1, f.gamma, f.mu)
    } else {
        match (c1, gamma, mu) {
            (Some(c1), Some(gamma), Some(mu)) => (None, c1, gamma, mu),
            _ => {
                return Err(Error::Config(
                    "certify-symbol needs --c1, --gamma and --mu together, or --fit".into(),
                ))
            }
        }
    };
    let certificate = certify_dissipation(&cfg.symbol, q, c1, gamma, mu, radius)?;
    if !cli.quiet {
        eprintln!(
            "{}: verified = {}, worst margin {:.6e} at ({}, {})",
            cfg.symbol.family_name(),
            certificate.verified,
            certificate.worst_margin,
            certificate.worst_mode.kx,
            certificate.worst_mode.ky
        );
    }
    let report = CertifyReport {
        family: cfg.symbol.family_name().into(),
        q,
        fitted,
        certificate,
    };
    emit_report(cli, "certify-symbol", "certificate.json", &report)?;
    Ok(0)
}

fn bessel_table(cli: &Cli, x: f64, n_max: usize) -> Result<u8> {
    let started = unix_now();
    let values = bessel::bessel_i_sequence(n_max, x)?;
    let mut csv = String::from("n,i_n\n");
    for (n, v) in values.iter().enumerate() {
        csv.push_str(&format!("{n},{v:.17e}\n"));
    }
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("bessel.csv"), &csv)?;
            write_manifest(dir, "bessel-table", None, started, "completed")?;
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

#[derive(Serialize)]
struct BandReport {
    checkpoint: String,
    checkpoint_sha256: String,
    band: BandEstimate,
}

fn estimate_band(cli: &Cli, checkpoint: &Path, k_min: usize) -> Result<u8> {
    let field = read_checkpoint(checkpoint)?;
    let band = band_from_tail(&field, k_min)?;
    if !cli.quiet {
        eprintln!(
            "beta_tail = {:.6} (physical {:.6}) from {} shells",
            band.beta_index, band.beta_physical, band.shells_used
        );
    }
    let report = BandReport {
        checkpoint: checkpoint.display().to_string(),
        checkpoint_sha256: sha256_file(checkpoint)?,
        band,
    };
    emit_report(cli, "estimate-band", "band.json", &report)?;
    Ok(0)
}
