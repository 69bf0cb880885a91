//! On-disk formats: binary coefficient checkpoints, CSV exports, atomically
//! written JSON, and content hashing for manifests.
//!
//! Checkpoint layout (little-endian f64 throughout):
//! * header: `d`, `n_per_dim`, `period` (three f64 values);
//! * body: `(re, im)` pairs of every coefficient in FFT storage order
//!   (row-major in 2D).
//!
//! The body is the exact bit pattern of the in-memory field, so a
//! write/read round trip is lossless. Reads validate the header through the
//! usual grid checks and reject non-Hermitian bodies.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::DiagRow;

/// Serialized checkpoint image: the byte-for-byte content of a checkpoint
/// file. Also used as the content identity of a field (see `sha256_hex`).
pub fn checkpoint_bytes(field: &SpectralField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(24 + 16 * field.coeffs().len());
    for v in [grid.d() as f64, grid.n_per_dim() as f64, grid.period()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn write_checkpoint(path: &Path, field: &SpectralField) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(&checkpoint_bytes(field))?;
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<SpectralField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || bytes.len() % 16 != 8 {
        return Err(Error::Format(format!(
            "checkpoint {} has {} bytes; expected 24-byte header plus 16 per coefficient",
            path.display(),
            bytes.len()
        )));
    }
    let f64_at = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    let (d, n, period) = (f64_at(0), f64_at(1), f64_at(2));
    if d.fract() != 0.0 || n.fract() != 0.0 || !(1.0..=2.0).contains(&d) || !(0.0..1e9).contains(&n)
    {
        return Err(Error::Format(format!(
            "checkpoint {} header is not a valid grid: d = {d}, n = {n}",
            path.display()
        )));
    }
    let grid = Grid::new(d as usize, n as usize, period)?;
    let body = (bytes.len() - 24) / 16;
    if body != grid.n_total() {
        return Err(Error::Format(format!(
            "checkpoint {} holds {} coefficients, grid needs {}",
            path.display(),
            body,
            grid.n_total()
        )));
    }
    let coeffs: Vec<Complex64> = (0..body)
        .map(|i| Complex64::new(f64_at(3 + 2 * i), f64_at(4 + 2 * i)))
        .collect();
    SpectralField::from_coeffs(grid, coeffs)
}

/// Coefficient table as CSV (`k[,l],re,im` per retained mode, storage
/// order). Floats print in shortest round-trip form.
pub fn write_field_csv(path: &Path, field: &SpectralField) -> Result<()> {
    let grid = field.grid();
    let mut out = BufWriter::new(fs::File::create(path)?);
    if grid.d() == 1 {
        writeln!(out, "k,re,im")?;
    } else {
        writeln!(out, "kx,ky,re,im")?;
    }
    for (idx, m) in grid.modes() {
        let c = field.coeffs()[idx];
        if grid.d() == 1 {
            writeln!(out, "{},{},{}", m.kx, c.re, c.im)?;
        } else {
            writeln!(out, "{},{},{},{}", m.kx, m.ky, c.re, c.im)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub const SERIES_CSV_HEADER: &str = "t,l2_grid,l2_phys,max_abs_coeff,mean_re,mean_im";

/// Diagnostics time series as CSV, one row per recorded step.
pub fn write_series_csv(path: &Path, rows: &[DiagRow]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{SERIES_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t, r.l2_grid, r.l2_phys, r.max_abs_coeff, r.mean_re, r.mean_im
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Serialize as pretty JSON into `path` via a temporary sibling plus rename,
/// so the file is either absent or complete, never truncated.
pub fn write_json_atomic<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("json serialization failed: {e}")))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text.as_bytes())?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)?;
    let mut h = Sha256::new();
    std::io::copy(&mut file, &mut h)?;
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::from_mode_fn(grid, |m| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                / (1.0 + m.norm1() as f64)
        })
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (d, n) in [(1usize, 32usize), (2, 16)] {
            let grid = Grid::new(d, n, 12.5).unwrap();
            let f = random_field(grid, 7);
            let path = dir.path().join(format!("f{d}.bin"));
            write_checkpoint(&path, &f).unwrap();
            let g = read_checkpoint(&path).unwrap();
            assert_eq!(g.grid(), grid);
            assert_eq!(g.coeffs(), f.coeffs());
        }
    }

    #[test]
    fn corrupt_checkpoints_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");

        fs::write(&path, [0u8; 10]).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Format(_))));

        // Valid length, nonsense header.
        let mut bytes = Vec::new();
        for v in [3.0f64, 8.0, 1.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&[0u8; 16 * 8]);
        fs::write(&path, &bytes).unwrap();
        assert!(read_checkpoint(&path).is_err());

        // Correct header, asymmetric body.
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let mut f = SpectralField::zeros(grid);
        f.set_pair(crate::grid::Mode::one_d(1), Complex64::new(1.0, 1.0));
        write_checkpoint(&path, &f).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // Overwrite the k = -1 coefficient (storage slot 7) with junk.
        let off = 24 + 7 * 16;
        bytes[off..off + 8].copy_from_slice(&5.0f64.to_le_bytes());
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Format(_))));
    }

    #[test]
    fn field_csv_lists_every_mode() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(2, 8, 2.0).unwrap();
        let f = random_field(grid, 3);
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &f).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("kx,ky,re,im"));
        assert_eq!(lines.count(), grid.n_total());
        // Shortest round-trip float text preserves the value exactly.
        let second = text.lines().nth(1).unwrap();
        let re: f64 = second.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(re, f.coeffs()[0].re);
    }

    #[test]
    fn atomic_json_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let value = serde_json::json!({"alpha": 1.5, "items": [1, 2, 3]});
        write_json_atomic(&path, &value).unwrap();
        assert!(!path.with_extension("tmp").exists());
        let back: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, value);
    }

    #[test]
    fn sha256_matches_known_vector() {
        // FIPS 180-2 test vector for "abc".
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc.txt");
        fs::write(&path, b"abc").unwrap();
        assert_eq!(sha256_file(&path).unwrap(), sha256_hex(b"abc"));
    }
}
