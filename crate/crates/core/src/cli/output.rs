//! Snapshot images and CSV series.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::{RunRecord, StabilityScanResult};
use crate::lattice::SpinLattice;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    fs::write(path, bytes).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Grey level of a z-component: -1 is black, +1 white.
pub fn pixel(z: f64) -> u8 {
    (255.0 * (z + 1.0) / 2.0).round().clamp(0.0, 255.0) as u8
}

/// Binary PGM of the spin z-components, row `i` top to bottom.
pub fn snapshot_bytes(lat: &SpinLattice) -> Vec<u8> {
    let n = lat.n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(lat.spins().iter().map(|s| pixel(s.z)));
    out
}

pub fn snapshot_name(step: usize) -> String {
    format!("snap_{step:08}.pgm")
}

pub fn write_snapshot(lat: &SpinLattice, path: &Path) -> Result<(), OutputError> {
    write_file(path, &snapshot_bytes(lat))
}

pub const SERIES_HEADER: &str = "step,time,energy,alpha,max_laplacian,max_norm_drift";

/// 17 significant digits, enough to round-trip any `f64`.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_series(records: &[RunRecord]) -> String {
    let mut s = String::with_capacity(128 * (records.len() + 1));
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.step,
            real(r.time),
            real(r.energy),
            real(r.alpha),
            real(r.max_laplacian),
            real(r.max_norm_drift)
        );
    }
    s
}

pub fn write_series(records: &[RunRecord], path: &Path) -> Result<(), OutputError> {
    write_file(path, format_series(records).as_bytes())
}

pub fn parse_series(text: &str, path: &Path) -> Result<Vec<RunRecord>, OutputError> {
    let err = |line: usize, msg: String| OutputError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SERIES_HEADER => {}
        other => return Err(err(1, format!("bad header {other:?}"))),
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(lineno, format!("expected 6 fields, got {}", fields.len())));
        }
        let real = |i: usize| fields[i].parse::<f64>().map_err(|e| err(lineno, format!("field {i}: {e}")));
        records.push(RunRecord {
            step: fields[0].parse().map_err(|e| err(lineno, format!("step: {e}")))?,
            time: real(1)?,
            energy: real(2)?,
            alpha: real(3)?,
            max_laplacian: real(4)?,
            max_norm_drift: real(5)?,
        });
    }
    Ok(records)
}

pub fn read_series(path: &Path) -> Result<Vec<RunRecord>, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_series(&text, path)
}

pub const SCAN_HEADER: &str = "dt,seed,survived_until,blew_up";

pub fn format_scan(results: &[StabilityScanResult]) -> String {
    let mut s = String::from(SCAN_HEADER);
    s.push('\n');
    for r in results {
        let _ = writeln!(s, "{},{},{},{}", r.dt, r.seed, real(r.survived_until), r.blew_up);
    }
    s
}

pub fn write_scan(results: &[StabilityScanResult], path: &Path) -> Result<(), OutputError> {
    write_file(path, format_scan(results).as_bytes())
}
