//! Run artifacts: the time-series CSV and the TOML metadata documents.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{DiagnosticsSeries, Trajectory};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};

pub const RUN_CSV: &str = "run.csv";
pub const RUN_META: &str = "run.meta";
pub const CHECK_META: &str = "check.meta";
pub const CERTIFICATE_META: &str = "certificate.meta";
pub const SWEEP_CSV: &str = "sweep.csv";

pub const DIAGNOSTIC_COLUMNS: [&str; 8] = ["D_theta", "D_omega", "Q", "P", "A", "B", "E1", "E2"];

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

/// 17 significant digits: enough for an exact `f64` round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("theta_{i}")));
    h.extend((1..=n).map(|i| format!("omega_{i}")));
    h.extend(DIAGNOSTIC_COLUMNS.iter().map(|s| s.to_string()));
    h
}

pub fn write_run_csv(path: &Path, traj: &Trajectory, series: &DiagnosticsSeries) -> Result<()> {
    let n = traj.params().n();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(csv_header(n)).map_err(|e| io_err(path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(1 + 2 * n + DIAGNOSTIC_COLUMNS.len());
    for (s, d) in traj.states().iter().zip(&series.samples) {
        row.clear();
        row.push(fmt_f64(s.t));
        row.extend(s.theta.iter().map(|x| fmt_f64(*x)));
        row.extend(s.omega.iter().map(|x| fmt_f64(*x)));
        row.extend(
            [d.d_theta, d.d_omega, d.q, d.p, d.a, d.b, d.e1, d.e2]
                .iter()
                .map(|x| fmt_f64(*x)),
        );
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// A CSV loaded as named columns.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|k| self.columns[k].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Number of oscillators implied by the `theta_*` columns.
    pub fn oscillators(&self) -> usize {
        self.header.iter().filter(|h| h.starts_with("theta_")).count()
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(io_err(path, "empty CSV (no header)"));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        for (k, field) in rec.iter().enumerate() {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|e| io_err(path, format!("row {}, column {}: {e}", line + 2, header[k])))?;
            columns[k].push(x);
        }
    }
    Ok(Table { header, columns })
}

/// Rebuilds a trajectory from the state columns of a run CSV.
pub fn read_trajectory(path: &Path, params: &ModelParams) -> Result<Trajectory> {
    let table = read_table(path)?;
    let n = params.n();
    let expected = csv_header(n);
    if table.header[..] != expected[..] {
        if table.oscillators() != n {
            return Err(io_err(
                path,
                format!("has {} oscillators, the model has {n}", table.oscillators()),
            ));
        }
        return Err(io_err(path, format!("unexpected header; expected {}", expected.join(","))));
    }
    let col = |k: usize| &table.columns[k];
    let states = (0..table.rows())
        .map(|r| State {
            t: col(0)[r],
            theta: (0..n).map(|i| col(1 + i)[r]).collect(),
            omega: (0..n).map(|i| col(1 + n + i)[r]).collect(),
        })
        .collect();
    Trajectory::from_states(params.clone(), None, states)
}

pub fn write_toml<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let text = toml::to_string(doc).map_err(|e| io_err(path, e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}
