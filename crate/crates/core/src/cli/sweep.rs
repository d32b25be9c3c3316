//! Parameter sweeps over `κ × m × α`, one isolated simulate + certify
//! pipeline per grid point.

use std::path::Path;

use rayon::prelude::*;

use super::config::{Resolved, RunConfig, DEFAULT_SYNC_THRESHOLD};
use super::output::{fmt_f64, io_err};
use crate::analysis::{certify_inequalities, detect_t_star, diagnostics, post_entrance_rate};
use crate::energy::check_conditions;
use crate::error::{Error, Result};
use crate::integrator::simulate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub kappa: f64,
    pub m: f64,
    pub alpha: f64,
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: GridPoint,
    pub c: Option<u32>,
    pub dt: Option<f64>,
    pub conditions_pass: Option<bool>,
    pub failed_conditions: Vec<&'static str>,
    /// `ok`, `diverged`, or `error`.
    pub status: &'static str,
    pub message: String,
    pub d_omega_final: Option<f64>,
    pub sync: bool,
    pub t_star: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub certified: Option<bool>,
}

impl SweepRow {
    fn empty(point: GridPoint) -> Self {
        Self {
            point,
            c: None,
            dt: None,
            conditions_pass: None,
            failed_conditions: Vec::new(),
            status: "error",
            message: String::new(),
            d_omega_final: None,
            sync: false,
            t_star: None,
            fitted_rate: None,
            lambda: None,
            lambda_tilde: None,
            certified: None,
        }
    }
}

pub const SWEEP_HEADER: [&str; 15] = [
    "kappa",
    "m",
    "alpha",
    "c",
    "dt",
    "conditions_pass",
    "failed_conditions",
    "status",
    "d_omega_final",
    "sync",
    "t_star",
    "fitted_rate",
    "lambda",
    "lambda_tilde",
    "certified",
];

/// Grid in `κ`-major, then `m`, then `α` order. Axes missing from the
/// `[sweep]` section hold the base model value.
pub fn grid(cfg: &RunConfig) -> Vec<GridPoint> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let kappas = sweep.kappa.unwrap_or_else(|| vec![cfg.model.kappa]);
    let ms = sweep.m.unwrap_or_else(|| vec![cfg.model.m]);
    let alphas = sweep.alpha.unwrap_or_else(|| vec![cfg.model.alpha]);
    let mut out = Vec::with_capacity(kappas.len() * ms.len() * alphas.len());
    for &kappa in &kappas {
        for &m in &ms {
            for &alpha in &alphas {
                out.push(GridPoint { kappa, m, alpha });
            }
        }
    }
    out
}

pub fn sync_threshold(cfg: &RunConfig) -> f64 {
    cfg.sweep
        .as_ref()
        .and_then(|s| s.sync_threshold)
        .unwrap_or(DEFAULT_SYNC_THRESHOLD)
}

/// Runs one grid point. Failures are recorded in the row, never propagated.
pub fn run_point(base: &RunConfig, point: GridPoint, force_dt: bool, threshold: f64, cert_threshold: f64) -> SweepRow {
    let mut row = SweepRow::empty(point);
    let mut cfg = base.clone();
    cfg.model.kappa = point.kappa;
    cfg.model.m = point.m;
    cfg.model.alpha = point.alpha;
    // Step size and c are re-derived per point when the base asks for "auto".
    let resolved = match Resolved::new(&cfg, force_dt) {
        Ok(r) => r,
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    };
    row.c = Some(resolved.theory.c);
    row.dt = Some(resolved.integrator.dt);

    match check_conditions(&resolved.params, &resolved.init, &resolved.theory) {
        Ok(rep) => {
            row.conditions_pass = Some(rep.all_pass);
            row.failed_conditions = rep.failed();
            row.lambda = Some(rep.lambda);
            row.lambda_tilde = Some(rep.lambda_tilde);
        }
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    }

    let traj = match simulate(&resolved.params, &resolved.init, &resolved.integrator) {
        Ok(t) => t,
        Err(Error::Diverged { t, .. }) => {
            row.status = "diverged";
            row.message = format!("diverged at t = {t}");
            return row;
        }
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    };
    let series = match diagnostics(&traj, &resolved.theory) {
        Ok(s) => s,
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    };
    row.status = "ok";
    let last = series.samples.last().expect("trajectory is non-empty");
    row.d_omega_final = Some(last.d_omega);
    row.sync = last.d_omega < threshold;
    row.t_star = detect_t_star(&series, &resolved.theory);
    row.fitted_rate = row.t_star.and_then(|ts| post_entrance_rate(&series, ts));
    row.certified = certify_inequalities(&traj, &resolved.theory, super::DEFAULT_TOL)
        .ok()
        .map(|rep| rep.passes(cert_threshold));
    row
}

/// Runs the whole grid on `workers` threads; rows come back in grid order.
pub fn run_sweep(cfg: &RunConfig, force_dt: bool, workers: Option<usize>, cert_threshold: f64) -> Result<Vec<SweepRow>> {
    let points = grid(cfg);
    if points.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let threshold = sync_threshold(cfg);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidArgument("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|&pt| run_point(cfg, pt, force_dt, threshold, cert_threshold))
            .collect()
    }))
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(SWEEP_HEADER).map_err(|e| io_err(path, e))?;
    for r in rows {
        let record = [
            fmt_f64(r.point.kappa),
            fmt_f64(r.point.m),
            fmt_f64(r.point.alpha),
            opt(r.c, |c| c.to_string()),
            opt(r.dt, fmt_f64),
            opt(r.conditions_pass, |b| b.to_string()),
            r.failed_conditions.join(";"),
            if r.message.is_empty() {
                r.status.to_string()
            } else {
                format!("{}: {}", r.status, r.message)
            },
            opt(r.d_omega_final, fmt_f64),
            r.sync.to_string(),
            opt(r.t_star, fmt_f64),
            opt(r.fitted_rate, fmt_f64),
            opt(r.lambda, fmt_f64),
            opt(r.lambda_tilde, fmt_f64),
            opt(r.certified, |b| b.to_string()),
        ];
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
