//! Command-line front end: `check`, `simulate`, `certify`, `sweep`, `plot`.
//!
//! Exit codes: 0 ok, 1 input error, 2 condition or certification failure,
//! 3 divergence, 4 insufficient time resolution.

pub mod config;
pub mod output;
pub mod plot;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    certify_inequalities, detect_t_star, diagnostics, post_entrance_rate, CertificateReport, DiagnosticsSeries,
    Trajectory,
};
use crate::energy::{check_conditions, ConditionReport};
use crate::error::Error;
use crate::integrator::simulate;
use config::{Resolution, Resolved, RunConfig};
use output::{ensure_dir, read_table, read_trajectory, write_run_csv, write_toml};

/// Relative tolerance used when certifying the energy inequalities.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Fraction of admissible samples each inequality must satisfy.
pub const DEFAULT_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Input = 1,
    Failed = 2,
    Diverged = 3,
    Resolution = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_error(e: &Error) -> Exit {
        match e {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange { .. }
            | Error::StepBudget { .. } => Exit::Input,
            Error::Infeasible(_) => Exit::Failed,
            Error::Diverged { .. } => Exit::Diverged,
            Error::TooCoarse(_) => Exit::Resolution,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kuramoto", version, about = "Second-order Kuramoto oscillators on digraphs: simulate, check and certify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the sufficient conditions for synchronization.
    Check(RunArgs),
    /// Integrate the model; writes run.csv and run.meta.
    Simulate(RunArgs),
    /// Check the energy inequalities along a run; writes certificate.meta.
    Certify(CertifyArgs),
    /// Sweep kappa × m × alpha; writes sweep.csv.
    Sweep(SweepArgs),
    /// Draw SVG line plots from a run CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration (a run.meta file also works).
    pub config: PathBuf,
    /// Output directory; overrides [output].dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run even if the interaction digraph is not strongly connected.
    #[arg(long)]
    pub allow_disconnected: bool,
    /// Accept a step size above the stiffness guard dt <= m/4.
    #[arg(long)]
    pub force_dt: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Certify this run CSV instead of simulating.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Required satisfied fraction per inequality.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Relative tolerance on each inequality.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Required satisfied fraction for the per-point certificate.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Run CSV produced by `simulate`.
    pub csv: PathBuf,
    /// Comma-separated columns for a single custom panel.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Logarithmic y axis for the custom panel.
    #[arg(long)]
    pub log: bool,
    /// Restrict to t in [t_a, t_b], e.g. `--window 12,15`.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
    /// Output directory (default: next to the CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected t_a,t_b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("t_a: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("t_b: {e}"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(format!("need finite t_a < t_b, got {a},{b}"));
    }
    Ok((a, b))
}

/// Summary of one simulation, stored in `run.meta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `completed` or `diverged`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<f64>,
    pub samples: usize,
    pub t_final: f64,
    pub final_d_theta: f64,
    pub final_d_omega: f64,
    pub max_d_theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_rate: Option<f64>,
    pub lambda: f64,
    pub lambda_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run: RunSummary,
    pub resolution: Resolution,
    pub conditions: ConditionReport,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckMeta {
    pub resolution: Resolution,
    pub conditions: ConditionReport,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub passed: bool,
    pub threshold: f64,
    /// `simulated` or the path of the certified CSV.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateMeta {
    pub summary: CertificateSummary,
    pub certificate: CertificateReport,
    pub resolution: Resolution,
    pub config: RunConfig,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Input } else { Exit::Ok };
            let _ = e.print();
            return code.code();
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(exit) => exit.code(),
        Err(e) => {
            eprintln!("error: {e}");
            Exit::of_error(&e).code()
        }
    }
}

type CmdResult = Result<Exit, Error>;

fn load(args: &RunArgs) -> Result<(Resolved, PathBuf), Error> {
    let cfg = RunConfig::load(&args.config)?;
    let resolved = Resolved::new(&cfg, args.force_dt)?;
    let g = &resolved.params.graph;
    if !args.allow_disconnected && !g.is_strongly_connected() {
        let comps = g.strongly_connected_components();
        return Err(Error::InvalidArgument(format!(
            "hypothesis failed: the interaction digraph is not strongly connected \
             ({} strongly connected components: {comps:?}); pass --allow-disconnected to run anyway",
            comps.len()
        )));
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((resolved, dir))
}

fn print_conditions(rep: &ConditionReport) {
    println!("c = {}, eta = {:.6}, M_N = {}", rep.c, rep.eta, rep.m_n);
    for (name, c) in rep.conditions() {
        println!(
            "{:<18} {}  lhs = {:<13.6e} rhs = {:<13.6e} margin = {:.6e}",
            name,
            if c.passed { "PASS" } else { "FAIL" },
            c.lhs,
            c.rhs,
            c.margin
        );
    }
    println!("Lambda = {:.6e}, Lambda~ = {:.6e}", rep.lambda, rep.lambda_tilde);
}

fn cmd_check(args: &RunArgs) -> CmdResult {
    let (r, dir) = load(args)?;
    let rep = check_conditions(&r.params, &r.init, &r.theory)?;
    if let Some(note) = &r.resolution.c_note {
        eprintln!("note: c = \"auto\" is infeasible ({note}); using c = {}", r.resolution.c);
    }
    print_conditions(&rep);
    ensure_dir(&dir)?;
    write_toml(
        &dir.join(output::CHECK_META),
        &CheckMeta {
            resolution: r.resolution.clone(),
            conditions: rep.clone(),
            config: r.config.clone(),
        },
    )?;
    Ok(if rep.all_pass { Exit::Ok } else { Exit::Failed })
}

fn summarize(status: &str, diverged_at: Option<f64>, series: &DiagnosticsSeries, r: &Resolved, rep: &ConditionReport) -> RunSummary {
    let last = series.samples.last().expect("trajectories hold the initial state");
    let t_star = detect_t_star(series, &r.theory);
    RunSummary {
        status: status.into(),
        diverged_at,
        samples: series.len(),
        t_final: last.t,
        final_d_theta: last.d_theta,
        final_d_omega: last.d_omega,
        max_d_theta: series.samples.iter().map(|s| s.d_theta).fold(f64::NEG_INFINITY, f64::max),
        t_star,
        fitted_rate: t_star.and_then(|ts| post_entrance_rate(series, ts)),
        lambda: rep.lambda,
        lambda_tilde: rep.lambda_tilde,
    }
}

fn write_run(dir: &Path, traj: &Trajectory, r: &Resolved, rep: &ConditionReport, status: &str, diverged_at: Option<f64>) -> Result<RunSummary, Error> {
    let series = diagnostics(traj, &r.theory)?;
    write_run_csv(&dir.join(output::RUN_CSV), traj, &series)?;
    let summary = summarize(status, diverged_at, &series, r, rep);
    write_toml(
        &dir.join(output::RUN_META),
        &RunMeta {
            run: summary.clone(),
            resolution: r.resolution.clone(),
            conditions: rep.clone(),
            config: r.config.clone(),
        },
    )?;
    Ok(summary)
}

fn cmd_simulate(args: &RunArgs) -> CmdResult {
    let (r, dir) = load(args)?;
    let rep = check_conditions(&r.params, &r.init, &r.theory)?;
    ensure_dir(&dir)?;
    match simulate(&r.params, &r.init, &r.integrator) {
        Ok(traj) => {
            let s = write_run(&dir, &traj, &r, &rep, "completed", None)?;
            println!(
                "completed: {} samples to t = {}, c = {}, dt = {:e}",
                s.samples, s.t_final, r.resolution.c, r.resolution.dt
            );
            println!("conditions: {}", if rep.all_pass { "all pass".to_string() } else { format!("failed {:?}", rep.failed()) });
            println!("final D_theta = {:.6e}, D_omega = {:.6e}", s.final_d_theta, s.final_d_omega);
            match s.t_star {
                Some(ts) => println!("t_star = {ts}"),
                None => println!("t_star: not reached"),
            }
            if let Some(rate) = s.fitted_rate {
                println!("fitted D_omega decay rate = {rate:.6e} (Lambda~ = {:.6e})", rep.lambda_tilde);
            }
            println!("wrote {}", dir.display());
            Ok(Exit::Ok)
        }
        Err(Error::Diverged { t, partial }) => {
            write_run(&dir, &partial, &r, &rep, "diverged", Some(t))?;
            eprintln!("error: integration diverged at t = {t}; partial run kept in {}", dir.display());
            Ok(Exit::Diverged)
        }
        Err(e) => Err(e),
    }
}

fn cmd_certify(args: &CertifyArgs) -> CmdResult {
    if !(args.threshold > 0.0 && args.threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!("--threshold must lie in (0, 1], got {}", args.threshold)));
    }
    let (r, dir) = load(&args.run)?;
    let (traj, source) = match &args.trajectory {
        Some(path) => (read_trajectory(path, &r.params)?, path.display().to_string()),
        None => (simulate(&r.params, &r.init, &r.integrator)?, "simulated".to_string()),
    };
    let cert = certify_inequalities(&traj, &r.theory, args.tol)?;
    let passed = cert.passes(args.threshold);
    for c in &cert.inequalities {
        let verdict = if c.passes(args.threshold) { "PASS" } else { "FAIL" };
        match &c.skipped {
            Some(why) => println!("{:<10} {verdict}  skipped: {why}", c.name),
            None => println!(
                "{:<10} {verdict}  {}/{} satisfied ({:.4}), worst residual {:.3e}",
                c.name, c.satisfied, c.evaluated, c.fraction, c.worst_residual
            ),
        }
    }
    for n in &cert.notices {
        println!("note: {n}");
    }
    ensure_dir(&dir)?;
    write_toml(
        &dir.join(output::CERTIFICATE_META),
        &CertificateMeta {
            summary: CertificateSummary {
                passed,
                threshold: args.threshold,
                source,
            },
            certificate: cert,
            resolution: r.resolution.clone(),
            config: r.config.clone(),
        },
    )?;
    Ok(if passed { Exit::Ok } else { Exit::Failed })
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let cfg = RunConfig::load(&args.run.config)?;
    let g = cfg.graph()?;
    if !args.run.allow_disconnected && !g.is_strongly_connected() {
        return Err(Error::InvalidArgument(
            "hypothesis failed: the interaction digraph is not strongly connected; pass --allow-disconnected".into(),
        ));
    }
    let dir = args
        .run
        .out
        .clone()
        .or_else(|| cfg.output_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let rows = sweep::run_sweep(&cfg, args.run.force_dt, args.workers, args.threshold)?;
    ensure_dir(&dir)?;
    let path = dir.join(output::SWEEP_CSV);
    sweep::write_sweep_csv(&path, &rows)?;
    let synced = rows.iter().filter(|r| r.sync).count();
    let diverged = rows.iter().filter(|r| r.status == "diverged").count();
    println!(
        "{} grid points: {synced} synchronized, {diverged} diverged; wrote {}",
        rows.len(),
        path.display()
    );
    Ok(Exit::Ok)
}

fn cmd_plot(args: &PlotArgs) -> CmdResult {
    let table = read_table(&args.csv)?;
    let panels = match &args.columns {
        Some(cols) => vec![plot::Panel {
            name: "selection".into(),
            title: cols.join(", "),
            columns: cols.clone(),
            log_y: args.log,
        }],
        None => plot::default_panels(&table),
    };
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .csv
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    ensure_dir(&dir)?;
    for f in plot::render_all(&table, &panels, args.window, &dir)? {
        println!("wrote {}", f.display());
    }
    Ok(Exit::Ok)
}
