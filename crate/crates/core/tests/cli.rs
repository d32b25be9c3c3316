//! End-to-end tests of the `kuramoto` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kuramoto_core::cli::{CertificateMeta, CheckMeta, RunMeta};
use kuramoto_core::Inequality;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kuramoto"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn reference_text() -> String {
    fs::read_to_string(shipped("ring3.toml")).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
[model]
n = 3
m = 0.05
kappa = 1.0
alpha = 0.05
omega_nat = [0.01, -0.02, 0.0]
adjacency = [0, 0, 1, 1, 0, 0, 0, 1, 0]

[initial]
theta0 = [0.0, 0.3, 0.6]
omega0 = [0.1, 0.0, -0.1]

[theory]
gamma = 1.8955
d_inf = 0.4
epsilon = 1e-3
c = "auto"

[integrator]
dt = "auto"
t_end = 2.0
record_stride = 1
"#;

fn read_meta<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    toml::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn check_reference_passes_with_auto_c() {
    let dir = TempDir::new().unwrap();
    let out = run(&["check", s(&shipped("ring3.toml")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let meta: CheckMeta = read_meta(&dir.path().join("check.meta"));
    assert_eq!(meta.conditions.c, 7);
    assert!(meta.conditions.all_pass);
    assert_eq!(meta.resolution.c, 7);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mk_con1") && stdout.contains("PASS"));
}

#[test]
fn check_large_inertia_fails_mk_con1() {
    let dir = TempDir::new().unwrap();
    // mκ = 1e-4, about five times the admissible bound
    let text = reference_text().replace("m = 1e-5", "m = 1e-4");
    let cfg = write_config(dir.path(), "heavy.toml", &text);
    let out = run(&["check", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let meta: CheckMeta = read_meta(&dir.path().join("check.meta"));
    assert!(!meta.conditions.mk_con1.passed);
    assert!(meta.conditions.mk_con1.margin < 0.0);
    assert!(meta.conditions.mk_con1.lhs == 1e-4);
}

#[test]
fn missing_adjacency_is_input_error() {
    let dir = TempDir::new().unwrap();
    let text = SMALL.replace("adjacency = [0, 0, 1, 1, 0, 0, 0, 1, 0]\n", "");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = run(&["check", s(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("adjacency"), "{}", stderr(&out));
}

#[test]
fn malformed_toml_reports_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "broken.toml", "[model]\nn = = 3\n");
    let out = run(&["check", s(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn missing_file_and_bad_usage() {
    assert_eq!(code(&run(&["check", "/nonexistent/config.toml"])), 1);
    assert_eq!(code(&run(&["simulate"])), 1);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn disconnected_graph_needs_flag() {
    let dir = TempDir::new().unwrap();
    // vertex 0 hears nobody
    let text = SMALL.replace("adjacency = [0, 0, 1, 1, 0, 0, 0, 1, 0]", "adjacency = [0, 0, 0, 1, 0, 0, 0, 1, 0]");
    let cfg = write_config(dir.path(), "cut.toml", &text);
    let out = run(&["simulate", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("strongly connected"), "{}", stderr(&out));
    assert!(!dir.path().join("run.csv").exists());
    let out = run(&["simulate", s(&cfg), "--out", s(dir.path()), "--allow-disconnected"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn uniform_equilibrium_has_zero_diagnostics() {
    let dir = TempDir::new().unwrap();
    let text = SMALL
        .replace("alpha = 0.05", "alpha = 0.0")
        .replace("omega_nat = [0.01, -0.02, 0.0]", "omega_nat = [0.0, 0.0, 0.0]")
        .replace("theta0 = [0.0, 0.3, 0.6]", "theta0 = [0.7, 0.7, 0.7]")
        .replace("omega0 = [0.1, 0.0, -0.1]", "omega0 = [0.0, 0.0, 0.0]");
    let cfg = write_config(dir.path(), "eq.toml", &text);
    let out = run(&["simulate", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut rdr = csv::Reader::from_path(dir.path().join("run.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let first_diag = header.iter().position(|h| h == "D_theta").unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for k in first_diag..header.len() {
            assert_eq!(rec[k].parse::<f64>().unwrap(), 0.0, "{} at row {rows}", header[k]);
        }
        rows += 1;
    }
    assert_eq!(rows, 1 + (2.0f64 / 0.0125) as usize);
}

#[test]
fn csv_schema_and_precision() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    assert_eq!(code(&run(&["simulate", s(&cfg), "--out", s(dir.path())])), 0);
    let text = fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,theta_1,theta_2,theta_3,omega_1,omega_2,omega_3,D_theta,D_omega,Q,P,A,B,E1,E2"
    );
    let row: Vec<&str> = lines.nth(3).unwrap().split(',').collect();
    assert_eq!(row.len(), 15);
    for field in row {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{field}");
    }
}

#[test]
fn meta_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let text = SMALL.replace(
        "theta0 = [0.0, 0.3, 0.6]\nomega0 = [0.1, 0.0, -0.1]",
        "seed = 99\ntheta_range = [0.0, 0.8]\nomega_range = [-0.2, 0.2]",
    );
    let cfg = write_config(dir.path(), "seeded.toml", &text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["simulate", s(&cfg), "--out", s(&a)])), 0);
    // rerun from the metadata alone
    assert_eq!(code(&run(&["simulate", s(&a.join("run.meta")), "--out", s(&b)])), 0);
    assert_eq!(
        fs::read(a.join("run.csv")).unwrap(),
        fs::read(b.join("run.csv")).unwrap()
    );
    let meta: RunMeta = read_meta(&a.join("run.meta"));
    assert_eq!(meta.resolution.seed, Some(99));
    assert_eq!(meta.resolution.prng.as_deref(), Some("ChaCha8"));
    assert_eq!(meta.resolution.dt, 0.0125);
    assert!(meta.config.initial.theta0.is_some());
    assert_eq!(meta.run.status, "completed");
}

#[test]
fn reference_simulate_then_certify_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = shipped("ring3.toml");
    let out = run(&["simulate", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let meta: RunMeta = read_meta(&dir.path().join("run.meta"));
    assert!(meta.run.final_d_omega < 1e-6);
    assert!(meta.run.t_star.is_some());
    assert_eq!(meta.conditions.c, 7);
    assert!(meta.run.fitted_rate.unwrap() >= meta.run.lambda_tilde);

    let csv = dir.path().join("run.csv");
    let in_process = dir.path().join("in_process");
    let from_csv = dir.path().join("from_csv");
    let out = run(&["certify", s(&cfg), "--out", s(&in_process)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["certify", s(&cfg), "--trajectory", s(&csv), "--out", s(&from_csv)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let a: CertificateMeta = read_meta(&in_process.join("certificate.meta"));
    let b: CertificateMeta = read_meta(&from_csv.join("certificate.meta"));
    assert_eq!(a.certificate, b.certificate);
    assert_eq!(a.summary.source, "simulated");
    assert!(a.summary.passed);

    // Scale every ω entry by 10 after the fact.
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let omega_cols: Vec<usize> = header
        .split(',')
        .enumerate()
        .filter(|(_, h)| h.starts_with("omega_"))
        .map(|(k, _)| k)
        .collect();
    let mut corrupted = String::from(header);
    corrupted.push('\n');
    for line in lines {
        let fields: Vec<String> = line
            .split(',')
            .enumerate()
            .map(|(k, f)| {
                if omega_cols.contains(&k) {
                    format!("{:.16e}", f.parse::<f64>().unwrap() * 10.0)
                } else {
                    f.to_string()
                }
            })
            .collect();
        corrupted.push_str(&fields.join(","));
        corrupted.push('\n');
    }
    let bad = dir.path().join("corrupted.csv");
    fs::write(&bad, corrupted).unwrap();
    let out = run(&["certify", s(&cfg), "--trajectory", s(&bad), "--out", s(&dir.path().join("bad"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let c: CertificateMeta = read_meta(&dir.path().join("bad/certificate.meta"));
    let pointwise = c.certificate.check(Inequality::FrequencyDiameterBound);
    assert!(pointwise.satisfied < pointwise.evaluated);
    assert!(!pointwise.violations.is_empty());
}

#[test]
fn single_sample_is_too_coarse() {
    let dir = TempDir::new().unwrap();
    let text = SMALL.replace("t_end = 2.0", "t_end = 0.0");
    let cfg = write_config(dir.path(), "zero.toml", &text);
    let out = run(&["certify", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("record"), "{}", stderr(&out));
}

#[test]
fn sparse_recording_is_too_coarse() {
    let dir = TempDir::new().unwrap();
    // Underdamped all-to-all triangle: orderings flip faster than a sample
    // spacing of 0.7 can follow.
    let text = SMALL
        .replace("m = 0.05", "m = 1.0")
        .replace("kappa = 1.0", "kappa = 4.0")
        .replace("alpha = 0.05", "alpha = 0.0")
        .replace("adjacency = [0, 0, 1, 1, 0, 0, 0, 1, 0]", "adjacency = [0, 1, 1, 1, 0, 1, 1, 1, 0]")
        .replace("omega0 = [0.1, 0.0, -0.1]", "omega0 = [0.0, 0.0, 0.0]")
        .replace("dt = \"auto\"", "dt = 0.01")
        .replace("t_end = 2.0", "t_end = 20.0");
    let coarse = write_config(dir.path(), "coarse.toml", &text.replace("record_stride = 1", "record_stride = 70"));
    let out = run(&["certify", s(&coarse), "--out", s(dir.path())]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("spacing"), "{}", stderr(&out));

    let fine = write_config(dir.path(), "fine.toml", &text);
    let out = run(&["certify", s(&fine), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn divergence_keeps_partial_csv() {
    let dir = TempDir::new().unwrap();
    let text = SMALL.replace("dt = \"auto\"", "dt = 0.5").replace("t_end = 2.0", "t_end = 200.0");
    let cfg = write_config(dir.path(), "stiff.toml", &text);
    let out = run(&["simulate", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 1, "stiffness guard should refuse dt > m/4");
    let out = run(&["simulate", s(&cfg), "--out", s(dir.path()), "--force-dt"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let meta: RunMeta = read_meta(&dir.path().join("run.meta"));
    assert_eq!(meta.run.status, "diverged");
    assert!(meta.run.diverged_at.is_some());
    let rows = fs::read_to_string(dir.path().join("run.csv")).unwrap().lines().count();
    assert!(rows >= 2, "partial CSV has {rows} lines");
}

#[test]
fn sweep_table() {
    let dir = TempDir::new().unwrap();
    let text = format!("{SMALL}\n[sweep]\nkappa = [0.0, 1.0]\nsync_threshold = 1e-6\n")
        .replace("t_end = 2.0", "t_end = 40.0")
        .replace("record_stride = 1", "record_stride = 8");
    let cfg = write_config(dir.path(), "sweep.toml", &text);
    let out = run(&["sweep", s(&cfg), "--out", s(dir.path()), "--workers", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][col("kappa")], "0.0000000000000000e0");
    assert_eq!(&rows[0][col("conditions_pass")], "false");
    assert_eq!(&rows[0][col("sync")], "false");
    assert_eq!(&rows[1][col("sync")], "true");

    let one = dir.path().join("one");
    assert_eq!(code(&run(&["sweep", s(&cfg), "--out", s(&one), "--workers", "1"])), 0);
    assert_eq!(
        fs::read(one.join("sweep.csv")).unwrap(),
        fs::read(dir.path().join("sweep.csv")).unwrap()
    );
}

#[test]
fn reference_point_sweep_row() {
    let dir = TempDir::new().unwrap();
    let text = reference_text().replace("kappa = [0.0, 1.0]", "kappa = [1.0]");
    let cfg = write_config(dir.path(), "point.toml", &text);
    let out = run(&["sweep", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let get = |name: &str| rows[0][header.iter().position(|h| h == name).unwrap()].to_string();
    assert_eq!(get("conditions_pass"), "true");
    assert_eq!(get("sync"), "true");
    assert_eq!(get("c"), "7");
}

#[test]
fn empty_sweep_grid_is_input_error() {
    let dir = TempDir::new().unwrap();
    let text = format!("{SMALL}\n[sweep]\nalpha = []\n");
    let cfg = write_config(dir.path(), "empty.toml", &text);
    let out = run(&["sweep", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("empty"), "{}", stderr(&out));
}

#[test]
fn plots() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    assert_eq!(code(&run(&["simulate", s(&cfg), "--out", s(dir.path())])), 0);
    let csv = dir.path().join("run.csv");

    let out = run(&["plot", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in ["phases", "frequencies", "diameters", "energies"] {
        let svg = fs::read_to_string(dir.path().join(format!("{name}.svg"))).unwrap();
        assert!(svg.contains("<svg"), "{name}");
    }

    let out = run(&["plot", s(&csv), "--window", "1.5,2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("diameters_local.svg").exists());

    let out = run(&["plot", s(&csv), "--columns", "D_omega,P", "--log", "--out", s(&dir.path().join("sel"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("sel/selection.svg").exists());

    let out = run(&["plot", s(&csv), "--columns", "D_omega,bogus"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("bogus"));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&run(&["plot", s(&empty)])), 1);
    let header_only = dir.path().join("header.csv");
    fs::write(&header_only, "t,theta_1,omega_1,D_theta,D_omega,Q,P,A,B,E1,E2\n").unwrap();
    assert_eq!(code(&run(&["plot", s(&header_only)])), 1);
}
