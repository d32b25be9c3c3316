//! Trajectory diagnostics and numerical certification of the energy
//! inequalities.
//!
//! Every differential inequality is checked only at samples that sit strictly
//! inside an interval where the ascending orderings of `θ`, `ω` and `a` do not
//! change (one-sample buffer on each side). Inside such an interval the time
//! derivative of a sorted convex combination is the same combination of the
//! next derivative, so `Q̇, Q̈, Ṗ, P̈, Ȧ` are evaluated exactly from `ω, a, b`.
//! `Ḃ` has no closed form here and uses a centered difference of the `B`
//! series.

use serde::{Deserialize, Serialize};

use crate::convex::{ascending_order, spread_along, ConvexWeights};
use crate::energy::{diameter, lambda_rate, lambda_tilde_rate, EnergyScales, TheoryConfig};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::model::{accel_into, jerk_from, ModelParams, State};

/// Minimum share of admissible samples before certification is attempted.
pub const MIN_ADMISSIBLE_FRACTION: f64 = 0.8;
/// Violation times kept per inequality in a report.
pub const MAX_REPORTED_VIOLATIONS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    params: ModelParams,
    integrator: Option<IntegratorConfig>,
    states: Vec<State>,
}

impl Trajectory {
    pub fn from_states(params: ModelParams, integrator: Option<IntegratorConfig>, states: Vec<State>) -> Result<Self> {
        for s in &states {
            s.check_against(&params)?;
        }
        if let Some(k) = states.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument(format!(
                "trajectory times must be strictly increasing (samples {} and {})",
                k,
                k + 1
            )));
        }
        Ok(Self {
            params,
            integrator,
            states,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn integrator(&self) -> Option<&IntegratorConfig> {
        self.integrator.as_ref()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn into_states(self) -> Vec<State> {
        self.states
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub d_theta: f64,
    pub d_omega: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub q: f64,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub e1: f64,
    pub e2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsSeries {
    pub samples: Vec<DiagnosticsSample>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, f: impl Fn(&DiagnosticsSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.column(|s| s.t)
    }
}

/// Everything derived from one sample.
struct SampleEval {
    diag: DiagnosticsSample,
    order_theta: Vec<usize>,
    order_omega: Vec<usize>,
    order_a: Vec<usize>,
    q_dot: f64,
    q_ddot: f64,
    p_dot: f64,
    p_ddot: f64,
    a_dot: f64,
}

fn evaluate(p: &ModelParams, s: &State, scales: &EnergyScales) -> SampleEval {
    let w: &ConvexWeights = &scales.weights;
    let mut a = vec![0.0; p.n()];
    accel_into(p, &s.theta, &s.omega, &mut a);
    let b = jerk_from(p, s, &a);

    let order_theta = ascending_order(&s.theta);
    let order_omega = ascending_order(&s.omega);
    let order_a = ascending_order(&a);
    let order_b = ascending_order(&b);

    let q = spread_along(&s.theta, &order_theta, w);
    let pp = spread_along(&s.omega, &order_omega, w);
    let aa = spread_along(&a, &order_a, w);
    let bb = spread_along(&b, &order_b, w);

    let diag = DiagnosticsSample {
        t: s.t,
        d_theta: diameter(&s.theta).unwrap_or(0.0),
        d_omega: diameter(&s.omega).unwrap_or(0.0),
        d_a: diameter(&a).unwrap_or(0.0),
        d_b: diameter(&b).unwrap_or(0.0),
        q,
        p: pp,
        a: aa,
        b: bb,
        e1: scales.energy1(q, pp, aa),
        e2: scales.energy2(pp, aa, bb),
    };
    SampleEval {
        diag,
        q_dot: spread_along(&s.omega, &order_theta, w),
        q_ddot: spread_along(&a, &order_theta, w),
        p_dot: spread_along(&a, &order_omega, w),
        p_ddot: spread_along(&b, &order_omega, w),
        a_dot: spread_along(&b, &order_a, w),
        order_theta,
        order_omega,
        order_a,
    }
}

fn evaluate_all(traj: &Trajectory, cfg: &TheoryConfig) -> Result<(EnergyScales, Vec<SampleEval>)> {
    let scales = EnergyScales::new(traj.params(), cfg)?;
    let evals = traj
        .states()
        .iter()
        .map(|s| evaluate(traj.params(), s, &scales))
        .collect();
    Ok((scales, evals))
}

pub fn diagnostics(traj: &Trajectory, cfg: &TheoryConfig) -> Result<DiagnosticsSeries> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("diagnostics of an empty trajectory".into()));
    }
    let (_, evals) = evaluate_all(traj, cfg)?;
    Ok(DiagnosticsSeries {
        samples: evals.into_iter().map(|e| e.diag).collect(),
    })
}

/// Diagnostics of a single state.
pub fn sample_diagnostics(p: &ModelParams, s: &State, scales: &EnergyScales) -> DiagnosticsSample {
    evaluate(p, s, scales).diag
}

/// Sample indices where the ascending order of `θ`, `ω` or `a` differs from
/// the previous sample.
pub fn order_change_times(traj: &Trajectory) -> Vec<usize> {
    let p = traj.params();
    let mut a = vec![0.0; p.n()];
    let mut prev: Option<[Vec<usize>; 3]> = None;
    let mut changes = Vec::new();
    for (k, s) in traj.states().iter().enumerate() {
        accel_into(p, &s.theta, &s.omega, &mut a);
        let orders = [ascending_order(&s.theta), ascending_order(&s.omega), ascending_order(&a)];
        if let Some(prev) = &prev {
            if *prev != orders {
                changes.push(k);
            }
        }
        prev = Some(orders);
    }
    changes
}

/// Earliest sample time after which `D_θ < D^∞` at every later sample.
pub fn detect_t_star(series: &DiagnosticsSeries, cfg: &TheoryConfig) -> Option<f64> {
    let samples = &series.samples;
    match samples.iter().rposition(|s| !(s.d_theta < cfg.d_inf)) {
        None => samples.first().map(|s| s.t),
        Some(k) => samples.get(k + 1).map(|s| s.t),
    }
}

/// Negated least-squares slope of `ln(values)` against time over `window`.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "values",
            expected: times.len(),
            got: values.len(),
        });
    }
    let (ta, tb) = window;
    let picked: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= ta && **t <= tb)
        .map(|(t, v)| (*t, *v))
        .collect();
    if picked.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 3 samples in [{ta}, {tb}], found {}",
            picked.len()
        )));
    }
    if let Some((t, v)) = picked.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::InvalidArgument(format!("decay fit needs positive values, got {v} at t = {t}")));
    }
    let k = picked.len() as f64;
    let t_mean = picked.iter().map(|(t, _)| t).sum::<f64>() / k;
    let y_mean = picked.iter().map(|(_, v)| v.ln()).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in &picked {
        let dt = t - t_mean;
        sxy += dt * (v.ln() - y_mean);
        sxx += dt * dt;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("decay fit window has zero time extent".into()));
    }
    Ok(-sxy / sxx)
}

/// Decay rate of `D_ω` from `t_star` until it reaches round-off level.
pub fn post_entrance_rate(series: &DiagnosticsSeries, t_star: f64) -> Option<f64> {
    let scale = series
        .samples
        .iter()
        .map(|s| s.d_omega)
        .fold(0.0f64, f64::max)
        .max(1.0);
    let floor = 1e-13 * scale;
    let (times, values): (Vec<f64>, Vec<f64>) = series
        .samples
        .iter()
        .filter(|s| s.t >= t_star)
        .take_while(|s| s.d_omega > floor)
        .map(|s| (s.t, s.d_omega))
        .unzip();
    let (&first, &last) = (times.first()?, times.last()?);
    fit_decay_rate(&times, &values, (first, last)).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `mQ̈ + Q̇ ≤ D_Ω + 2Nκ sin α − (2ηκ cos α sin γ/(γM_N)) Q`
    PhaseSecondOrder,
    /// `mȦ + A ≤ (2Nκ/η) P`
    AccelerationFirstOrder,
    /// `mṖ + P ≤ D_Ω + 2Nκ sin α + (2Nκ cos α/η) Q`
    FrequencyFirstOrder,
    /// `Ė1 ≤ 2(D_Ω + 2Nκ sin α) − Λ E1`
    PhaseEnergyGronwall,
    /// `D_ω(t) ≤ D_ω(0) + D_Ω + 2Nκ`
    FrequencyDiameterBound,
    /// `mP̈ + Ṗ ≤ −(2ηκ cos(D^∞+α)/M_N) P`, after `t_*`
    FrequencySecondOrder,
    /// `mḂ + B ≤ 2κN(D_ω(0) + D_Ω + 2Nκ) P/η + 2κN A/η`, after `t_*`
    JerkFirstOrder,
    /// `Ė2 ≤ −Λ̃ E2`, after `t_*`
    FrequencyEnergyGronwall,
}

impl Inequality {
    pub const ALL: [Inequality; 8] = [
        Inequality::PhaseSecondOrder,
        Inequality::AccelerationFirstOrder,
        Inequality::FrequencyFirstOrder,
        Inequality::PhaseEnergyGronwall,
        Inequality::FrequencyDiameterBound,
        Inequality::FrequencySecondOrder,
        Inequality::JerkFirstOrder,
        Inequality::FrequencyEnergyGronwall,
    ];

    /// Stable snake_case label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Inequality::PhaseSecondOrder => "phase_second_order",
            Inequality::AccelerationFirstOrder => "acceleration_first_order",
            Inequality::FrequencyFirstOrder => "frequency_first_order",
            Inequality::PhaseEnergyGronwall => "phase_energy_gronwall",
            Inequality::FrequencyDiameterBound => "frequency_diameter_bound",
            Inequality::FrequencySecondOrder => "frequency_second_order",
            Inequality::JerkFirstOrder => "jerk_first_order",
            Inequality::FrequencyEnergyGronwall => "frequency_energy_gronwall",
        }
    }

    fn after_entrance(self) -> bool {
        matches!(
            self,
            Inequality::FrequencySecondOrder | Inequality::JerkFirstOrder | Inequality::FrequencyEnergyGronwall
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub inequality: Inequality,
    pub evaluated: usize,
    pub satisfied: usize,
    pub fraction: f64,
    /// Largest `LHS − RHS` seen; `≤ 0` means satisfied without slack.
    pub worst_residual: f64,
    pub worst_time: Option<f64>,
    /// First few violation times.
    pub violations: Vec<f64>,
    pub skipped: Option<String>,
}

impl InequalityCheck {
    fn new(inequality: Inequality) -> Self {
        Self {
            name: inequality.label().to_string(),
            inequality,
            evaluated: 0,
            satisfied: 0,
            fraction: 1.0,
            worst_residual: f64::NEG_INFINITY,
            worst_time: None,
            violations: Vec::new(),
            skipped: None,
        }
    }

    fn record(&mut self, t: f64, lhs: f64, rhs: f64, tol: f64) {
        let residual = lhs - rhs;
        self.evaluated += 1;
        // NaN residuals count as violations
        if residual <= tol * rhs.abs().max(1.0) {
            self.satisfied += 1;
        } else if self.violations.len() < MAX_REPORTED_VIOLATIONS {
            self.violations.push(t);
        }
        if !(residual <= self.worst_residual) {
            self.worst_residual = residual;
            self.worst_time = Some(t);
        }
    }

    fn finish(&mut self) {
        self.fraction = if self.evaluated == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.evaluated as f64
        };
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.skipped.is_none() && self.evaluated > 0 && self.fraction >= threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntranceBound {
    pub t_star: f64,
    /// `(E1(0) − E1(t_*)) / (D_Ω + 2Nκ sin α)`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub tol: f64,
    pub samples: usize,
    pub admissible: usize,
    pub admissible_fraction: f64,
    pub order_changes: usize,
    pub inequalities: Vec<InequalityCheck>,
    pub t_star: Option<f64>,
    pub entrance_bound: Option<EntranceBound>,
    pub max_d_theta_after_t_star: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub notices: Vec<String>,
}

impl CertificateReport {
    pub fn check(&self, which: Inequality) -> &InequalityCheck {
        self.inequalities
            .iter()
            .find(|c| c.inequality == which)
            .expect("report holds every inequality")
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.inequalities.iter().all(|c| c.passes(threshold))
    }
}

/// Checks every energy inequality along `traj` at relative tolerance `tol`.
///
/// Fails with [`Error::TooCoarse`] when fewer than
/// [`MIN_ADMISSIBLE_FRACTION`] of the samples are admissible.
pub fn certify_inequalities(traj: &Trajectory, cfg: &TheoryConfig, tol: f64) -> Result<CertificateReport> {
    let len = traj.len();
    if len < 3 {
        return Err(Error::TooCoarse(format!(
            "{len} sample(s); derivative checks need at least 3, record more often (smaller record_stride or dt)"
        )));
    }
    let p = traj.params();
    let (scales, evals) = evaluate_all(traj, cfg)?;

    let same_orders = |i: usize, j: usize| {
        evals[i].order_theta == evals[j].order_theta
            && evals[i].order_omega == evals[j].order_omega
            && evals[i].order_a == evals[j].order_a
    };
    let admissible: Vec<bool> = (0..len)
        .map(|k| k > 0 && k + 1 < len && same_orders(k - 1, k) && same_orders(k, k + 1))
        .collect();
    let admissible_count = admissible.iter().filter(|x| **x).count();
    let admissible_fraction = admissible_count as f64 / len as f64;
    let order_changes = (1..len).filter(|&k| !same_orders(k - 1, k)).count();
    if admissible_fraction < MIN_ADMISSIBLE_FRACTION {
        let spacing = traj.states()[1].t - traj.states()[0].t;
        return Err(Error::TooCoarse(format!(
            "only {:.1}% of samples lie inside constant-order intervals (need {:.0}%); \
             current sample spacing {spacing:e}, try a spacing below {:e}",
            100.0 * admissible_fraction,
            100.0 * MIN_ADMISSIBLE_FRACTION,
            spacing * admissible_fraction.max(0.05) / 4.0,
        )));
    }

    let series = DiagnosticsSeries {
        samples: evals.iter().map(|e| e.diag).collect(),
    };
    let t_star = detect_t_star(&series, cfg);
    let d_omega0 = series.samples[0].d_omega;
    let lambda = lambda_rate(p, cfg)?;
    let lambda_tilde = lambda_tilde_rate(p, cfg, d_omega0)?;

    let nf = p.n() as f64;
    let (m, kappa, eta, m_n) = (p.m, p.kappa, scales.eta, scales.m_n);
    let forcing = p.forcing();
    let q_decay = 2.0 * eta * kappa * p.alpha.cos() * cfg.gamma.sin() / (cfg.gamma * m_n);
    let p_decay = 2.0 * eta * kappa * (cfg.d_inf + p.alpha).cos() / m_n;
    let omega_ceiling = d_omega0 + p.d_omega_nat() + 2.0 * nf * kappa;

    let mut checks: Vec<InequalityCheck> = Inequality::ALL.iter().map(|&i| InequalityCheck::new(i)).collect();
    let mut notices = Vec::new();

    for (k, e) in evals.iter().enumerate() {
        let d = &e.diag;
        // pointwise, no derivatives
        checks[4].record(d.t, d.d_omega, omega_ceiling, tol);

        if !admissible[k] {
            continue;
        }
        let prev = &evals[k - 1].diag;
        let next = &evals[k + 1].diag;
        let b_dot = (next.b - prev.b) / (next.t - prev.t);
        let e1_dot = e.q_dot + scales.e1_p * m * e.p_dot + 2.0 * m * m * e.a_dot;
        let e2_dot = e.p_dot + scales.e2_a * m * e.a_dot + 2.0 * m * m * b_dot;

        checks[0].record(d.t, m * e.q_ddot + e.q_dot, forcing - q_decay * d.q, tol);
        checks[1].record(d.t, m * e.a_dot + d.a, 2.0 * nf * kappa / eta * d.p, tol);
        checks[2].record(
            d.t,
            m * e.p_dot + d.p,
            forcing + 2.0 * nf * kappa * p.alpha.cos() / eta * d.q,
            tol,
        );
        checks[3].record(d.t, e1_dot, 2.0 * forcing - lambda * d.e1, tol);

        if matches!(t_star, Some(ts) if d.t >= ts) {
            checks[5].record(d.t, m * e.p_ddot + e.p_dot, -p_decay * d.p, tol);
            checks[6].record(
                d.t,
                m * b_dot + d.b,
                2.0 * kappa * nf * omega_ceiling * d.p / eta + 2.0 * kappa * nf * d.a / eta,
                tol,
            );
            checks[7].record(d.t, e2_dot, -lambda_tilde * d.e2, tol);
        }
    }

    if t_star.is_none() {
        let msg = format!(
            "phase diameter never settles below D_inf = {} within the horizon; post-entrance checks skipped",
            cfg.d_inf
        );
        notices.push(msg.clone());
        for c in checks.iter_mut().filter(|c| c.inequality.after_entrance()) {
            c.skipped = Some(msg.clone());
        }
    }
    for c in &mut checks {
        c.finish();
        if c.evaluated == 0 && c.skipped.is_none() {
            notices.push(format!("{}: no admissible samples", c.name));
        }
    }

    let entrance_bound = t_star.map(|ts| {
        let k = series.samples.iter().position(|s| s.t >= ts).unwrap_or(0);
        let bound = if forcing > 0.0 {
            (series.samples[0].e1 - series.samples[k].e1) / forcing
        } else if ts == series.samples[0].t {
            0.0
        } else {
            f64::INFINITY
        };
        let elapsed = ts - series.samples[0].t;
        EntranceBound {
            t_star: ts,
            bound,
            holds: elapsed <= bound,
        }
    });
    let max_d_theta_after_t_star = t_star.map(|ts| {
        series
            .samples
            .iter()
            .filter(|s| s.t >= ts)
            .map(|s| s.d_theta)
            .fold(0.0, f64::max)
    });
    let fitted_rate = t_star.and_then(|ts| post_entrance_rate(&series, ts));

    Ok(CertificateReport {
        tol,
        samples: len,
        admissible: admissible_count,
        admissible_fraction,
        order_changes,
        inequalities: checks,
        t_star,
        entrance_bound,
        max_d_theta_after_t_star,
        fitted_rate,
        lambda,
        lambda_tilde,
        notices,
    })
}
