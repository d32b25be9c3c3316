//! Diameters, composite energies and the sufficient-condition checker.
//!
//! `E1 = Q + (η² sin γ / (2NγM_N)) m P + 2m² A` controls the phase diameter
//! and `E2 = P + (η² cos(D^∞+α) / (2N M_N)) m A + 2m² B` controls the
//! frequency diameter once the phases are inside a quarter circle.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::convex::{eta, spread, ConvexWeights};
use crate::error::{Error, Result};
use crate::model::{acceleration, jerk_from, ModelParams, State};

/// Analysis constants that do not depend on the convexity parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    /// Phase-diameter ceiling, `D_θ(0) < γ < π`.
    pub gamma: f64,
    /// Quarter-circle target diameter `D^∞`.
    pub d_inf: f64,
    pub epsilon: f64,
}

impl TheoryBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < PI) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, pi), got {}", self.gamma)));
        }
        if !(self.d_inf > 0.0 && self.d_inf < FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "d_inf must lie in (0, pi/2), got {}",
                self.d_inf
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn with_c(self, c: u32) -> TheoryConfig {
        TheoryConfig {
            gamma: self.gamma,
            d_inf: self.d_inf,
            epsilon: self.epsilon,
            c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConfig {
    pub gamma: f64,
    pub d_inf: f64,
    pub epsilon: f64,
    /// Convexity parameter, `c > 2`.
    pub c: u32,
}

impl TheoryConfig {
    pub fn bounds(&self) -> TheoryBounds {
        TheoryBounds {
            gamma: self.gamma,
            d_inf: self.d_inf,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds().validate()?;
        eta(self.c).map(|_| ())
    }

    pub fn eta(&self) -> f64 {
        1.0 - 4.0 / (self.c as f64 + 2.0)
    }
}

pub fn diameter(z: &[f64]) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::InvalidArgument("diameter of an empty vector".into()));
    }
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(hi - lo)
}

/// Weights and energy coefficients for one `(params, theory)` pair.
#[derive(Debug, Clone)]
pub struct EnergyScales {
    pub weights: ConvexWeights,
    pub eta: f64,
    pub m_n: f64,
    /// Coefficient of `m P` in `E1`.
    pub e1_p: f64,
    /// Coefficient of `m A` in `E2`.
    pub e2_a: f64,
    pub m: f64,
}

impl EnergyScales {
    pub fn new(p: &ModelParams, cfg: &TheoryConfig) -> Result<Self> {
        cfg.validate()?;
        let weights = ConvexWeights::new(cfg.c, p.n())?;
        let eta = cfg.eta();
        let m_n = weights.m_n();
        let nf = p.n() as f64;
        let e1_p = eta * eta * cfg.gamma.sin() / (2.0 * nf * cfg.gamma * m_n);
        let e2_a = eta * eta * (cfg.d_inf + p.alpha).cos() / (2.0 * nf * m_n);
        Ok(Self {
            weights,
            eta,
            m_n,
            e1_p,
            e2_a,
            m: p.m,
        })
    }

    pub fn energy1(&self, q: f64, p: f64, a: f64) -> f64 {
        q + self.e1_p * self.m * p + 2.0 * self.m * self.m * a
    }

    pub fn energy2(&self, p: f64, a: f64, b: f64) -> f64 {
        p + self.e2_a * self.m * a + 2.0 * self.m * self.m * b
    }
}

pub fn energy1(p: &ModelParams, s: &State, cfg: &TheoryConfig) -> Result<f64> {
    let scales = EnergyScales::new(p, cfg)?;
    let a = acceleration(p, s)?;
    let w = &scales.weights;
    Ok(scales.energy1(spread(&s.theta, w)?, spread(&s.omega, w)?, spread(&a, w)?))
}

pub fn energy2(p: &ModelParams, s: &State, cfg: &TheoryConfig) -> Result<f64> {
    let scales = EnergyScales::new(p, cfg)?;
    let a = acceleration(p, s)?;
    let b = jerk_from(p, s, &a);
    let w = &scales.weights;
    Ok(scales.energy2(spread(&s.omega, w)?, spread(&a, w)?, spread(&b, w)?))
}

/// The three candidates whose minimum is the phase-side rate `Λ`.
pub fn lambda_branches(p: &ModelParams, gamma: f64, eta: f64, m_n: f64) -> [f64; 3] {
    let nf = p.n() as f64;
    [
        eta * p.kappa * p.alpha.cos() * gamma.sin() / (gamma * m_n),
        1.0 / p.m - 8.0 * nf * nf * p.kappa * gamma * m_n / (eta.powi(3) * gamma.sin()),
        1.0 / (2.0 * p.m),
    ]
}

/// The three candidates whose minimum is the frequency-side rate `Λ̃`.
pub fn lambda_tilde_branches(p: &ModelParams, d_inf: f64, eta: f64, m_n: f64, d_omega0: f64) -> [f64; 3] {
    let nf = p.n() as f64;
    let (m, kappa) = (p.m, p.kappa);
    let cos_q = (d_inf + p.alpha).cos();
    let spread_bound = d_omega0 + p.d_omega_nat() + 2.0 * nf * kappa;
    let a_coef = eta * eta * cos_q / (2.0 * nf * m_n);
    [
        eta * kappa * cos_q / m_n - 4.0 * m * kappa * nf * spread_bound / eta,
        (a_coef - 4.0 * nf * m * kappa / eta) / (m * a_coef),
        1.0 / (2.0 * m),
    ]
}

fn min3(b: [f64; 3]) -> f64 {
    b[0].min(b[1]).min(b[2])
}

/// Phase-side decay rate `Λ`; may be non-positive when the coupling
/// conditions fail.
pub fn lambda_rate(p: &ModelParams, cfg: &TheoryConfig) -> Result<f64> {
    cfg.validate()?;
    let w = ConvexWeights::new(cfg.c, p.n())?;
    Ok(min3(lambda_branches(p, cfg.gamma, cfg.eta(), w.m_n())))
}

/// Frequency-synchronization rate `Λ̃` for a run whose initial frequency
/// diameter is `d_omega0`.
pub fn lambda_tilde_rate(p: &ModelParams, cfg: &TheoryConfig, d_omega0: f64) -> Result<f64> {
    cfg.validate()?;
    let w = ConvexWeights::new(cfg.c, p.n())?;
    Ok(min3(lambda_tilde_branches(p, cfg.d_inf, cfg.eta(), w.m_n(), d_omega0)))
}

/// Lower bound that `c` must strictly exceed: `max{Nγ/sin γ, N/cos(D^∞+α)}`.
/// Infinite when `D^∞ + α ≥ π/2`.
pub fn c_lower_bound(p: &ModelParams, bounds: &TheoryBounds) -> f64 {
    let nf = p.n() as f64;
    let cos_q = (bounds.d_inf + p.alpha).cos();
    let quarter = if bounds.d_inf + p.alpha < FRAC_PI_2 && cos_q > 0.0 {
        nf / cos_q
    } else {
        f64::INFINITY
    };
    (nf * bounds.gamma / bounds.gamma.sin()).max(quarter)
}

fn initial_ok(c: u32, bounds: &TheoryBounds, d_theta0: f64) -> bool {
    d_theta0 < (1.0 - 4.0 / (c as f64 + 2.0)) * (1.0 - bounds.epsilon) * bounds.gamma
}

/// Smallest integer `c > 2` that satisfies both the lower bound on `c` and
/// `D_θ(0) < (1 − 4/(c+2))(1 − ε)γ`.
pub fn auto_select_c(p: &ModelParams, bounds: &TheoryBounds, d_theta0: f64) -> Result<u32> {
    bounds.validate()?;
    let lower = c_lower_bound(p, bounds);
    if !lower.is_finite() {
        return Err(Error::Infeasible(format!(
            "c > N/cos(D_inf + alpha) has no solution: D_inf + alpha = {} >= pi/2",
            bounds.d_inf + p.alpha
        )));
    }
    let reach = (1.0 - bounds.epsilon) * bounds.gamma;
    if !(d_theta0 < reach) {
        return Err(Error::Infeasible(format!(
            "D_theta(0) < (1 - 4/(c+2))(1 - eps) gamma has no solution: D_theta(0) = {d_theta0} >= (1 - eps) gamma = {reach}"
        )));
    }
    let by_lower = lower.floor() + 1.0;
    // 4/(c+2) < 1 - D/reach
    let slack = 1.0 - d_theta0 / reach;
    let by_initial = (4.0 / slack - 2.0).floor() + 1.0;
    let start = by_lower.max(by_initial).max(3.0);
    if start > u32::MAX as f64 - 16.0 {
        return Err(Error::Infeasible(format!("required c = {start} exceeds the supported range")));
    }
    let mut c = start as u32;
    // floor() on the real bounds can land one below the strict inequality
    while !((c as f64) > lower && initial_ok(c, bounds, d_theta0)) {
        c += 1;
    }
    Ok(c)
}

/// One sufficient condition with its two sides. `margin` is `rhs − lhs`
/// for `lhs < rhs` conditions, so a negative margin means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Condition {
    fn strict_less(lhs: f64, rhs: f64) -> Self {
        Self {
            passed: lhs < rhs,
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub all_pass: bool,
    /// `D_θ(0) < γ < π`.
    pub gamma_bound: Condition,
    /// `c > max{Nγ/sin γ, N/cos(D^∞+α)}`.
    pub c_lower: Condition,
    /// `D_θ(0) < η(1−ε)γ`.
    pub c_initial: Condition,
    pub mk_con1: Condition,
    pub mk_con2: Condition,
    pub mk_con3: Condition,
    /// `4(D_Ω + 2Nκ sin α)/(ηΛ) < D^∞`, the form used for the entrance time.
    pub mk_con3_entrance: Condition,
    pub mk_con4: Condition,
    /// `D^∞ + α < π/2`.
    pub quarter_circle: Condition,
    pub c: u32,
    pub eta: f64,
    pub m_n: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub d_theta0: f64,
    pub d_omega0: f64,
    pub d_a0: f64,
}

impl ConditionReport {
    /// `(name, condition)` pairs in report order.
    pub fn conditions(&self) -> [(&'static str, &Condition); 9] {
        [
            ("gamma_bound", &self.gamma_bound),
            ("c_lower", &self.c_lower),
            ("c_initial", &self.c_initial),
            ("mk_con1", &self.mk_con1),
            ("mk_con2", &self.mk_con2),
            ("mk_con3", &self.mk_con3),
            ("mk_con3_entrance", &self.mk_con3_entrance),
            ("mk_con4", &self.mk_con4),
            ("quarter_circle", &self.quarter_circle),
        ]
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.conditions()
            .iter()
            .filter(|(_, c)| !c.passed)
            .map(|(name, _)| *name)
            .collect()
    }
}

pub fn check_conditions(p: &ModelParams, init: &State, cfg: &TheoryConfig) -> Result<ConditionReport> {
    p.validate()?;
    cfg.validate()?;
    init.check_against(p)?;
    let weights = ConvexWeights::new(cfg.c, p.n())?;
    let nf = p.n() as f64;
    let eta = cfg.eta();
    let m_n = weights.m_n();
    let (m, kappa, gamma) = (p.m, p.kappa, cfg.gamma);
    let cos_q = (cfg.d_inf + p.alpha).cos();

    let d_theta0 = diameter(&init.theta)?;
    let d_omega0 = diameter(&init.omega)?;
    let d_a0 = diameter(&acceleration(p, init)?)?;
    let lambda = min3(lambda_branches(p, gamma, eta, m_n));
    let lambda_tilde = min3(lambda_tilde_branches(p, cfg.d_inf, eta, m_n, d_omega0));
    let forcing = p.forcing();

    let gamma_bound = {
        let passed = d_theta0 < gamma && gamma < PI;
        Condition {
            passed,
            lhs: d_theta0,
            rhs: gamma,
            margin: (gamma - d_theta0).min(PI - gamma),
        }
    };
    let c_lower = Condition::strict_less(c_lower_bound(p, &cfg.bounds()), cfg.c as f64);
    let reach = eta * (1.0 - cfg.epsilon) * gamma;
    let c_initial = Condition::strict_less(d_theta0, reach);

    let mk_con1 = Condition::strict_less(
        m * kappa,
        eta.powi(3) / (8.0 * nf * nf * m_n) * (gamma.sin() / gamma).min(cos_q),
    );

    let mk_con2 = {
        let lhs = d_theta0 + eta * eta * gamma.sin() / (2.0 * nf * gamma * m_n) * m * d_omega0 + 2.0 * m * m * d_a0;
        let mut c = Condition::strict_less(lhs, reach);
        c.passed = c.passed && reach < PI;
        c
    };

    // Λ ≤ 0 leaves no finite bound on the forcing-to-rate ratio.
    let ratio = |k: f64| {
        if lambda > 0.0 {
            k * forcing / (eta * lambda)
        } else {
            f64::INFINITY
        }
    };
    let mk_con3 = Condition::strict_less(ratio(2.0), ((1.0 - cfg.epsilon) * gamma).min(cfg.d_inf / 2.0));
    let mk_con3_entrance = Condition::strict_less(ratio(4.0), cfg.d_inf);

    let mk_con4 = Condition::strict_less(
        4.0 * nf * m * m_n * (d_omega0 + p.d_omega_nat()) + 8.0 * nf * nf * m * kappa * m_n,
        eta * eta * cos_q,
    );
    let quarter_circle = Condition::strict_less(cfg.d_inf + p.alpha, FRAC_PI_2);

    let mut report = ConditionReport {
        all_pass: false,
        gamma_bound,
        c_lower,
        c_initial,
        mk_con1,
        mk_con2,
        mk_con3,
        mk_con3_entrance,
        mk_con4,
        quarter_circle,
        c: cfg.c,
        eta,
        m_n,
        lambda,
        lambda_tilde,
        d_theta0,
        d_omega0,
        d_a0,
    };
    report.all_pass = report.conditions().iter().all(|(_, c)| c.passed);
    Ok(report)
}
