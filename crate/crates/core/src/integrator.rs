//! Classical fixed-step fourth-order Runge-Kutta for the `(θ, ω)` system.
//!
//! The frequency equation relaxes on the time scale `m`, and the stability
//! interval of explicit RK4 on `λ = −1/m` is about `|h/m| ≤ 2.78`, so steps
//! are capped at `m/4` unless the caller forces a larger one.

use serde::{Deserialize, Serialize};

use crate::analysis::Trajectory;
use crate::error::{Error, Result};
use crate::model::{accel_into, ModelParams, State};

pub const DEFAULT_MAX_STEPS: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `record_stride`-th step (the final step is always kept).
    pub record_stride: u64,
    pub max_steps: u64,
    /// Skip the `dt ≤ m/4` stiffness guard.
    #[serde(default)]
    pub force_dt: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: u64) -> Self {
        Self {
            dt,
            t_end,
            record_stride,
            max_steps: DEFAULT_MAX_STEPS,
            force_dt: false,
        }
    }

    /// `dt = m/4`.
    pub fn auto_dt(m: f64) -> f64 {
        m / 4.0
    }

    pub fn validate(&self, m: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::InvalidArgument(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be >= 1".into()));
        }
        if !self.force_dt && self.dt > m / 4.0 {
            return Err(Error::InvalidArgument(format!(
                "dt = {} violates the stiffness guard dt <= m/4 = {} (use force_dt to override)",
                self.dt,
                m / 4.0
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`; a trailing partial step counts as one.
    pub fn step_count(&self) -> u64 {
        if self.t_end == 0.0 {
            return 0;
        }
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as u64
        } else {
            ratio.ceil() as u64
        }
    }
}

/// Reusable RK4 stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k_theta: [Vec<f64>; 4],
    k_omega: [Vec<f64>; 4],
    theta_tmp: Vec<f64>,
    omega_tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        let z = || vec![0.0; n];
        Self {
            k_theta: [z(), z(), z(), z()],
            k_omega: [z(), z(), z(), z()],
            theta_tmp: z(),
            omega_tmp: z(),
        }
    }

    /// Advances `(theta, omega)` in place by `h`.
    pub fn advance(&mut self, p: &ModelParams, theta: &mut [f64], omega: &mut [f64], h: f64) {
        let n = theta.len();
        let Self {
            k_theta,
            k_omega,
            theta_tmp,
            omega_tmp,
        } = self;

        k_theta[0].copy_from_slice(omega);
        accel_into(p, theta, omega, &mut k_omega[0]);

        for (stage, frac) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                theta_tmp[i] = theta[i] + frac * h * k_theta[stage - 1][i];
                omega_tmp[i] = omega[i] + frac * h * k_omega[stage - 1][i];
            }
            k_theta[stage].copy_from_slice(omega_tmp);
            accel_into(p, theta_tmp, omega_tmp, &mut k_omega[stage]);
        }

        let sixth = h / 6.0;
        for i in 0..n {
            theta[i] += sixth * (k_theta[0][i] + 2.0 * k_theta[1][i] + 2.0 * k_theta[2][i] + k_theta[3][i]);
            omega[i] += sixth * (k_omega[0][i] + 2.0 * k_omega[1][i] + 2.0 * k_omega[2][i] + k_omega[3][i]);
        }
    }
}

/// One classical RK4 step.
pub fn rk4_step(p: &ModelParams, s: &State, dt: f64) -> Result<State> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    s.check_against(p)?;
    let mut next = s.clone();
    Rk4::new(p.n()).advance(p, &mut next.theta, &mut next.omega, dt);
    next.t = s.t + dt;
    if !next.is_finite() {
        return Err(Error::Diverged {
            t: next.t,
            partial: Box::new(Trajectory::from_states(p.clone(), None, vec![s.clone()])?),
        });
    }
    Ok(next)
}

/// Integrates from `init` to `init.t + cfg.t_end`, recording every
/// `record_stride`-th state plus the initial and final ones.
pub fn simulate(p: &ModelParams, init: &State, cfg: &IntegratorConfig) -> Result<Trajectory> {
    p.validate()?;
    init.check_against(p)?;
    if !init.is_finite() {
        return Err(Error::InvalidArgument("initial state has non-finite entries".into()));
    }
    cfg.validate(p.m)?;
    let steps = cfg.step_count();
    if steps > cfg.max_steps {
        return Err(Error::StepBudget {
            required: steps,
            cap: cfg.max_steps,
        });
    }

    let t0 = init.t;
    let t_final = t0 + cfg.t_end;
    let mut states = Vec::with_capacity((steps / cfg.record_stride + 2) as usize);
    states.push(init.clone());

    let mut rk = Rk4::new(p.n());
    let mut theta = init.theta.clone();
    let mut omega = init.omega.clone();
    let mut t_prev = t0;

    for k in 1..=steps {
        let t_next = if k == steps { t_final } else { t0 + k as f64 * cfg.dt };
        rk.advance(p, &mut theta, &mut omega, t_next - t_prev);
        t_prev = t_next;

        if theta.iter().chain(omega.iter()).any(|x| !x.is_finite()) {
            let partial = Trajectory::from_states(p.clone(), Some(*cfg), states)?;
            return Err(Error::Diverged {
                t: t_next,
                partial: Box::new(partial),
            });
        }
        if k % cfg.record_stride == 0 || k == steps {
            states.push(State {
                t: t_next,
                theta: theta.clone(),
                omega: omega.clone(),
            });
        }
    }

    Trajectory::from_states(p.clone(), Some(*cfg), states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::Digraph;

    fn ring(m: f64, kappa: f64, alpha: f64, omega_nat: Vec<f64>) -> ModelParams {
        ModelParams::new(m, kappa, alpha, omega_nat, Digraph::directed_ring(3).unwrap()).unwrap()
    }

    #[test]
    fn equilibrium_preserved() {
        let p = ring(1.0, 1.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.4; 3], vec![0.0; 3]).unwrap();
        let next = rk4_step(&p, &s, 0.1).unwrap();
        assert_eq!(next.theta, s.theta);
        assert_eq!(next.omega, s.omega);
        assert_eq!(next.t, 0.1);
    }

    #[test]
    fn linear_test_equation_stability_polynomial() {
        let p = ring(1.0, 0.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.0; 3], vec![1.0; 3]).unwrap();
        for h in [0.1, 0.25, 0.01] {
            let next = rk4_step(&p, &s, h).unwrap();
            let poly = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
            for w in &next.omega {
                assert!((w - poly).abs() < 1e-15, "h={h}: {w} vs {poly}");
            }
        }
    }

    #[test]
    fn constant_frequency_drift() {
        let omega = vec![0.3, -1.2, 2.0];
        let p = ring(1.0, 0.0, 0.0, omega.clone());
        let s = State::new(0.0, vec![0.1, 0.2, 0.3], omega.clone()).unwrap();
        let next = rk4_step(&p, &s, 0.05).unwrap();
        for i in 0..3 {
            assert!((next.theta[i] - (s.theta[i] + omega[i] * 0.05)).abs() < 1e-15);
            assert_eq!(next.omega[i], omega[i]);
        }
    }

    #[test]
    fn zero_horizon_keeps_only_initial() {
        let p = ring(1.0, 1.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        let traj = simulate(&p, &s, &IntegratorConfig::new(0.1, 0.0, 1)).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states()[0], s);
    }

    #[test]
    fn records_initial_stride_and_final() {
        let p = ring(1.0, 1.0, 0.1, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        let traj = simulate(&p, &s, &IntegratorConfig::new(0.1, 1.05, 3)).unwrap();
        let times: Vec<f64> = traj.times().collect();
        // 11 steps: records at 0, 3, 6, 9 and the final partial step
        assert_eq!(times.len(), 5);
        assert!((times[3] - 0.9).abs() < 1e-12);
        assert_eq!(*times.last().unwrap(), 1.05);
    }

    #[test]
    fn stiffness_guard_and_override() {
        let p = ring(1e-3, 1.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        let mut cfg = IntegratorConfig::new(1e-3, 0.01, 1);
        assert!(matches!(simulate(&p, &s, &cfg), Err(Error::InvalidArgument(_))));
        cfg.force_dt = true;
        assert!(simulate(&p, &s, &cfg).is_ok());
    }

    #[test]
    fn unstable_step_diverges() {
        let p = ring(1e-3, 1.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.1, 0.2, 0.3], vec![0.5, 0.0, -0.5]).unwrap();
        let mut cfg = IntegratorConfig::new(5e-3, 50.0, 1);
        cfg.force_dt = true;
        match simulate(&p, &s, &cfg) {
            Err(Error::Diverged { t, partial }) => {
                assert!(t > 0.0 && t < 50.0);
                assert!(!partial.is_empty());
                assert!(partial.states().iter().all(State::is_finite));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn step_budget() {
        let p = ring(1.0, 1.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        let mut cfg = IntegratorConfig::new(0.01, 10.0, 1);
        cfg.max_steps = 100;
        assert!(matches!(
            simulate(&p, &s, &cfg),
            Err(Error::StepBudget { required: 1000, cap: 100 })
        ));
    }

    #[test]
    fn deterministic() {
        let p = ring(0.05, 1.0, 0.2, vec![0.01, -0.02, 0.0]);
        let s = State::new(0.0, vec![0.0, 0.7, 1.1], vec![0.3, -0.2, 0.1]).unwrap();
        let cfg = IntegratorConfig::new(0.01, 2.0, 7);
        assert_eq!(simulate(&p, &s, &cfg).unwrap(), simulate(&p, &s, &cfg).unwrap());
    }
}
