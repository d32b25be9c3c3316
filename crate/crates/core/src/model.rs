//! Second-order Kuramoto dynamics with inertia and frustration:
//!
//! ```text
//! m θ̈_i + θ̇_i = Ω_i + κ Σ_{j ∈ N_i} sin(θ_j − θ_i + α)
//! ```
//!
//! integrated as the first-order system `θ̇ = ω`, `ω̇ = a`. The acceleration
//! `a` and the jerk `b = ȧ` are closed-form observables of `(θ, ω)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::digraph::Digraph;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Inertia.
    pub m: f64,
    /// Coupling strength.
    pub kappa: f64,
    /// Frustration, radians.
    pub alpha: f64,
    /// Natural frequencies.
    pub omega_nat: Vec<f64>,
    pub graph: Digraph,
}

impl ModelParams {
    pub fn new(m: f64, kappa: f64, alpha: f64, omega_nat: Vec<f64>, graph: Digraph) -> Result<Self> {
        let p = Self {
            m,
            kappa,
            alpha,
            omega_nat,
            graph,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks `m > 0`, `κ ≥ 0`, `0 ≤ α < π/2` and matching lengths.
    ///
    /// `κ = 0` is accepted so that decoupled control runs can be built.
    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidArgument(format!("inertia m must be > 0, got {}", self.m)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coupling kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if !(self.alpha.is_finite() && (0.0..FRAC_PI_2).contains(&self.alpha)) {
            return Err(Error::InvalidArgument(format!(
                "frustration alpha must lie in [0, pi/2), got {}",
                self.alpha
            )));
        }
        check_len("omega_nat", self.graph.n(), self.omega_nat.len())?;
        if self.omega_nat.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("omega_nat has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_nat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_nat.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Natural-frequency diameter `D_Ω`.
    pub fn d_omega_nat(&self) -> f64 {
        self.omega_max() - self.omega_min()
    }

    /// `D_Ω + 2Nκ sin α`, the forcing level shared by the phase-side bounds.
    pub fn forcing(&self) -> f64 {
        self.d_omega_nat() + 2.0 * self.n() as f64 * self.kappa * self.alpha.sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    /// Unwrapped phases.
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
}

impl State {
    pub fn new(t: f64, theta: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        let s = Self { t, theta, omega };
        check_len("omega", s.theta.len(), s.omega.len())?;
        if !s.is_finite() {
            return Err(Error::InvalidArgument("state has non-finite entries".into()));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.theta.iter().all(|x| x.is_finite())
            && self.omega.iter().all(|x| x.is_finite())
    }

    pub(crate) fn check_against(&self, p: &ModelParams) -> Result<()> {
        check_len("theta", p.n(), self.theta.len())?;
        check_len("omega", p.n(), self.omega.len())
    }
}

/// `(Ω_i + κ Σ sin(θ_j − θ_i + α) − ω_i) / m` written into `out`.
#[inline]
pub(crate) fn accel_into(p: &ModelParams, theta: &[f64], omega: &[f64], out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        let coupling: f64 = p
            .graph
            .neighbors_of(i)
            .iter()
            .map(|&j| (theta[j] - theta[i] + p.alpha).sin())
            .sum();
        *slot = (-omega[i] + p.omega_nat[i] + p.kappa * coupling) / p.m;
    }
}

/// Right-hand side of the first-order system: `(θ̇, ω̇)`.
pub fn rhs(p: &ModelParams, s: &State) -> Result<(Vec<f64>, Vec<f64>)> {
    s.check_against(p)?;
    let mut domega = vec![0.0; p.n()];
    accel_into(p, &s.theta, &s.omega, &mut domega);
    Ok((s.omega.clone(), domega))
}

/// `a_i = ω̇_i`, identical to the `ω` component of [`rhs`].
pub fn acceleration(p: &ModelParams, s: &State) -> Result<Vec<f64>> {
    s.check_against(p)?;
    let mut a = vec![0.0; p.n()];
    accel_into(p, &s.theta, &s.omega, &mut a);
    Ok(a)
}

/// `b_i = ȧ_i = (κ Σ cos(θ_j − θ_i + α)(ω_j − ω_i) − a_i) / m`.
pub fn jerk(p: &ModelParams, s: &State) -> Result<Vec<f64>> {
    let a = acceleration(p, s)?;
    Ok(jerk_from(p, s, &a))
}

pub(crate) fn jerk_from(p: &ModelParams, s: &State, a: &[f64]) -> Vec<f64> {
    (0..p.n())
        .map(|i| {
            let coupling: f64 = p
                .graph
                .neighbors_of(i)
                .iter()
                .map(|&j| (s.theta[j] - s.theta[i] + p.alpha).cos() * (s.omega[j] - s.omega[i]))
                .sum();
            (p.kappa * coupling - a[i]) / p.m
        })
        .collect()
}

/// `Ω_i + κ Σ sin(θ_j − θ_i + α)`, which equals `m a_i + ω_i`.
#[cfg(test)]
pub(crate) fn phase_forcing(p: &ModelParams, theta: &[f64]) -> Vec<f64> {
    (0..p.n())
        .map(|i| {
            let coupling: f64 = p
                .graph
                .neighbors_of(i)
                .iter()
                .map(|&j| (theta[j] - theta[i] + p.alpha).sin())
                .sum();
            p.omega_nat[i] + p.kappa * coupling
        })
        .collect()
}

/// `κ Σ cos(θ_j − θ_i + α)(ω_j − ω_i)`, which equals `m b_i + a_i`.
#[cfg(test)]
pub(crate) fn frequency_forcing(p: &ModelParams, s: &State) -> Vec<f64> {
    (0..p.n())
        .map(|i| {
            p.kappa
                * p.graph
                    .neighbors_of(i)
                    .iter()
                    .map(|&j| (s.theta[j] - s.theta[i] + p.alpha).cos() * (s.omega[j] - s.omega[i]))
                    .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ring(m: f64, kappa: f64, alpha: f64, omega_nat: Vec<f64>) -> ModelParams {
        ModelParams::new(m, kappa, alpha, omega_nat, Digraph::directed_ring(3).unwrap()).unwrap()
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let p = ring(0.3, 2.5, 0.0, vec![0.7; 3]);
        let s = State::new(0.0, vec![1.1; 3], vec![0.7; 3]).unwrap();
        let (dth, dom) = rhs(&p, &s).unwrap();
        assert_eq!(dth, vec![0.7; 3]);
        assert_eq!(dom, vec![0.0; 3]);
        assert_eq!(jerk(&p, &s).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn frustration_only_forcing() {
        let p = ring(1.0, 1.0, PI / 6.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.0; 3], vec![0.0; 3]).unwrap();
        let a = acceleration(&p, &s).unwrap();
        for ai in a {
            assert!((ai - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn decoupled_relaxation() {
        let p = ring(0.5, 0.0, 0.2, vec![1.0, -2.0, 0.5]);
        let s = State::new(0.0, vec![0.3, 2.0, -1.0], vec![0.0, 1.0, 0.5]).unwrap();
        let a = acceleration(&p, &s).unwrap();
        assert_eq!(a, vec![2.0, -6.0, 0.0]);
        let b = jerk(&p, &s).unwrap();
        for (bi, ai) in b.iter().zip(&a) {
            assert_eq!(*bi, -ai / 0.5);
        }
    }

    #[test]
    fn jerk_hand_evaluation() {
        // N_1 = {3}, N_2 = {1}, N_3 = {2}; all phases equal so sin terms vanish.
        // a_i = -ω_i = (-0.1, 0, 0)
        // κ Σ cos·Δω = (ω_3 - ω_1, ω_1 - ω_2, ω_2 - ω_3) = (-0.1, 0.1, 0)
        // b = κ Σ cos·Δω - a = (0, 0.1, 0)
        let p = ring(1.0, 1.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.0; 3], vec![0.1, 0.0, 0.0]).unwrap();
        let a = acceleration(&p, &s).unwrap();
        assert_eq!(a, vec![-0.1, 0.0, 0.0]);
        assert_eq!(jerk(&p, &s).unwrap(), vec![0.0, 0.1, 0.0]);
    }

    #[test]
    fn translation_invariance() {
        let p = ring(0.2, 1.3, 0.1, vec![0.1, -0.2, 0.05]);
        let s = State::new(0.0, vec![0.3, 1.0, -0.4], vec![0.2, 0.0, -0.1]).unwrap();
        let shifted = State::new(0.0, s.theta.iter().map(|x| x + 0.25).collect(), s.omega.clone()).unwrap();
        let a = acceleration(&p, &s).unwrap();
        let b = acceleration(&p, &shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = ring(1.0, 1.0, 0.0, vec![0.0; 3]);
        let s = State::new(0.0, vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(matches!(rhs(&p, &s), Err(Error::DimensionMismatch { .. })));
        assert!(State::new(0.0, vec![0.0; 2], vec![0.0; 3]).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, vec![0.0; 2], Digraph::directed_ring(3).unwrap()).is_err());
    }

    #[test]
    fn parameter_validation() {
        let g = Digraph::directed_ring(3).unwrap();
        assert!(ModelParams::new(0.0, 1.0, 0.0, vec![0.0; 3], g.clone()).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.0, vec![0.0; 3], g.clone()).is_err());
        assert!(ModelParams::new(1.0, 1.0, FRAC_PI_2, vec![0.0; 3], g.clone()).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1, vec![0.0; 3], g).is_err());
    }

    #[test]
    fn forcing_identities() {
        let p = ring(0.01, 2.0, 0.3, vec![0.1, -0.2, 0.05]);
        let s = State::new(0.0, vec![0.3, 1.0, -0.4], vec![0.2, 0.0, -0.1]).unwrap();
        let a = acceleration(&p, &s).unwrap();
        let b = jerk(&p, &s).unwrap();
        let f = phase_forcing(&p, &s.theta);
        let g = frequency_forcing(&p, &s);
        for i in 0..3 {
            assert!((p.m * a[i] + s.omega[i] - f[i]).abs() < 1e-12);
            assert!((p.m * b[i] + a[i] - g[i]).abs() < 1e-9);
        }
    }
}
