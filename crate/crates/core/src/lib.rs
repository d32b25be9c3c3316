//! Second-order Kuramoto oscillators with inertia and frustration on
//! strongly connected digraphs.
//!
//! The crate integrates the model with fixed-step RK4 and evaluates the
//! order-weighted energy functionals that certify phase cohesiveness and
//! exponential frequency synchronization.

pub mod analysis;
pub mod cli;
pub mod convex;
pub mod digraph;
pub mod energy;
pub mod error;
pub mod integrator;
pub mod model;

pub use analysis::{
    certify_inequalities, detect_t_star, diagnostics, fit_decay_rate, order_change_times, CertificateReport,
    DiagnosticsSample, DiagnosticsSeries, Inequality, InequalityCheck, Trajectory,
};
pub use convex::{eta, lower_comb, make_weights, spread, upper_comb, ConvexWeights};
pub use digraph::Digraph;
pub use energy::{
    auto_select_c, check_conditions, diameter, energy1, energy2, lambda_rate, lambda_tilde_rate, Condition,
    ConditionReport, TheoryBounds, TheoryConfig,
};
pub use error::{Error, Result};
pub use integrator::{rk4_step, simulate, IntegratorConfig};
pub use model::{acceleration, jerk, rhs, ModelParams, State};
