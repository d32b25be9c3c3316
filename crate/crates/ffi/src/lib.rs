//! C ABI for `kuramoto-core`.
//!
//! Every function returns a [`KdStatus`]; outputs go through pointer
//! arguments. On failure, [`kd_last_error`] describes what went wrong on the
//! calling thread. Models and trajectories are opaque handles released with
//! their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use kuramoto_core::analysis::{certify_inequalities, Inequality};
use kuramoto_core::energy::{auto_select_c, check_conditions, Condition, ConditionReport, TheoryBounds, TheoryConfig};
use kuramoto_core::integrator::{simulate, IntegratorConfig, DEFAULT_MAX_STEPS};
use kuramoto_core::{acceleration, jerk, make_weights, spread, Digraph, Error, ModelParams, State, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    IndexOutOfRange = 3,
    Infeasible = 4,
    /// The state blew up; a partial trajectory may still be returned.
    Diverged = 5,
    StepBudget = 6,
    TooCoarse = 7,
    NullPointer = 8,
    Panic = 9,
}

impl From<&Error> for KdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => KdStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => KdStatus::DimensionMismatch,
            Error::IndexOutOfRange { .. } => KdStatus::IndexOutOfRange,
            Error::Infeasible(_) => KdStatus::Infeasible,
            Error::Diverged { .. } => KdStatus::Diverged,
            Error::StepBudget { .. } => KdStatus::StepBudget,
            Error::TooCoarse(_) => KdStatus::TooCoarse,
        }
    }
}

/// Model parameters and interaction digraph.
pub struct KdModel {
    params: ModelParams,
}

/// Recorded states of one simulation.
pub struct KdTrajectory {
    traj: Trajectory,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KdTheory {
    pub gamma: f64,
    pub d_inf: f64,
    pub epsilon: f64,
    /// Convexity parameter, must exceed 2.
    pub c: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KdIntegrator {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: u64,
    /// 0 selects the library default.
    pub max_steps: u64,
    pub force_dt: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KdCondition {
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative means violated.
    pub margin: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KdConditionReport {
    pub all_pass: bool,
    pub gamma_bound: KdCondition,
    pub c_lower: KdCondition,
    pub c_initial: KdCondition,
    pub mk_con1: KdCondition,
    pub mk_con2: KdCondition,
    pub mk_con3: KdCondition,
    pub mk_con3_entrance: KdCondition,
    pub mk_con4: KdCondition,
    pub quarter_circle: KdCondition,
    pub c: u32,
    pub eta: f64,
    pub m_n: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub d_theta0: f64,
    pub d_omega0: f64,
    pub d_a0: f64,
}

/// Number of inequalities in a certificate.
pub const KD_INEQUALITIES: usize = 8;

/// Per-inequality arrays follow this order: phase_second_order,
/// acceleration_first_order, frequency_first_order, phase_energy_gronwall,
/// frequency_diameter_bound, frequency_second_order, jerk_first_order,
/// frequency_energy_gronwall.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KdCertificate {
    pub passed: bool,
    pub samples: u64,
    pub admissible: u64,
    pub admissible_fraction: f64,
    pub order_changes: u64,
    pub has_t_star: bool,
    pub t_star: f64,
    pub has_fitted_rate: bool,
    pub fitted_rate: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub evaluated: [u64; KD_INEQUALITIES],
    pub satisfied: [u64; KD_INEQUALITIES],
    pub fraction: [f64; KD_INEQUALITIES],
    pub worst_residual: [f64; KD_INEQUALITIES],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(KdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(KdStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(KdStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<KdStatus, Fail>) -> KdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            if status == KdStatus::Ok {
                set_last_error("");
            }
            status
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            KdStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn model_ref<'a>(m: *const KdModel) -> Result<&'a KdModel, Fail> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn state_from(n: usize, theta: *const f64, omega: *const f64) -> Result<State, Fail> {
    let theta = input(theta, n, "theta")?.to_vec();
    let omega = input(omega, n, "omega")?.to_vec();
    Ok(State::new(0.0, theta, omega)?)
}

fn theory_of(t: &KdTheory) -> TheoryConfig {
    TheoryBounds {
        gamma: t.gamma,
        d_inf: t.d_inf,
        epsilon: t.epsilon,
    }
    .with_c(t.c)
}

fn condition(c: &Condition) -> KdCondition {
    KdCondition {
        passed: c.passed,
        lhs: c.lhs,
        rhs: c.rhs,
        margin: c.margin,
    }
}

fn report(r: &ConditionReport) -> KdConditionReport {
    KdConditionReport {
        all_pass: r.all_pass,
        gamma_bound: condition(&r.gamma_bound),
        c_lower: condition(&r.c_lower),
        c_initial: condition(&r.c_initial),
        mk_con1: condition(&r.mk_con1),
        mk_con2: condition(&r.mk_con2),
        mk_con3: condition(&r.mk_con3),
        mk_con3_entrance: condition(&r.mk_con3_entrance),
        mk_con4: condition(&r.mk_con4),
        quarter_circle: condition(&r.quarter_circle),
        c: r.c,
        eta: r.eta,
        m_n: r.m_n,
        lambda: r.lambda,
        lambda_tilde: r.lambda_tilde,
        d_theta0: r.d_theta0,
        d_omega0: r.d_omega0,
        d_a0: r.d_a0,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library from the
/// same thread.
#[no_mangle]
pub extern "C" fn kd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a model. `adjacency` is `n*n` row-major 0/1 entries where
/// `adjacency[i*n + j] = 1` means oscillator `j` influences `i`.
///
/// # Safety
/// `omega_nat` must point to `n` doubles, `adjacency` to `n*n` bytes, and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn kd_model_new(
    n: usize,
    m: f64,
    kappa: f64,
    alpha: f64,
    omega_nat: *const f64,
    adjacency: *const u8,
    out: *mut *mut KdModel,
) -> KdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cells = n
            .checked_mul(n)
            .ok_or_else(|| Fail(KdStatus::InvalidArgument, format!("n = {n} is too large")))?;
        let entries: Vec<i64> = input(adjacency, cells, "adjacency")?.iter().map(|&x| x as i64).collect();
        let graph = Digraph::from_row_major(n, &entries)?;
        let omega_nat = input(omega_nat, n, "omega_nat")?.to_vec();
        let params = ModelParams::new(m, kappa, alpha, omega_nat, graph)?;
        *out = Box::into_raw(Box::new(KdModel { params }));
        Ok(KdStatus::Ok)
    })
}

/// # Safety
/// `model` must come from [`kd_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kd_model_free(model: *mut KdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of oscillators, or 0 for a NULL model.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kd_model_n(model: *const KdModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.n())
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kd_model_is_strongly_connected(model: *const KdModel, out: *mut bool) -> KdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.params.graph.is_strongly_connected();
        Ok(KdStatus::Ok)
    })
}

/// Accelerations `a = ω̇` at the state `(theta, omega)`.
///
/// # Safety
/// `theta`, `omega` and `out` must each hold `kd_model_n(model)` doubles.
#[no_mangle]
pub unsafe extern "C" fn kd_acceleration(
    model: *const KdModel,
    theta: *const f64,
    omega: *const f64,
    out: *mut f64,
) -> KdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = m.params.n();
        let s = state_from(n, theta, omega)?;
        let a = acceleration(&m.params, &s)?;
        output(out, n, "out")?.copy_from_slice(&a);
        Ok(KdStatus::Ok)
    })
}

/// Jerks `b = ȧ` at the state `(theta, omega)`.
///
/// # Safety
/// `theta`, `omega` and `out` must each hold `kd_model_n(model)` doubles.
#[no_mangle]
pub unsafe extern "C" fn kd_jerk(model: *const KdModel, theta: *const f64, omega: *const f64, out: *mut f64) -> KdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = m.params.n();
        let s = state_from(n, theta, omega)?;
        let b = jerk(&m.params, &s)?;
        output(out, n, "out")?.copy_from_slice(&b);
        Ok(KdStatus::Ok)
    })
}

/// `η = 1 − 4/(c+2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kd_eta(c: u32, out: *mut f64) -> KdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = kuramoto_core::eta(c)?;
        Ok(KdStatus::Ok)
    })
}

/// Gap between the upper and lower order-weighted combinations of `z`.
///
/// # Safety
/// `z` must hold `n` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn kd_spread(z: *const f64, n: usize, c: u32, out: *mut f64) -> KdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let z = input(z, n, "z")?;
        let w = make_weights(c, n)?;
        *out = spread(z, &w)?;
        Ok(KdStatus::Ok)
    })
}

/// Smallest admissible convexity parameter for the given bounds and
/// initial phase diameter.
///
/// # Safety
/// `model` must be live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kd_auto_select_c(
    model: *const KdModel,
    gamma: f64,
    d_inf: f64,
    epsilon: f64,
    d_theta0: f64,
    out: *mut u32,
) -> KdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let bounds = TheoryBounds { gamma, d_inf, epsilon };
        *out = auto_select_c(&m.params, &bounds, d_theta0)?;
        Ok(KdStatus::Ok)
    })
}

/// Evaluates the sufficient conditions at the initial state.
///
/// # Safety
/// `theta0`/`omega0` must hold `kd_model_n(model)` doubles; `theory` and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kd_check_conditions(
    model: *const KdModel,
    theta0: *const f64,
    omega0: *const f64,
    theory: *const KdTheory,
    out: *mut KdConditionReport,
) -> KdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let theory = theory.as_ref().ok_or_else(|| null("theory"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = state_from(m.params.n(), theta0, omega0)?;
        *out = report(&check_conditions(&m.params, &s, &theory_of(theory))?);
        Ok(KdStatus::Ok)
    })
}

/// Integrates from `t = 0`. On [`KdStatus::Diverged`] `*out` holds the
/// finite prefix of the run; on other failures it is NULL.
///
/// # Safety
/// `theta0`/`omega0` must hold `kd_model_n(model)` doubles; `cfg` valid;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kd_simulate(
    model: *const KdModel,
    theta0: *const f64,
    omega0: *const f64,
    cfg: *const KdIntegrator,
    out: *mut *mut KdTrajectory,
) -> KdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = model_ref(model)?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let init = state_from(m.params.n(), theta0, omega0)?;
        let mut ic = IntegratorConfig::new(cfg.dt, cfg.t_end, cfg.record_stride);
        ic.max_steps = if cfg.max_steps == 0 { DEFAULT_MAX_STEPS } else { cfg.max_steps };
        ic.force_dt = cfg.force_dt;
        match simulate(&m.params, &init, &ic) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(KdTrajectory { traj }));
                Ok(KdStatus::Ok)
            }
            Err(Error::Diverged { t, partial }) => {
                *out = Box::into_raw(Box::new(KdTrajectory { traj: *partial }));
                Err(Fail(KdStatus::Diverged, format!("integration diverged at t = {t}")))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// # Safety
/// `traj` must come from [`kd_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kd_trajectory_free(traj: *mut KdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded samples, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn kd_trajectory_len(traj: *const KdTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.len())
}

/// Copies sample `k`. Any of `t`, `theta`, `omega` may be NULL to skip it.
///
/// # Safety
/// `traj` must be live; non-NULL `theta`/`omega` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn kd_trajectory_sample(
    traj: *const KdTrajectory,
    k: usize,
    t: *mut f64,
    theta: *mut f64,
    omega: *mut f64,
) -> KdStatus {
    guard(|| {
        let tr = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let len = tr.traj.len();
        let s = tr
            .traj
            .states()
            .get(k)
            .ok_or(Error::IndexOutOfRange { index: k, n: len })?;
        if let Some(t) = t.as_mut() {
            *t = s.t;
        }
        if !theta.is_null() {
            output(theta, s.n(), "theta")?.copy_from_slice(&s.theta);
        }
        if !omega.is_null() {
            output(omega, s.n(), "omega")?.copy_from_slice(&s.omega);
        }
        Ok(KdStatus::Ok)
    })
}

/// Checks the energy inequalities along `traj` at relative tolerance `tol`;
/// `passed` requires every inequality to hold on at least `threshold` of
/// its evaluated samples.
///
/// # Safety
/// `traj`, `theory` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kd_certify(
    traj: *const KdTrajectory,
    theory: *const KdTheory,
    tol: f64,
    threshold: f64,
    out: *mut KdCertificate,
) -> KdStatus {
    guard(|| {
        let tr = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let theory = theory.as_ref().ok_or_else(|| null("theory"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rep = certify_inequalities(&tr.traj, &theory_of(theory), tol)?;
        let mut c = KdCertificate {
            passed: rep.passes(threshold),
            samples: rep.samples as u64,
            admissible: rep.admissible as u64,
            admissible_fraction: rep.admissible_fraction,
            order_changes: rep.order_changes as u64,
            has_t_star: rep.t_star.is_some(),
            t_star: rep.t_star.unwrap_or(f64::NAN),
            has_fitted_rate: rep.fitted_rate.is_some(),
            fitted_rate: rep.fitted_rate.unwrap_or(f64::NAN),
            lambda: rep.lambda,
            lambda_tilde: rep.lambda_tilde,
            ..Default::default()
        };
        for (k, which) in Inequality::ALL.iter().enumerate() {
            let chk = rep.check(*which);
            c.evaluated[k] = chk.evaluated as u64;
            c.satisfied[k] = chk.satisfied as u64;
            c.fraction[k] = chk.fraction;
            c.worst_residual[k] = chk.worst_residual;
        }
        *out = c;
        Ok(KdStatus::Ok)
    })
}
