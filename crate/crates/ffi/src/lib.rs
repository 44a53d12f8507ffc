//! C interface to the `fsoe` library.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `*_free` function. Every fallible call returns an [`FsoeStatus`]; on a
//! non-OK status, [`fsoe_last_error`] describes the failure. That message is
//! thread-local and stays valid until the next failing call on the same thread.
//! Output pointers are only written on success unless documented otherwise.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fsoe::bifurcation::{
    beta_for_zero_eigenvalue, hopf_coefficient, hopf_locus, limit_cycle_amplitude,
    pitchfork_coefficient, CycleOptions, CycleSide,
};
use fsoe::config::RunConfig;
use fsoe::fsoe::{equilibria, rhs_fsoe, simulate_fsoe, FsoeState, Stability};
use fsoe::graph::Graph;
use fsoe::model::ModelConfig;
use fsoe::network::{check_forward_invariance, simulate_network, NetworkState};
use fsoe::ode::{SolverOptions, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsoeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A closed-form condition has no admissible solution.
    Infeasible = 3,
    /// Integration or root finding failed.
    NumericFailure = 4,
    /// The caller's buffer is too small; the required size was written.
    BufferTooSmall = 5,
    /// Malformed JSON or UTF-8.
    ParseError = 6,
    /// A Rust panic was caught at the boundary.
    InternalError = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsoeStability {
    StableNode = 0,
    StableFocus = 1,
    UnstableNode = 2,
    UnstableFocus = 3,
    Saddle = 4,
    Center = 5,
    Degenerate = 6,
}

impl From<Stability> for FsoeStability {
    fn from(s: Stability) -> Self {
        match s {
            Stability::StableNode => FsoeStability::StableNode,
            Stability::StableFocus => FsoeStability::StableFocus,
            Stability::UnstableNode => FsoeStability::UnstableNode,
            Stability::UnstableFocus => FsoeStability::UnstableFocus,
            Stability::Saddle => FsoeStability::Saddle,
            Stability::Center => FsoeStability::Center,
            Stability::Degenerate => FsoeStability::Degenerate,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsoeCycleSide {
    BelowBetaStar = 0,
    AboveBetaStar = 1,
    Undetermined = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FsoePitchforkInfo {
    pub beta_star: f64,
    pub gamma_star: f64,
    pub v0: f64,
    pub v1: f64,
    pub c: f64,
    pub c_tau: f64,
    pub degenerate: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsoeHopfInfo {
    pub beta_star: f64,
    pub gamma_star: f64,
    pub omega0: f64,
    pub a: f64,
    pub h21_re: f64,
    pub h21_im: f64,
    pub c1_re: f64,
    pub c1_im: f64,
    pub side: FsoeCycleSide,
    pub near_double_zero: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FsoeCycle {
    /// False when the trajectory settled on an equilibrium.
    pub found: bool,
    pub p_min: f64,
    pub p_max: f64,
    pub period: f64,
}

/// Model parameters.
pub struct FsoeModel(ModelConfig);

/// Interaction graph.
pub struct FsoeGraph(Graph);

/// Recorded solution of an integration.
pub struct FsoeTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: FsoeStatus, msg: impl ToString) -> FsoeStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> FsoeStatus>(f: F) -> FsoeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FsoeStatus::InternalError, "panic inside fsoe"),
    }
}

macro_rules! deref {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(v) => v,
            None => {
                return fail(
                    FsoeStatus::NullPointer,
                    concat!(stringify!($ptr), " is null"),
                )
            }
        }
    };
}

macro_rules! deref_mut {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(v) => v,
            None => {
                return fail(
                    FsoeStatus::NullPointer,
                    concat!(stringify!($ptr), " is null"),
                )
            }
        }
    };
}

fn check_model(cfg: &ModelConfig) -> Result<(), String> {
    let report = fsoe::model::validate_config(cfg);
    if report.is_ok() {
        Ok(())
    } else {
        Err(report
            .errors
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; "))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fsoe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failing call on this thread, or an empty string.
#[no_mangle]
pub extern "C" fn fsoe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Reference configuration (`tanh(3x)`, `tanh(-3x)`, `u = x + gamma * 0.5`, unit time constants).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fsoe_model_new_canonical(
    beta: f64,
    gamma: f64,
    out: *mut *mut FsoeModel,
) -> FsoeStatus {
    guard(|| {
        let out = deref_mut!(out);
        let cfg = ModelConfig::canonical_with_gamma(beta, gamma);
        if let Err(msg) = check_model(&cfg) {
            return fail(FsoeStatus::InvalidArgument, msg);
        }
        *out = Box::into_raw(Box::new(FsoeModel(cfg)));
        FsoeStatus::Ok
    })
}

/// Parses a run configuration document. A missing `beta` defaults to 0.5.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_model_from_json(
    json: *const c_char,
    out: *mut *mut FsoeModel,
) -> FsoeStatus {
    guard(|| {
        if json.is_null() {
            return fail(FsoeStatus::NullPointer, "json is null");
        }
        let out = deref_mut!(out);
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(e) => return fail(FsoeStatus::ParseError, e),
        };
        let cfg = match RunConfig::from_json(text).and_then(|rc| rc.model(None)) {
            Ok(c) => c,
            Err(fsoe::config::ConfigError::Invalid(issues)) => {
                let msg: Vec<String> = issues.iter().map(ToString::to_string).collect();
                return fail(FsoeStatus::InvalidArgument, msg.join("; "));
            }
            Err(e) => return fail(FsoeStatus::ParseError, e),
        };
        *out = Box::into_raw(Box::new(FsoeModel(cfg)));
        FsoeStatus::Ok
    })
}

/// # Safety
/// `model` must come from a `fsoe_model_*` constructor and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fsoe_model_free(model: *mut FsoeModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsoe_model_set_beta(model: *mut FsoeModel, beta: f64) -> FsoeStatus {
    guard(|| {
        let m = deref_mut!(model);
        if !(0.0..=1.0).contains(&beta) {
            return fail(
                FsoeStatus::InvalidArgument,
                format!("beta out of range [0, 1]: {beta}"),
            );
        }
        m.0.beta = beta;
        FsoeStatus::Ok
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_model_get_beta(model: *const FsoeModel, out: *mut f64) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        *deref_mut!(out) = m.0.beta;
        FsoeStatus::Ok
    })
}

/// Right-hand side of the synchronized planar system at `(p, e)`.
///
/// # Safety
/// `model` must be a live handle; `out_dp` and `out_de` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_rhs(
    model: *const FsoeModel,
    p: f64,
    e: f64,
    out_dp: *mut f64,
    out_de: *mut f64,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let dp = deref_mut!(out_dp);
        let de = deref_mut!(out_de);
        (*dp, *de) = rhs_fsoe(&m.0, FsoeState::new(p, e));
        FsoeStatus::Ok
    })
}

/// Equilibria of the planar system, sorted by `p`.
///
/// `out_count` always receives the number of equilibria; when it exceeds
/// `capacity` nothing else is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `model` must be a live handle; each output array must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn fsoe_equilibria(
    model: *const FsoeModel,
    out_p: *mut f64,
    out_e: *mut f64,
    out_stability: *mut FsoeStability,
    capacity: usize,
    out_count: *mut usize,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let count = deref_mut!(out_count);
        let eqs = match equilibria(&m.0) {
            Ok(v) => v,
            Err(e) => return fail(FsoeStatus::NumericFailure, e),
        };
        *count = eqs.len();
        if eqs.len() > capacity {
            return fail(
                FsoeStatus::BufferTooSmall,
                format!("{} equilibria, capacity {capacity}", eqs.len()),
            );
        }
        if eqs.is_empty() {
            return FsoeStatus::Ok;
        }
        if out_p.is_null() || out_e.is_null() || out_stability.is_null() {
            return fail(FsoeStatus::NullPointer, "output array is null");
        }
        for (i, eq) in eqs.iter().enumerate() {
            unsafe {
                *out_p.add(i) = eq.p_star;
                *out_e.add(i) = eq.e_star;
                *out_stability.add(i) = eq.stability.into();
            }
        }
        FsoeStatus::Ok
    })
}

/// `beta` at which the origin has a zero eigenvalue for the model's `gamma`.
///
/// # Safety
/// `model` must be a live handle and `out_beta` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_pitchfork_beta(
    model: *const FsoeModel,
    out_beta: *mut f64,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let out = deref_mut!(out_beta);
        match beta_for_zero_eigenvalue(&m.0, 0.0, 0.0) {
            Ok(b) => {
                *out = b;
                FsoeStatus::Ok
            }
            Err(reason) => fail(FsoeStatus::Infeasible, reason),
        }
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_pitchfork_coefficient(
    model: *const FsoeModel,
    beta_star: f64,
    gamma_star: f64,
    out: *mut FsoePitchforkInfo,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let out = deref_mut!(out);
        match pitchfork_coefficient(&m.0, beta_star, gamma_star) {
            Ok(info) => {
                *out = FsoePitchforkInfo {
                    beta_star: info.beta_star,
                    gamma_star: info.gamma_star,
                    v0: info.eigenvector_v[0],
                    v1: info.eigenvector_v[1],
                    c: info.coefficient_c,
                    c_tau: info.coefficient_c_tau,
                    degenerate: info.degenerate,
                };
                FsoeStatus::Ok
            }
            Err(e) => fail(FsoeStatus::Infeasible, e),
        }
    })
}

/// Hopf point of the origin for the model's `gamma`.
///
/// # Safety
/// `model` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_hopf_locus(
    model: *const FsoeModel,
    out_beta: *mut f64,
    out_omega0: *mut f64,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let b = deref_mut!(out_beta);
        let w = deref_mut!(out_omega0);
        match hopf_locus(&m.0, 0.0, 0.0) {
            Ok(l) => {
                *b = l.beta_star;
                *w = l.omega0;
                FsoeStatus::Ok
            }
            Err(reason) => fail(FsoeStatus::Infeasible, reason),
        }
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_hopf_coefficient(
    model: *const FsoeModel,
    beta_star: f64,
    gamma_star: f64,
    out: *mut FsoeHopfInfo,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let out = deref_mut!(out);
        match hopf_coefficient(&m.0, beta_star, gamma_star) {
            Ok(info) => {
                *out = FsoeHopfInfo {
                    beta_star: info.beta_star,
                    gamma_star: info.gamma_star,
                    omega0: info.omega0,
                    a: info.a,
                    h21_re: info.h21.re,
                    h21_im: info.h21.im,
                    c1_re: info.c1.re,
                    c1_im: info.c1.im,
                    side: match info.supercritical_side {
                        CycleSide::BelowBetaStar => FsoeCycleSide::BelowBetaStar,
                        CycleSide::AboveBetaStar => FsoeCycleSide::AboveBetaStar,
                        CycleSide::Undetermined => FsoeCycleSide::Undetermined,
                    },
                    near_double_zero: info.near_double_zero,
                };
                FsoeStatus::Ok
            }
            Err(e) => fail(FsoeStatus::Infeasible, e),
        }
    })
}

/// Attracting periodic orbit reached from a small perturbation of the origin.
/// Non-positive `t_transient`, `t_measure` or `tol_cycle` select the defaults (300, 200, 1e-3).
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_limit_cycle(
    model: *const FsoeModel,
    beta: f64,
    t_transient: f64,
    t_measure: f64,
    tol_cycle: f64,
    out: *mut FsoeCycle,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let out = deref_mut!(out);
        let mut opts = CycleOptions::default();
        if t_transient > 0.0 {
            opts.t_transient = t_transient;
        }
        if t_measure > 0.0 {
            opts.t_measure = t_measure;
        }
        if tol_cycle > 0.0 {
            opts.tol_cycle = tol_cycle;
        }
        match limit_cycle_amplitude(&m.0, beta, &opts) {
            Ok(c) => {
                *out = match c {
                    Some(c) => FsoeCycle {
                        found: true,
                        p_min: c.p_min,
                        p_max: c.p_max,
                        period: c.period,
                    },
                    None => FsoeCycle::default(),
                };
                FsoeStatus::Ok
            }
            Err(e) => fail(FsoeStatus::NumericFailure, e),
        }
    })
}

/// Builds a graph from `edge_count` vertex pairs stored as `[i0, j0, i1, j1, ...]`.
///
/// # Safety
/// `edges` must point to `2 * edge_count` values (may be null when `edge_count` is 0); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_graph_new(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    out: *mut *mut FsoeGraph,
) -> FsoeStatus {
    guard(|| {
        let out = deref_mut!(out);
        let flat: &[usize] = if edge_count == 0 {
            &[]
        } else if edges.is_null() {
            return fail(FsoeStatus::NullPointer, "edges is null");
        } else {
            unsafe { std::slice::from_raw_parts(edges, 2 * edge_count) }
        };
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        match Graph::new(n, &pairs) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(FsoeGraph(g)));
                FsoeStatus::Ok
            }
            Err(e) => fail(FsoeStatus::InvalidArgument, e),
        }
    })
}

/// Parses `{"n": .., "edges": [[i, j], ..]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_graph_from_json(
    json: *const c_char,
    out: *mut *mut FsoeGraph,
) -> FsoeStatus {
    guard(|| {
        if json.is_null() {
            return fail(FsoeStatus::NullPointer, "json is null");
        }
        let out = deref_mut!(out);
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(e) => return fail(FsoeStatus::ParseError, e),
        };
        match Graph::from_json(text) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(FsoeGraph(g)));
                FsoeStatus::Ok
            }
            Err(e @ fsoe::graph::GraphError::Parse(_)) => fail(FsoeStatus::ParseError, e),
            Err(e) => fail(FsoeStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsoe_graph_vertex_count(
    graph: *const FsoeGraph,
    out: *mut usize,
) -> FsoeStatus {
    guard(|| {
        let g = deref!(graph);
        *deref_mut!(out) = g.0.n();
        FsoeStatus::Ok
    })
}

/// # Safety
/// `graph` must come from a `fsoe_graph_*` constructor and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fsoe_graph_free(graph: *mut FsoeGraph) {
    if !graph.is_null() {
        drop(unsafe { Box::from_raw(graph) });
    }
}

fn adaptive(tol: f64) -> Result<SolverOptions, FsoeStatus> {
    if tol > 0.0 && tol.is_finite() {
        Ok(SolverOptions::adaptive(tol, tol))
    } else {
        Err(fail(
            FsoeStatus::InvalidArgument,
            format!("tolerance must be positive: {tol}"),
        ))
    }
}

/// Integrates the planar system on `[0, t_end]` with the adaptive method.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_simulate(
    model: *const FsoeModel,
    p0: f64,
    e0: f64,
    t_end: f64,
    tol: f64,
    out: *mut *mut FsoeTrajectory,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let out = deref_mut!(out);
        let opts = match adaptive(tol) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match simulate_fsoe(&m.0, FsoeState::new(p0, e0), t_end, &opts) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(FsoeTrajectory(t)));
                FsoeStatus::Ok
            }
            Err(fsoe::ode::SolverError::InvalidInput(msg)) => {
                fail(FsoeStatus::InvalidArgument, msg)
            }
            Err(e) => fail(FsoeStatus::NumericFailure, e),
        }
    })
}

/// Integrates the network model from opinions `x0` (length `n`) and environment `e0`.
///
/// # Safety
/// `model` and `graph` must be live handles, `x0` must hold `n` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_simulate_network(
    model: *const FsoeModel,
    graph: *const FsoeGraph,
    x0: *const f64,
    n: usize,
    e0: f64,
    t_end: f64,
    tol: f64,
    out: *mut *mut FsoeTrajectory,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let g = deref!(graph);
        let out = deref_mut!(out);
        if x0.is_null() {
            return fail(FsoeStatus::NullPointer, "x0 is null");
        }
        let opts = match adaptive(tol) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let x = unsafe { std::slice::from_raw_parts(x0, n) }.to_vec();
        match simulate_network(&m.0, &g.0, &NetworkState { x, e: e0 }, t_end, &opts) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(FsoeTrajectory(t)));
                FsoeStatus::Ok
            }
            Err(e @ fsoe::network::NetworkError::SizeMismatch { .. }) => {
                fail(FsoeStatus::InvalidArgument, e)
            }
            Err(e) => fail(FsoeStatus::NumericFailure, e),
        }
    })
}

/// Number of samples and state dimension.
///
/// # Safety
/// `traj` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_trajectory_shape(
    traj: *const FsoeTrajectory,
    out_len: *mut usize,
    out_dim: *mut usize,
) -> FsoeStatus {
    guard(|| {
        let t = deref!(traj);
        *deref_mut!(out_len) = t.0.len();
        *deref_mut!(out_dim) = t.0.dim();
        FsoeStatus::Ok
    })
}

/// Copies sample times (`len` values) and states (`len * dim` values, row-major).
///
/// # Safety
/// `traj` must be a live handle; `out_times` must hold `capacity` values and
/// `out_states` `capacity * dim` values.
#[no_mangle]
pub unsafe extern "C" fn fsoe_trajectory_copy(
    traj: *const FsoeTrajectory,
    out_times: *mut f64,
    out_states: *mut f64,
    capacity: usize,
) -> FsoeStatus {
    guard(|| {
        let t = deref!(traj);
        let (len, dim) = (t.0.len(), t.0.dim());
        if len > capacity {
            return fail(
                FsoeStatus::BufferTooSmall,
                format!("{len} samples, capacity {capacity}"),
            );
        }
        if out_times.is_null() || out_states.is_null() {
            return fail(FsoeStatus::NullPointer, "output array is null");
        }
        let times = unsafe { std::slice::from_raw_parts_mut(out_times, len) };
        times.copy_from_slice(&t.0.times);
        let states = unsafe { std::slice::from_raw_parts_mut(out_states, len * dim) };
        for (row, y) in states.chunks_exact_mut(dim).zip(&t.0.states) {
            row.copy_from_slice(y);
        }
        FsoeStatus::Ok
    })
}

/// # Safety
/// `traj` must come from a simulation call and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fsoe_trajectory_free(traj: *mut FsoeTrajectory) {
    if !traj.is_null() {
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Largest spread between opinions along a trajectory started at consensus `(p0, e0)`.
///
/// # Safety
/// `model` and `graph` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fsoe_forward_invariance(
    model: *const FsoeModel,
    graph: *const FsoeGraph,
    p0: f64,
    e0: f64,
    t_end: f64,
    out: *mut f64,
) -> FsoeStatus {
    guard(|| {
        let m = deref!(model);
        let g = deref!(graph);
        let out = deref_mut!(out);
        match check_forward_invariance(&m.0, &g.0, p0, e0, t_end) {
            Ok(v) => {
                *out = v;
                FsoeStatus::Ok
            }
            Err(e @ fsoe::network::NetworkError::Disconnected) => {
                fail(FsoeStatus::InvalidArgument, e)
            }
            Err(e) => fail(FsoeStatus::NumericFailure, e),
        }
    })
}
