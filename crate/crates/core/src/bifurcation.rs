//! Bifurcations of the synchronized system in the trust parameter `beta`.
//!
//! Two independent routes are provided. The closed-form route evaluates the
//! singularity conditions of the planar Jacobian and the cubic normal-form
//! coefficients at the origin. The numeric route sweeps `beta`, follows the
//! equilibrium branches, watches scalar test functions on the origin branch
//! (determinant for the pitchfork, trace for the Hopf point) and the global
//! equilibrium count (folds), and refines each event by bisection.

use num_complex::Complex64;
use thiserror::Error;

use crate::fsoe::{
    eigenvalues_2x2, environment_at_rest, equilibria_with, find_fixed_points, jacobian_fsoe,
    simulate_fsoe, Equilibrium, FsoeError, FsoeState, DEFAULT_GRID, DEFAULT_ROOT_TOL,
};
use crate::model::{check_odd_symmetry, Derivatives, ModelConfig};
use crate::ode::{Direction, EventPlane, SolverError, SolverOptions};

/// Residual allowed when checking that a parameter pair sits on a singular locus.
pub const LOCUS_TOL: f64 = 1e-10;
/// `|Re h21|` at or below this leaves the cycle side undetermined.
pub const HOPF_DEGENERACY_TOL: f64 = 1e-10;
/// `|c|` at or below this is a degenerate pitchfork.
pub const PITCHFORK_DEGENERACY_TOL: f64 = 1e-10;
/// Hopf frequencies below this are flagged as close to the double-zero point.
pub const NEAR_DOUBLE_ZERO_OMEGA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum Infeasible {
    /// `s'(p) <= 1`: the signal function does not amplify at `p`.
    AmplifierConditionViolated,
    /// `(1 - beta) s'(p) <= 1`.
    EffectiveGainTooLow,
    /// `(1 - beta) s'(p) <= 1 - u'(p) r'(e) beta`.
    CouplingConditionViolated,
    /// `beta u'(p) r'(e) = 0`, so the zero-eigenvalue locus degenerates to `gamma = 0`.
    DegenerateCoupling,
    GammaOutOfRange(f64),
    /// The affine map from `beta` to the Hopf `gamma` misses `[0, 1]`.
    NoBetaInRange,
    /// Hopf point requires `1 < (1 - beta) s'(p) < 1 + 1/tau`.
    HopfGainWindow,
    /// Hopf point requires `beta` strictly inside `(beta_-, min(beta_+, 1))`.
    OutsideComplexWindow,
    /// `Delta_beta < 0`.
    NoDoubleZero,
}

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasible::AmplifierConditionViolated => {
                f.write_str("amplifier condition violated: s'(p) <= 1")
            }
            Infeasible::EffectiveGainTooLow => f.write_str("(1 - beta) s'(p) <= 1"),
            Infeasible::CouplingConditionViolated => {
                f.write_str("(1 - beta) s'(p) <= 1 - u'(p) r'(e) beta")
            }
            Infeasible::DegenerateCoupling => {
                f.write_str("degenerate coupling: beta u'(p) r'(e) = 0 forces gamma = 0")
            }
            Infeasible::GammaOutOfRange(g) => write!(f, "gamma = {g} outside [0, 1]"),
            Infeasible::NoBetaInRange => f.write_str("no beta in [0, 1]"),
            Infeasible::HopfGainWindow => {
                f.write_str("(1 - beta) s'(p) outside the open window (1, 1 + 1/tau)")
            }
            Infeasible::OutsideComplexWindow => {
                f.write_str("beta outside (beta_-, min(beta_+, 1)): eigenvalues are not complex")
            }
            Infeasible::NoDoubleZero => f.write_str("Delta_beta < 0: no double zero eigenvalue"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BifurcationError {
    #[error("infeasible: {0}")]
    Infeasible(Infeasible),
    #[error("(beta, gamma) is not on the zero-eigenvalue locus (residual {residual:e})")]
    NotSingular { residual: f64 },
    #[error("(beta, gamma) is not a Hopf point (residual {residual:e})")]
    NotHopfPoint { residual: f64 },
    #[error("symmetry assumption violated for {0}")]
    NotOdd(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Fsoe(#[from] FsoeError),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
}

impl From<Infeasible> for BifurcationError {
    fn from(value: Infeasible) -> Self {
        BifurcationError::Infeasible(value)
    }
}

/// First derivatives of `s`, `r`, `u` at a state.
#[derive(Debug, Clone, Copy)]
struct Slopes {
    ds: f64,
    dr: f64,
    du: f64,
}

impl Slopes {
    fn at(cfg: &ModelConfig, p: f64, e: f64) -> Self {
        Slopes {
            ds: cfg.s.derivative(p),
            dr: cfg.r.derivative(e),
            du: cfg.u.derivative(p),
        }
    }

    fn ur(&self) -> f64 {
        self.du * self.dr
    }
}

/// `gamma = -u'(p) r'(e) beta / ((1 - beta) s'(p) - 1)` for `beta = cfg.beta`,
/// with the side condition `(1 - beta) s'(p) > max(1, 1 - u'(p) r'(e) beta)`.
pub fn gamma_for_zero_eigenvalue(cfg: &ModelConfig, p: f64, e: f64) -> Result<f64, Infeasible> {
    let d = Slopes::at(cfg, p, e);
    let beta = cfg.beta;
    if d.ds <= 1.0 {
        return Err(Infeasible::AmplifierConditionViolated);
    }
    let gain = (1.0 - beta) * d.ds;
    if gain <= 1.0 {
        return Err(Infeasible::EffectiveGainTooLow);
    }
    if gain <= 1.0 - d.ur() * beta {
        return Err(Infeasible::CouplingConditionViolated);
    }
    let numerator = -d.ur() * beta;
    if numerator == 0.0 {
        return Err(Infeasible::DegenerateCoupling);
    }
    let gamma = numerator / (gain - 1.0);
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Infeasible::GammaOutOfRange(gamma));
    }
    Ok(gamma)
}

/// Inverse of [`gamma_for_zero_eigenvalue`] in `beta` for `gamma = cfg.gamma`.
pub fn beta_for_zero_eigenvalue(cfg: &ModelConfig, p: f64, e: f64) -> Result<f64, Infeasible> {
    let d = Slopes::at(cfg, p, e);
    if d.ds <= 1.0 {
        return Err(Infeasible::AmplifierConditionViolated);
    }
    let gamma = cfg.gamma;
    // gamma ((1 - beta) s' - 1) + u' r' beta = 0 is affine in beta
    let denom = gamma * d.ds - d.ur();
    if denom == 0.0 {
        return Err(Infeasible::NoBetaInRange);
    }
    let beta = gamma * (d.ds - 1.0) / denom;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Infeasible::NoBetaInRange);
    }
    gamma_for_zero_eigenvalue(&cfg.with_beta(beta), p, e)?;
    Ok(beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleZero {
    pub delta_beta: f64,
    /// `(beta_-, beta_+)` when `delta_beta >= 0`.
    pub roots: Option<(f64, f64)>,
    /// Whether `(1 - beta_-) s'(p) > 1`.
    pub minus_feasible: bool,
    /// Whether `(1 - beta_+) s'(p) > 1`.
    pub plus_feasible: bool,
}

/// Parameter values where trace and determinant vanish together.
pub fn beta_double_zero(cfg: &ModelConfig, p: f64, e: f64) -> DoubleZero {
    beta_double_zero_from(&Slopes::at(cfg, p, e), cfg.tau())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfLocus {
    pub beta_star: f64,
    pub omega0: f64,
}

/// Solves `gamma = tau ((1 - beta) s'(p) - 1)` for `beta` at `gamma = cfg.gamma`
/// and checks that the eigenvalues there are a purely imaginary pair.
pub fn hopf_locus(cfg: &ModelConfig, p: f64, e: f64) -> Result<HopfLocus, Infeasible> {
    let d = Slopes::at(cfg, p, e);
    if d.ds <= 1.0 {
        return Err(Infeasible::AmplifierConditionViolated);
    }
    let tau = cfg.tau();
    let gamma = cfg.gamma;
    let beta = 1.0 - (gamma / tau + 1.0) / d.ds;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Infeasible::NoBetaInRange);
    }
    hopf_window(cfg, &d, beta)?;
    let jac = jacobian_fsoe(&cfg.with_beta(beta), FsoeState::new(p, e));
    Ok(HopfLocus {
        beta_star: beta,
        omega0: jac.det.sqrt(),
    })
}

fn hopf_window(cfg: &ModelConfig, d: &Slopes, beta: f64) -> Result<(), Infeasible> {
    let tau = cfg.tau();
    let gain = (1.0 - beta) * d.ds;
    if !(gain > 1.0 && gain < 1.0 + 1.0 / tau) {
        return Err(Infeasible::HopfGainWindow);
    }
    let dz = beta_double_zero_from(d, tau);
    match dz.roots {
        Some((minus, plus)) if beta > minus && beta < plus.min(1.0) => Ok(()),
        _ => Err(Infeasible::OutsideComplexWindow),
    }
}

fn beta_double_zero_from(d: &Slopes, tau: f64) -> DoubleZero {
    let ur = d.ur();
    let delta_beta = ur * (ur - 4.0 * tau * d.ds * (d.ds - 1.0));
    if delta_beta < 0.0 || d.ds == 0.0 {
        return DoubleZero {
            delta_beta,
            roots: None,
            minus_feasible: false,
            plus_feasible: false,
        };
    }
    let base = 1.0 - 1.0 / d.ds;
    let scale = 2.0 * tau * d.ds * d.ds;
    let sq = delta_beta.sqrt();
    let (minus, plus) = (base + (-ur - sq) / scale, base + (-ur + sq) / scale);
    DoubleZero {
        delta_beta,
        roots: Some((minus, plus)),
        minus_feasible: (1.0 - minus) * d.ds > 1.0,
        plus_feasible: (1.0 - plus) * d.ds > 1.0,
    }
}

/// All singularity conditions of the planar Jacobian at `(p, e)` for the
/// configuration's current `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityConditions {
    pub gamma_zero: Result<f64, Infeasible>,
    pub beta_minus: Option<f64>,
    pub beta_plus: Option<f64>,
    pub delta_beta: f64,
    pub beta_minus_feasible: bool,
    pub beta_plus_feasible: bool,
    /// `tau ((1 - beta) s'(p) - 1)` when the imaginary-pair conditions hold.
    pub gamma_hopf: Result<f64, Infeasible>,
    /// `sqrt(det)` at `(beta, gamma_hopf)`.
    pub omega0: Option<f64>,
}

pub fn singularity_conditions(cfg: &ModelConfig, p: f64, e: f64) -> SingularityConditions {
    let d = Slopes::at(cfg, p, e);
    let dz = beta_double_zero(cfg, p, e);
    let gamma_hopf = if d.ds <= 1.0 {
        Err(Infeasible::AmplifierConditionViolated)
    } else {
        let g = cfg.tau() * ((1.0 - cfg.beta) * d.ds - 1.0);
        hopf_window(cfg, &d, cfg.beta).and_then(|_| {
            if (0.0..=1.0).contains(&g) {
                Ok(g)
            } else {
                Err(Infeasible::GammaOutOfRange(g))
            }
        })
    };
    let omega0 = gamma_hopf.as_ref().ok().map(|&g| {
        jacobian_fsoe(&cfg.with_gamma(g), FsoeState::new(p, e))
            .det
            .sqrt()
    });
    SingularityConditions {
        gamma_zero: gamma_for_zero_eigenvalue(cfg, p, e),
        beta_minus: dz.roots.map(|r| r.0),
        beta_plus: dz.roots.map(|r| r.1),
        delta_beta: dz.delta_beta,
        beta_minus_feasible: dz.minus_feasible,
        beta_plus_feasible: dz.plus_feasible,
        gamma_hopf,
        omega0,
    }
}

fn origin_derivatives(cfg: &ModelConfig) -> (Derivatives, Derivatives, Derivatives) {
    (
        cfg.s.eval_with_derivatives(0.0),
        cfg.r.eval_with_derivatives(0.0),
        cfg.u.eval_with_derivatives(0.0),
    )
}

fn require_odd(cfg: &ModelConfig) -> Result<(), BifurcationError> {
    let report = check_odd_symmetry(cfg, 101);
    match report.first() {
        None => Ok(()),
        Some(v) => Err(BifurcationError::NotOdd(format!(
            "{} at x = {} (residual {:e})",
            v.function, v.x, v.residual
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchforkInfo {
    pub beta_star: f64,
    pub gamma_star: f64,
    /// Kernel vector `(1, u'(0)/gamma*)`.
    pub eigenvector_v: [f64; 2],
    /// Cubic coefficient without time-constant weights.
    pub coefficient_c: f64,
    /// Cubic coefficient with `1/tau_x`, `1/tau_e` weights; its sign decides.
    pub coefficient_c_tau: f64,
    pub degenerate: bool,
}

/// `(c, c_tau)` at the origin, without checking that `(beta*, gamma*)` is singular.
pub fn pitchfork_cubic_terms(cfg: &ModelConfig, beta_star: f64, gamma_star: f64) -> (f64, f64) {
    let (s, r, u) = origin_derivatives(cfg);
    let b = beta_star;
    let g = gamma_star;
    let u_ratio3 = (u.f1 / g).powi(3);
    let c = (1.0 - b) * s.f3 + b * r.f3 * u_ratio3 + b * r.f1 / g * u.f3;
    let c_tau = (1.0 - b) * s.f3 / cfg.tau_x
        + b * r.f3 * u_ratio3 / cfg.tau_x
        + b * r.f1 * u.f3 / (cfg.tau_e * g);
    (c, c_tau)
}

pub fn pitchfork_coefficient(
    cfg: &ModelConfig,
    beta_star: f64,
    gamma_star: f64,
) -> Result<PitchforkInfo, BifurcationError> {
    require_odd(&cfg.with_gamma(gamma_star))?;
    let at_star = cfg.with_beta(beta_star).with_gamma(gamma_star);
    let gamma = gamma_for_zero_eigenvalue(&at_star, 0.0, 0.0).map_err(|_| {
        let j = jacobian_fsoe(&at_star, FsoeState::origin());
        BifurcationError::NotSingular {
            residual: j.det.abs(),
        }
    })?;
    let residual = (gamma - gamma_star).abs();
    if residual > LOCUS_TOL {
        return Err(BifurcationError::NotSingular { residual });
    }
    let du = cfg.u.derivative(0.0);
    let (c, c_tau) = pitchfork_cubic_terms(cfg, beta_star, gamma_star);
    Ok(PitchforkInfo {
        beta_star,
        gamma_star,
        eigenvector_v: [1.0, du / gamma_star],
        coefficient_c: c,
        coefficient_c_tau: c_tau,
        degenerate: c_tau.abs() <= PITCHFORK_DEGENERACY_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleSide {
    BelowBetaStar,
    AboveBetaStar,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfInfo {
    pub beta_star: f64,
    pub gamma_star: f64,
    pub omega0: f64,
    /// `((1 - beta*) s'(0) - 1) / tau_x`, the upper-left Jacobian entry.
    pub a: f64,
    pub h21: Complex64,
    /// First Lyapunov coefficient, `h21 / 2`.
    pub c1: Complex64,
    pub supercritical_side: CycleSide,
    pub near_double_zero: bool,
}

/// `h21` at the origin for given `(beta*, omega0, a)`, without locus checks.
pub fn hopf_h21(cfg: &ModelConfig, beta_star: f64, omega0: f64, a: f64) -> Complex64 {
    let (s, r, u) = origin_derivatives(cfg);
    let b = beta_star;
    let iw = Complex64::new(0.0, omega0);
    let br3 = (b * r.f1).powi(3);
    let tx = cfg.tau_x;
    let bracket = (1.0 - b) * s.f3 * br3 / tx.powi(3) + b * r.f3 * (iw + a) * (iw - a).powi(2);
    u.f1 * bracket - u.f3 * (iw + a) * br3 / (tx * tx)
}

pub fn hopf_coefficient(
    cfg: &ModelConfig,
    beta_star: f64,
    gamma_star: f64,
) -> Result<HopfInfo, BifurcationError> {
    require_odd(&cfg.with_gamma(gamma_star))?;
    let at_star = cfg.with_beta(beta_star).with_gamma(gamma_star);
    let ds = cfg.s.derivative(0.0);
    let residual = (gamma_star - cfg.tau() * ((1.0 - beta_star) * ds - 1.0)).abs();
    let jac = jacobian_fsoe(&at_star, FsoeState::origin());
    if residual > LOCUS_TOL || jac.det <= 0.0 {
        return Err(BifurcationError::NotHopfPoint {
            residual: residual.max(if jac.det <= 0.0 { -jac.det } else { 0.0 }),
        });
    }
    let omega0 = jac.det.sqrt();
    let a = jac.a11;
    let h21 = hopf_h21(cfg, beta_star, omega0, a);
    let side = if h21.re.abs() <= HOPF_DEGENERACY_TOL {
        CycleSide::Undetermined
    } else {
        CycleSide::BelowBetaStar
    };
    Ok(HopfInfo {
        beta_star,
        gamma_star,
        omega0,
        a,
        h21,
        c1: h21 / 2.0,
        supercritical_side: side,
        near_double_zero: omega0 < NEAR_DOUBLE_ZERO_OMEGA,
    })
}

/// Largest real part among the origin eigenvalues at `beta`.
pub fn origin_leading_real_part(cfg: &ModelConfig, beta: f64) -> f64 {
    let e0 = cfg.u.eval(0.0) / cfg.gamma - cfg.ebar;
    let j = jacobian_fsoe(&cfg.with_beta(beta), FsoeState::new(0.0, e0));
    eigenvalues_2x2(&j)[0].re
}

/// Central finite difference of the leading real part of the origin
/// eigenvalues with respect to `beta`.
pub fn eigenvalue_crossing_slope(cfg: &ModelConfig, beta: f64, step: f64) -> f64 {
    (origin_leading_real_part(cfg, beta + step) - origin_leading_real_part(cfg, beta - step))
        / (2.0 * step)
}

// ---------------------------------------------------------------------------
// Limit cycles

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOptions {
    pub t_transient: f64,
    pub t_measure: f64,
    /// Below this peak-to-peak range in `p` the orbit counts as settled.
    pub tol_cycle: f64,
    /// Relative agreement required between successive return times.
    pub period_tol: f64,
    pub min_crossings: usize,
    /// Relative shrink of the section return value that marks a decaying spiral.
    pub decay_tol: f64,
    pub initial_p: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            t_transient: 300.0,
            t_measure: 200.0,
            tol_cycle: 1e-3,
            period_tol: 0.01,
            min_crossings: 3,
            decay_tol: 1e-3,
            initial_p: 0.01,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleAmplitude {
    pub p_min: f64,
    pub p_max: f64,
    pub period: f64,
}

impl CycleAmplitude {
    /// Half the peak-to-peak excursion of `p`.
    pub fn amplitude(&self) -> f64 {
        0.5 * (self.p_max - self.p_min)
    }
}

/// Runs the planar system from a small perturbation of the origin and reports
/// the attracting periodic orbit, if the trajectory settles on one.
///
/// Periodicity is read from upward crossings of the plane `e = e_origin`.
pub fn limit_cycle_amplitude(
    cfg: &ModelConfig,
    beta: f64,
    opts: &CycleOptions,
) -> Result<Option<CycleAmplitude>, BifurcationError> {
    let cfg = cfg.with_beta(beta);
    let e_origin = environment_at_rest(&cfg, 0.0)?;
    let plane = EventPlane {
        index: 1,
        threshold: e_origin,
        direction: Direction::Up,
    };
    let solver = SolverOptions::adaptive(opts.abs_tol, opts.rel_tol).with_event(plane);
    let t_end = opts.t_transient + opts.t_measure;
    let traj = simulate_fsoe(
        &cfg,
        FsoeState::new(opts.initial_p, e_origin),
        t_end,
        &solver,
    )?;

    let (mut p_min, mut p_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, y) in traj.times.iter().zip(&traj.states) {
        if *t >= opts.t_transient {
            p_min = p_min.min(y[0]);
            p_max = p_max.max(y[0]);
        }
    }
    if !(p_max - p_min >= opts.tol_cycle) {
        return Ok(None);
    }
    let crossings: Vec<(f64, f64)> = traj
        .events
        .iter()
        .filter(|ev| ev.t >= opts.t_transient)
        .map(|ev| (ev.t, ev.state[0]))
        .collect();
    if crossings.len() < opts.min_crossings.max(2) {
        return Ok(None);
    }
    let periods: Vec<f64> = crossings.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let consistent = periods
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= opts.period_tol * w[0].abs());
    if !consistent {
        return Ok(None);
    }
    let first = crossings[0].1;
    let last = crossings[crossings.len() - 1].1;
    if last.abs() < (1.0 - opts.decay_tol) * first.abs() {
        return Ok(None);
    }
    let period = periods.iter().sum::<f64>() / periods.len() as f64;
    Ok(Some(CycleAmplitude {
        p_min,
        p_max,
        period,
    }))
}

// ---------------------------------------------------------------------------
// Sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BifurcationKind {
    Pitchfork,
    Hopf,
    Fold,
}

impl BifurcationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BifurcationKind::Pitchfork => "Pitchfork",
            BifurcationKind::Hopf => "Hopf",
            BifurcationKind::Fold => "Fold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detection {
    ClosedForm,
    Numeric,
}

impl Detection {
    pub fn as_str(&self) -> &'static str {
        match self {
            Detection::ClosedForm => "ClosedForm",
            Detection::Numeric => "Numeric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationPoint {
    pub beta: f64,
    pub kind: BifurcationKind,
    pub detection: Detection,
    pub omega0: Option<f64>,
    /// `c` for a pitchfork, `Re(h21)` for a Hopf point.
    pub coefficient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub beta: f64,
    pub equilibrium: Equilibrium,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    pub beta_grid: Vec<f64>,
    pub branches: Vec<Branch>,
    pub bifurcation_points: Vec<BifurcationPoint>,
    /// One entry per grid value; `None` when no cycle was found or cycles were not requested.
    pub cycle_amplitudes: Vec<Option<CycleAmplitude>>,
    /// Grid values whose analysis failed, with the reason.
    pub gaps: Vec<(f64, String)>,
}

impl BifurcationDiagram {
    pub fn points_of(&self, kind: BifurcationKind, detection: Detection) -> Vec<&BifurcationPoint> {
        self.bifurcation_points
            .iter()
            .filter(|p| p.kind == kind && p.detection == detection)
            .collect()
    }

    /// Equilibrium count at each grid value.
    pub fn equilibrium_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.beta_grid.len()];
        for b in &self.branches {
            for pt in &b.points {
                if let Some(i) = self.beta_grid.iter().position(|&x| x == pt.beta) {
                    counts[i] += 1;
                }
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub cycles: Option<CycleOptions>,
    /// Worker threads; `0` uses the available parallelism.
    pub jobs: usize,
    pub grid_n: usize,
    pub root_tol: f64,
    /// Bisection bracket width at which refinement stops.
    pub refine_tol: f64,
    /// Largest `|dp|` between consecutive grid values linked into one branch.
    pub branch_link: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            cycles: None,
            jobs: 0,
            grid_n: DEFAULT_GRID,
            root_tol: DEFAULT_ROOT_TOL,
            refine_tol: 1e-8,
            branch_link: 0.1,
        }
    }
}

struct Column {
    beta: f64,
    equilibria: Result<Vec<Equilibrium>, String>,
    cycle: Result<Option<CycleAmplitude>, String>,
}

fn origin_test_values(cfg: &ModelConfig, beta: f64) -> (f64, f64) {
    let e0 = cfg.u.eval(0.0) / cfg.gamma - cfg.ebar;
    let j = jacobian_fsoe(&cfg.with_beta(beta), FsoeState::new(0.0, e0));
    (j.det, j.trace)
}

fn bisect_beta<F: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, tol: f64, left_side: F) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if left_side(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn origin_is_equilibrium(cfg: &ModelConfig) -> bool {
    if cfg.gamma == 0.0 {
        return false;
    }
    let e0 = cfg.u.eval(0.0) / cfg.gamma - cfg.ebar;
    let h0 = cfg.beta * cfg.r.eval(e0) + (1.0 - cfg.beta) * cfg.s.eval(0.0);
    h0.abs() <= DEFAULT_ROOT_TOL
}

/// Equilibria, test functions and (optionally) cycle amplitudes over a uniform `beta` grid.
pub fn sweep_beta(
    cfg_base: &ModelConfig,
    beta_min: f64,
    beta_max: f64,
    steps: usize,
    opts: &SweepOptions,
) -> Result<BifurcationDiagram, BifurcationError> {
    if !(0.0..=1.0).contains(&beta_min) || !(0.0..=1.0).contains(&beta_max) || beta_min >= beta_max
    {
        return Err(BifurcationError::InvalidSweep(format!(
            "need 0 <= beta_min < beta_max <= 1, got [{beta_min}, {beta_max}]"
        )));
    }
    if steps < 2 {
        return Err(BifurcationError::InvalidSweep(format!(
            "need at least 2 grid values, got {steps}"
        )));
    }
    if cfg_base.gamma == 0.0 {
        return Err(FsoeError::DivisionByZero.into());
    }
    let beta_grid: Vec<f64> = (0..steps)
        .map(|k| {
            if k + 1 == steps {
                beta_max
            } else {
                beta_min + (beta_max - beta_min) * k as f64 / (steps - 1) as f64
            }
        })
        .collect();

    let work = |&beta: &f64| -> Column {
        let cfg = cfg_base.with_beta(beta);
        let equilibria =
            equilibria_with(&cfg, opts.grid_n, opts.root_tol).map_err(|e| e.to_string());
        let cycle = match &opts.cycles {
            Some(co) => limit_cycle_amplitude(&cfg, beta, co).map_err(|e| e.to_string()),
            None => Ok(None),
        };
        Column {
            beta,
            equilibria,
            cycle,
        }
    };
    let columns: Vec<Column> = run_parallel(opts.jobs, &beta_grid, work);

    let mut gaps = Vec::new();
    let mut cycle_amplitudes = Vec::with_capacity(steps);
    let mut branches: Vec<Branch> = Vec::new();
    let mut active: Vec<(usize, f64)> = Vec::new();
    for col in &columns {
        match &col.cycle {
            Ok(c) => cycle_amplitudes.push(*c),
            Err(msg) => {
                cycle_amplitudes.push(None);
                gaps.push((col.beta, format!("cycle: {msg}")));
            }
        }
        let eqs = match &col.equilibria {
            Ok(eqs) => eqs,
            Err(msg) => {
                gaps.push((col.beta, msg.clone()));
                active.clear();
                continue;
            }
        };
        active = link_branches(&mut branches, &active, col.beta, eqs, opts.branch_link);
    }

    let mut points = Vec::new();
    detect_numeric(cfg_base, &beta_grid, &columns, opts, &mut points);
    attach_closed_form(cfg_base, beta_min, beta_max, &mut points);
    points.sort_by(|a, b| {
        a.beta
            .total_cmp(&b.beta)
            .then((a.detection as u8).cmp(&(b.detection as u8)))
    });

    Ok(BifurcationDiagram {
        beta_grid,
        branches,
        bifurcation_points: points,
        cycle_amplitudes,
        gaps,
    })
}

fn run_parallel<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build();
    match pool {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Greedy nearest-neighbour linking of this column's equilibria to the active branches.
fn link_branches(
    branches: &mut Vec<Branch>,
    active: &[(usize, f64)],
    beta: f64,
    eqs: &[Equilibrium],
    max_jump: f64,
) -> Vec<(usize, f64)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ai, &(_, p_prev)) in active.iter().enumerate() {
        for (ei, eq) in eqs.iter().enumerate() {
            let d = (eq.p_star - p_prev).abs();
            if d <= max_jump {
                pairs.push((d, ai, ei));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_active = vec![false; active.len()];
    let mut assigned: Vec<Option<usize>> = vec![None; eqs.len()];
    for (_, ai, ei) in pairs {
        if !used_active[ai] && assigned[ei].is_none() {
            used_active[ai] = true;
            assigned[ei] = Some(active[ai].0);
        }
    }
    let mut next_active = Vec::with_capacity(eqs.len());
    for (ei, eq) in eqs.iter().enumerate() {
        let id = assigned[ei].unwrap_or_else(|| {
            let id = branches.len();
            branches.push(Branch {
                id,
                points: Vec::new(),
            });
            id
        });
        branches[id].points.push(BranchPoint {
            beta,
            equilibrium: *eq,
        });
        next_active.push((id, eq.p_star));
    }
    next_active
}

fn detect_numeric(
    cfg: &ModelConfig,
    grid: &[f64],
    columns: &[Column],
    opts: &SweepOptions,
    points: &mut Vec<BifurcationPoint>,
) {
    let origin_ok = origin_is_equilibrium(cfg);
    let count_at = |beta: f64| {
        find_fixed_points(&cfg.with_beta(beta), opts.grid_n, opts.root_tol)
            .map(|r| r.len())
            .unwrap_or(0)
    };
    for k in 0..grid.len() - 1 {
        let (b0, b1) = (grid[k], grid[k + 1]);
        let mut pitchfork_here = false;
        if origin_ok {
            let (det0, tr0) = origin_test_values(cfg, b0);
            let (det1, tr1) = origin_test_values(cfg, b1);
            if (det0 < 0.0) != (det1 < 0.0) {
                let beta = bisect_beta(b0, b1, opts.refine_tol, |b| {
                    (origin_test_values(cfg, b).0 < 0.0) == (det0 < 0.0)
                });
                let (c, _) = pitchfork_cubic_terms(cfg, beta, cfg.gamma);
                points.push(BifurcationPoint {
                    beta,
                    kind: BifurcationKind::Pitchfork,
                    detection: Detection::Numeric,
                    omega0: None,
                    coefficient: Some(c),
                });
                pitchfork_here = true;
            }
            if (tr0 < 0.0) != (tr1 < 0.0) {
                let beta = bisect_beta(b0, b1, opts.refine_tol, |b| {
                    (origin_test_values(cfg, b).1 < 0.0) == (tr0 < 0.0)
                });
                let (det, _) = origin_test_values(cfg, beta);
                if det > 0.0 {
                    let a = jacobian_fsoe(&cfg.with_beta(beta), FsoeState::origin()).a11;
                    let omega0 = det.sqrt();
                    let h21 = hopf_h21(cfg, beta, omega0, a);
                    points.push(BifurcationPoint {
                        beta,
                        kind: BifurcationKind::Hopf,
                        detection: Detection::Numeric,
                        omega0: Some(omega0),
                        coefficient: Some(h21.re),
                    });
                }
            }
        }
        let (Ok(e0), Ok(e1)) = (&columns[k].equilibria, &columns[k + 1].equilibria) else {
            continue;
        };
        if e0.len() == e1.len() || pitchfork_here {
            continue;
        }
        let left = e0.len();
        let beta = bisect_beta(b0, b1, opts.refine_tol, |b| count_at(b) == left);
        let change = left.abs_diff(e1.len());
        // symmetric configurations lose or gain equilibria in mirrored pairs
        let folds = (change / 2).max(1);
        for _ in 0..folds {
            points.push(BifurcationPoint {
                beta,
                kind: BifurcationKind::Fold,
                detection: Detection::Numeric,
                omega0: None,
                coefficient: None,
            });
        }
    }
}

fn attach_closed_form(
    cfg: &ModelConfig,
    beta_min: f64,
    beta_max: f64,
    points: &mut Vec<BifurcationPoint>,
) {
    if require_odd(cfg).is_err() {
        return;
    }
    let in_range = |b: f64| b >= beta_min && b <= beta_max;
    if let Ok(beta) = beta_for_zero_eigenvalue(cfg, 0.0, 0.0) {
        if in_range(beta) {
            let coefficient = pitchfork_coefficient(cfg, beta, cfg.gamma)
                .map(|info| info.coefficient_c)
                .ok()
                .or_else(|| Some(pitchfork_cubic_terms(cfg, beta, cfg.gamma).0));
            points.push(BifurcationPoint {
                beta,
                kind: BifurcationKind::Pitchfork,
                detection: Detection::ClosedForm,
                omega0: None,
                coefficient,
            });
        }
    }
    if let Ok(locus) = hopf_locus(cfg, 0.0, 0.0) {
        if in_range(locus.beta_star) {
            let coefficient = hopf_coefficient(cfg, locus.beta_star, cfg.gamma)
                .map(|info| info.h21.re)
                .ok();
            points.push(BifurcationPoint {
                beta: locus.beta_star,
                kind: BifurcationKind::Hopf,
                detection: Detection::ClosedForm,
                omega0: Some(locus.omega0),
                coefficient,
            });
        }
    }
}
