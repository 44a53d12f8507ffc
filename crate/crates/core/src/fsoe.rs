//! The synchronized planar system in `(p, e)`: right-hand side, equilibria
//! as fixed points of the instrumental map `g`, Jacobian and linear stability.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelConfig;
use crate::ode::{integrate, SolverError, SolverOptions, Trajectory};

pub const DEFAULT_GRID: usize = 2001;
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
/// Roots closer than this are reported once.
pub const ROOT_DEDUP_DIST: f64 = 1e-8;
/// Grid values of `|g(x) - x|` below this without a sign change are probed for tangential roots.
pub const TANGENCY_PROBE: f64 = 1e-6;
/// Trace or determinant magnitudes at or below this count as zero.
pub const STABILITY_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FsoeError {
    #[error("division by zero: gamma = 0 leaves the equilibrium environment level undefined")]
    DivisionByZero,
    #[error("grid must have at least 101 points, got {0}")]
    GridTooSmall(usize),
    #[error("fixed-point argument {0} outside [-1, 1]")]
    OutOfDomain(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoeState {
    pub p: f64,
    pub e: f64,
}

impl FsoeState {
    pub fn new(p: f64, e: f64) -> Self {
        FsoeState { p, e }
    }

    pub fn origin() -> Self {
        FsoeState { p: 0.0, e: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub trace: f64,
    pub det: f64,
    /// `trace^2 - 4 det`
    pub discriminant: f64,
}

impl Jacobian2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        let trace = a11 + a22;
        let det = a11 * a22 - a12 * a21;
        Jacobian2 {
            a11,
            a12,
            a21,
            a22,
            trace,
            det,
            discriminant: trace * trace - 4.0 * det,
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    Saddle,
    Center,
    Degenerate,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::StableNode => "StableNode",
            Stability::StableFocus => "StableFocus",
            Stability::UnstableNode => "UnstableNode",
            Stability::UnstableFocus => "UnstableFocus",
            Stability::Saddle => "Saddle",
            Stability::Center => "Center",
            Stability::Degenerate => "Degenerate",
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableFocus)
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub p_star: f64,
    pub e_star: f64,
    pub jac: Jacobian2,
    pub stability: Stability,
}

pub fn rhs_fsoe(cfg: &ModelConfig, st: FsoeState) -> (f64, f64) {
    let dp =
        (-st.p + cfg.beta * cfg.r.eval(st.e) + (1.0 - cfg.beta) * cfg.s.eval(st.p)) / cfg.tau_x;
    let de = (-cfg.gamma * st.e + cfg.u.eval(st.p) - cfg.gamma * cfg.ebar) / cfg.tau_e;
    (dp, de)
}

/// Environment level at which the environment equation is at rest for opinion `p`.
pub fn environment_at_rest(cfg: &ModelConfig, p: f64) -> Result<f64, FsoeError> {
    if cfg.gamma == 0.0 {
        return Err(FsoeError::DivisionByZero);
    }
    Ok(cfg.u.eval(p) / cfg.gamma - cfg.ebar)
}

/// `g(x) = beta r(u(x)/gamma - ebar) + (1 - beta) s(x)`
pub fn instrumental_g(cfg: &ModelConfig, x: f64) -> Result<f64, FsoeError> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(FsoeError::OutOfDomain(x));
    }
    let e = environment_at_rest(cfg, x)?;
    Ok(cfg.beta * cfg.r.eval(e) + (1.0 - cfg.beta) * cfg.s.eval(x))
}

fn residual(cfg: &ModelConfig, x: f64) -> f64 {
    let e = cfg.u.eval(x) / cfg.gamma - cfg.ebar;
    cfg.beta * cfg.r.eval(e) + (1.0 - cfg.beta) * cfg.s.eval(x) - x
}

fn bisect(cfg: &ModelConfig, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut h_lo = residual(cfg, lo);
    loop {
        let mid = 0.5 * (lo + hi);
        let h_mid = residual(cfg, mid);
        if h_mid.abs() <= tol || hi - lo <= 1e-15 || mid <= lo || mid >= hi {
            return mid;
        }
        if (h_mid < 0.0) == (h_lo < 0.0) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
}

/// Golden-section minimization of `sign * h` on `[a, b]`.
fn minimize_signed(cfg: &ModelConfig, sign: f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let f = |x: f64| sign * residual(cfg, x);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        if fc.min(fd) < 0.0 {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Fixed points of `g` on `[-1, 1]`, sorted and deduplicated.
pub fn find_fixed_points(
    cfg: &ModelConfig,
    grid_n: usize,
    tol: f64,
) -> Result<Vec<f64>, FsoeError> {
    if cfg.gamma == 0.0 {
        return Err(FsoeError::DivisionByZero);
    }
    if grid_n < 101 {
        return Err(FsoeError::GridTooSmall(grid_n));
    }
    let xs: Vec<f64> = (0..grid_n)
        .map(|k| -1.0 + 2.0 * k as f64 / (grid_n - 1) as f64)
        .collect();
    let hs: Vec<f64> = xs.iter().map(|&x| residual(cfg, x)).collect();
    let mut roots = Vec::new();
    for k in 0..grid_n {
        if hs[k] == 0.0 {
            roots.push(xs[k]);
        }
        if k + 1 < grid_n && hs[k] != 0.0 && hs[k + 1] != 0.0 && (hs[k] < 0.0) != (hs[k + 1] < 0.0)
        {
            roots.push(bisect(cfg, xs[k], xs[k + 1], tol));
        }
    }
    for k in 1..grid_n - 1 {
        let (l, m, r) = (hs[k - 1], hs[k], hs[k + 1]);
        let same_sign = (l > 0.0 && m > 0.0 && r > 0.0) || (l < 0.0 && m < 0.0 && r < 0.0);
        if !same_sign || m.abs() >= TANGENCY_PROBE || m.abs() > l.abs() || m.abs() > r.abs() {
            continue;
        }
        let sign = m.signum();
        let (x_min, v_min) = minimize_signed(cfg, sign, xs[k - 1], xs[k + 1]);
        if v_min < 0.0 {
            roots.push(bisect(cfg, xs[k - 1], x_min, tol));
            roots.push(bisect(cfg, x_min, xs[k + 1], tol));
        } else if v_min <= tol {
            roots.push(x_min);
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for x in roots {
        match out.last() {
            Some(&prev) if x - prev <= ROOT_DEDUP_DIST => {}
            _ => out.push(x),
        }
    }
    Ok(out)
}

pub fn jacobian_fsoe(cfg: &ModelConfig, st: FsoeState) -> Jacobian2 {
    let ds = cfg.s.derivative(st.p);
    let dr = cfg.r.derivative(st.e);
    let du = cfg.u.derivative(st.p);
    Jacobian2::new(
        ((1.0 - cfg.beta) * ds - 1.0) / cfg.tau_x,
        cfg.beta * dr / cfg.tau_x,
        du / cfg.tau_e,
        -cfg.gamma / cfg.tau_e,
    )
}

/// Roots of `X^2 - trace X + det`, ordered by descending real part, then
/// descending imaginary part.
pub fn eigenvalues_2x2(j: &Jacobian2) -> [Complex64; 2] {
    let (tr, det, disc) = (j.trace, j.det, j.discriminant);
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let big = 0.5 * (tr + if tr >= 0.0 { sq } else { -sq });
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (a, b) = if big >= small {
            (big, small)
        } else {
            (small, big)
        };
        [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        let re = 0.5 * tr;
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

pub fn classify_stability(j: &Jacobian2) -> Stability {
    let (tr, det) = (j.trace, j.det);
    if det.abs() <= STABILITY_ZERO {
        return Stability::Degenerate;
    }
    if det < 0.0 {
        return Stability::Saddle;
    }
    if tr.abs() <= STABILITY_ZERO {
        return Stability::Center;
    }
    let focus = j.discriminant < 0.0;
    match (tr < 0.0, focus) {
        (true, false) => Stability::StableNode,
        (true, true) => Stability::StableFocus,
        (false, false) => Stability::UnstableNode,
        (false, true) => Stability::UnstableFocus,
    }
}

pub fn equilibria_with(
    cfg: &ModelConfig,
    grid_n: usize,
    tol: f64,
) -> Result<Vec<Equilibrium>, FsoeError> {
    find_fixed_points(cfg, grid_n, tol)?
        .into_iter()
        .map(|p| {
            let e = environment_at_rest(cfg, p)?;
            let jac = jacobian_fsoe(cfg, FsoeState::new(p, e));
            Ok(Equilibrium {
                p_star: p,
                e_star: e,
                jac,
                stability: classify_stability(&jac),
            })
        })
        .collect()
}

pub fn equilibria(cfg: &ModelConfig) -> Result<Vec<Equilibrium>, FsoeError> {
    equilibria_with(cfg, DEFAULT_GRID, DEFAULT_ROOT_TOL)
}

/// Integrates the planar system; state layout is `[p, e]`.
pub fn simulate_fsoe(
    cfg: &ModelConfig,
    st0: FsoeState,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<Trajectory, SolverError> {
    let cfg = *cfg;
    integrate(
        move |y: &[f64], dy: &mut [f64]| {
            let (dp, de) = rhs_fsoe(&cfg, FsoeState::new(y[0], y[1]));
            dy[0] = dp;
            dy[1] = de;
        },
        &[st0.p, st0.e],
        0.0,
        t_end,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SmoothFunction;

    #[test]
    fn rhs_examples() {
        let cfg = ModelConfig::canonical(0.6);
        assert_eq!(rhs_fsoe(&cfg, FsoeState::origin()), (0.0, 0.0));
        let (dp, de) = rhs_fsoe(&cfg, FsoeState::new(0.0, 1.0));
        assert!((dp - 0.6 * (-(3f64).tanh())).abs() < 1e-15);
        assert!((dp + 0.5970329).abs() < 1e-6);
        assert!((de + 0.2).abs() < 1e-15);

        let cfg = ModelConfig::canonical(0.0);
        for (p, e) in [(0.3, -4.0), (0.3, 7.0)] {
            let (dp, _) = rhs_fsoe(&cfg, FsoeState::new(p, e));
            assert_eq!(dp, -p + (3.0 * p).tanh());
        }
    }

    #[test]
    fn g_examples() {
        assert_eq!(
            instrumental_g(&ModelConfig::canonical(0.4), 0.0).unwrap(),
            0.0
        );
        let g = instrumental_g(&ModelConfig::canonical(0.24), 0.3).unwrap();
        let expected = -0.24 * 4.5f64.tanh() + 0.76 * 0.9f64.tanh();
        assert!((g - expected).abs() < 1e-14);
        assert!((g - 0.3044).abs() < 1e-4);
        let cfg = ModelConfig::canonical(0.0);
        for x in [-0.7, 0.1, 0.9] {
            assert_eq!(instrumental_g(&cfg, x).unwrap(), cfg.s.eval(x));
        }
        let cfg = ModelConfig::canonical_with_gamma(0.3, 0.0);
        assert_eq!(instrumental_g(&cfg, 0.1), Err(FsoeError::DivisionByZero));
        assert_eq!(
            find_fixed_points(&cfg, 2001, 1e-12),
            Err(FsoeError::DivisionByZero)
        );
    }

    #[test]
    fn five_then_one_fixed_points() {
        let roots = find_fixed_points(&ModelConfig::canonical(0.24), 2001, 1e-12).unwrap();
        assert_eq!(roots.len(), 5);
        assert_eq!(roots[2], 0.0);
        let (pa, pb) = (roots[3], roots[4]);
        assert!(0.1 < pa && pa < 0.3 && 0.3 < pb && pb < 0.5, "{roots:?}");
        for k in 0..5 {
            assert!((roots[k] + roots[4 - k]).abs() < 1e-9);
        }
        let roots = find_fixed_points(&ModelConfig::canonical(0.25), 2001, 1e-12).unwrap();
        assert_eq!(roots, vec![0.0]);
    }

    #[test]
    fn contracting_signal_only_origin() {
        let mut cfg = ModelConfig::canonical(0.0);
        cfg.s = SmoothFunction::tanh(1.0);
        assert_eq!(find_fixed_points(&cfg, 2001, 1e-12).unwrap(), vec![0.0]);
        assert_eq!(
            find_fixed_points(&cfg, 100, 1e-12),
            Err(FsoeError::GridTooSmall(100))
        );
    }

    #[test]
    fn tangential_root_pair_inside_one_cell() {
        // beta just below the fold: the two roots on each side are closer than
        // one coarse grid cell, so only the tangency probe can find them.
        let lo = 0.243266;
        let dense = find_fixed_points(&ModelConfig::canonical(lo), 200_001, 1e-13).unwrap();
        assert_eq!(dense.len(), 5, "{dense:?}");
        let coarse = find_fixed_points(&ModelConfig::canonical(lo), 2001, 1e-13).unwrap();
        assert_eq!(coarse.len(), 5, "{coarse:?}");
    }

    #[test]
    fn stable_and_unstable_foci() {
        let eq = equilibria(&ModelConfig::canonical(0.7)).unwrap();
        assert_eq!(eq.len(), 1);
        assert_eq!((eq[0].p_star, eq[0].e_star), (0.0, 0.0));
        assert_eq!(eq[0].stability, Stability::StableFocus);
        assert!((eq[0].jac.trace - (1.8 - 2.1)).abs() < 1e-14);
        assert!((eq[0].jac.det - (3.6 * 0.7 - 0.4)).abs() < 1e-14);

        let eq = equilibria(&ModelConfig::canonical(0.4)).unwrap();
        assert_eq!(eq.len(), 1);
        assert_eq!(eq[0].stability, Stability::UnstableFocus);
        assert!((eq[0].jac.trace - 0.6).abs() < 1e-14);
        assert!((eq[0].jac.det - 1.04).abs() < 1e-14);
    }

    #[test]
    fn origin_is_always_an_equilibrium() {
        for k in 0..=20 {
            let eq = equilibria(&ModelConfig::canonical(k as f64 / 20.0)).unwrap();
            assert!(eq.iter().any(|q| q.p_star == 0.0 && q.e_star == 0.0));
        }
    }

    #[test]
    fn jacobian_examples() {
        let j = jacobian_fsoe(&ModelConfig::canonical(0.6), FsoeState::origin());
        let close = |a: f64, b: f64| (a - b).abs() < 1e-14;
        assert!(close(j.a11, 0.2) && close(j.a12, -1.8) && close(j.a21, 1.0) && close(j.a22, -0.2));
        assert!(close(j.trace, 0.0) && close(j.det, 1.76));

        let j = jacobian_fsoe(&ModelConfig::canonical(0.0), FsoeState::origin());
        assert_eq!((j.a11, j.a12), (2.0, 0.0));
        let ev = eigenvalues_2x2(&j);
        assert_eq!(ev[0], Complex64::new(2.0, 0.0));
        assert!((ev[1].re + 0.2).abs() < 1e-15);
    }

    #[test]
    fn determinant_identity() {
        let mut cfg = ModelConfig::canonical(0.37);
        cfg.tau_x = 1.7;
        cfg.tau_e = 0.6;
        for &(p, e) in &[(0.0, 0.0), (0.2, -0.4), (-0.9, 1.3)] {
            let j = jacobian_fsoe(&cfg, FsoeState::new(p, e));
            let (ds, dr, du) = (
                cfg.s.derivative(p),
                cfg.r.derivative(e),
                cfg.u.derivative(p),
            );
            let b = cfg.beta;
            let det = -(cfg.gamma * ((1.0 - b) * ds - 1.0) + du * dr * b) / (cfg.tau_x * cfg.tau_e);
            assert!((j.det - det).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let ev = eigenvalues_2x2(&Jacobian2::new(0.2, -1.8, 1.0, -0.2));
        assert!(ev[0].re.abs() < 1e-15 && (ev[0].im - 1.76f64.sqrt()).abs() < 1e-14);
        assert!((ev[0].im - 1.32665).abs() < 1e-5);
        assert_eq!(ev[1], ev[0].conj());

        let ev = eigenvalues_2x2(&Jacobian2::new(0.0, -1.0, 1.0, 0.0));
        assert_eq!(ev, [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)]);

        let ev = eigenvalues_2x2(&Jacobian2::new(2.0, 0.0, 0.0, -0.2));
        assert_eq!(ev, [Complex64::new(2.0, 0.0), Complex64::new(-0.2, 0.0)]);
    }

    fn from_trace_det(trace: f64, det: f64) -> Jacobian2 {
        // companion form
        Jacobian2::new(0.0, -det, 1.0, trace)
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_stability(&from_trace_det(-1.0, 0.5)),
            Stability::StableFocus
        );
        assert_eq!(
            classify_stability(&from_trace_det(0.3, -2.0)),
            Stability::Saddle
        );
        assert_eq!(
            classify_stability(&from_trace_det(0.0, 1.76)),
            Stability::Center
        );
        assert_eq!(
            classify_stability(&from_trace_det(-3.0, 1.0)),
            Stability::StableNode
        );
        assert_eq!(
            classify_stability(&from_trace_det(3.0, 1.0)),
            Stability::UnstableNode
        );
        assert_eq!(
            classify_stability(&from_trace_det(1.0, 1.0)),
            Stability::UnstableFocus
        );
        assert_eq!(
            classify_stability(&from_trace_det(1.0, 0.0)),
            Stability::Degenerate
        );
    }
}
