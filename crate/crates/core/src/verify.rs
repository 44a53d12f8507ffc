//! Cross-checks between closed-form predictions and numerical evidence.

use crate::bifurcation::{
    beta_for_zero_eigenvalue, eigenvalue_crossing_slope, hopf_coefficient, hopf_locus,
    limit_cycle_amplitude, pitchfork_coefficient, sweep_beta, BifurcationKind, CycleOptions,
    Detection, SweepOptions,
};
use crate::fsoe::{eigenvalues_2x2, jacobian_fsoe, FsoeState};
use crate::graph::Graph;
use crate::model::{check_odd_symmetry, ModelConfig, SmoothFunction};
use crate::network::{check_forward_invariance, check_odd_dynamics, NetworkState};

/// Steps for the first, second and third finite-difference derivatives.
pub const FD_STEPS: [f64; 3] = [1e-4, 1e-3, 1e-2];
pub const FD_TOL: f64 = 1e-5;
pub const AGREEMENT_TOL: f64 = 1e-6;
pub const OMEGA_TOL: f64 = 1e-8;
pub const INVARIANCE_TOL: f64 = 1e-9;
pub const ODD_DYNAMICS_TOL: f64 = 1e-12;

fn central(f: &SmoothFunction, x: f64, h: f64, order: usize) -> f64 {
    let v = |k: f64| f.eval(x + k * h);
    match order {
        1 => (v(1.0) - v(-1.0)) / (2.0 * h),
        2 => (v(1.0) - 2.0 * v(0.0) + v(-1.0)) / (h * h),
        3 => (v(2.0) - 2.0 * v(1.0) + 2.0 * v(-1.0) - v(-2.0)) / (2.0 * h * h * h),
        _ => unreachable!("orders 1 to 3"),
    }
}

/// Central difference of order 1..=3 with one Richardson step, `O(h^4)`.
pub fn fd_derivative(f: &SmoothFunction, x: f64, order: usize, h: f64) -> f64 {
    (4.0 * central(f, x, 0.5 * h, order) - central(f, x, h, order)) / 3.0
}

/// Worst finite-difference mismatch of derivatives 1..3 on a uniform grid over `[-2, 2]`.
///
/// Each order's error is scaled by `max(1, sup |f^(k)|)` on the grid, which
/// keeps the measure meaningful where a derivative crosses zero.
pub fn derivative_fd_error(f: &SmoothFunction, grid: usize) -> [f64; 3] {
    let xs: Vec<f64> = (0..grid)
        .map(|i| -2.0 + 4.0 * i as f64 / (grid - 1) as f64)
        .collect();
    let mut out = [0.0; 3];
    for order in 1..=3 {
        let exact: Vec<f64> = xs
            .iter()
            .map(|&x| f.eval_with_derivatives(x).as_array()[order])
            .collect();
        let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        out[order - 1] = xs
            .iter()
            .zip(&exact)
            .map(|(&x, e)| (fd_derivative(f, x, order, FD_STEPS[order - 1]) - e).abs() / scale)
            .fold(0.0, f64::max);
    }
    out
}

/// The cubic pitchfork coefficient assembled from finite-difference third
/// derivatives at the origin instead of the analytic ones.
pub fn pitchfork_c_finite_difference(cfg: &ModelConfig, beta: f64, gamma: f64) -> f64 {
    let d1 = |f: &SmoothFunction| fd_derivative(f, 0.0, 1, FD_STEPS[0]);
    let d3 = |f: &SmoothFunction| fd_derivative(f, 0.0, 3, FD_STEPS[2]);
    let (du, dr) = (d1(&cfg.u), d1(&cfg.r));
    (1.0 - beta) * d3(&cfg.s)
        + beta * d3(&cfg.r) * (du / gamma).powi(3)
        + beta * dr / gamma * d3(&cfg.u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "N/A",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn status_of(&self, name: &str) -> Option<CheckStatus> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.status)
    }

    fn push(&mut self, name: &'static str, ok: bool, detail: String) {
        let status = if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.checks.push(CheckResult {
            name,
            status,
            detail,
        });
    }

    fn skip(&mut self, name: &'static str, detail: String) {
        self.checks.push(CheckResult {
            name,
            status: CheckStatus::NotApplicable,
            detail,
        });
    }

    /// Fixed-width table, one check per line, notes at the end.
    pub fn render(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:<4}  {:<width$}  {}\n",
                c.status.as_str(),
                c.name,
                c.detail
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

fn fixed_network_states(n: usize, count: usize) -> Vec<NetworkState> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    (0..count)
        .map(|_| NetworkState {
            x: (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            e: rng.random_range(-3.0..=3.0),
        })
        .collect()
}

/// Runs every check for the configuration. The configuration's `beta` is used
/// only by the forward-invariance check; everything else scans or solves for `beta`.
pub fn run_verification(cfg: &ModelConfig) -> VerifyReport {
    let mut report = VerifyReport::default();

    for (name, f) in [
        ("derivatives of s", &cfg.s),
        ("derivatives of r", &cfg.r),
        ("derivatives of u", &cfg.u),
    ] {
        let err = derivative_fd_error(f, 1001);
        let worst = err.iter().cloned().fold(0.0, f64::max);
        report.push(
            name,
            worst <= FD_TOL,
            format!("scaled errors {:.1e} {:.1e} {:.1e}", err[0], err[1], err[2]),
        );
    }

    let violations = check_odd_symmetry(cfg, 1001);
    let odd = violations.is_empty();
    report.push(
        "odd symmetry of s, r, u",
        odd,
        match violations.first() {
            None => "all residuals within tolerance".into(),
            Some(v) => format!(
                "{} violations, first: {} at x = {} (residual {:.3e})",
                violations.len(),
                v.function,
                v.x,
                v.residual
            ),
        },
    );

    let tri = Graph::triangle();
    let odd_res = fixed_network_states(3, 100)
        .iter()
        .map(|st| check_odd_dynamics(cfg, &tri, st).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    report.push(
        "odd network dynamics",
        odd_res <= ODD_DYNAMICS_TOL,
        format!("max |F(-y) + F(y)| = {odd_res:.3e}"),
    );

    match check_forward_invariance(cfg, &tri, 0.5, 0.3, 100.0) {
        Ok(err) => report.push(
            "forward invariance of consensus",
            err <= INVARIANCE_TOL,
            format!("max sync error {err:.3e} over T = 100"),
        ),
        Err(e) => report.push("forward invariance of consensus", false, e.to_string()),
    }

    if !odd {
        for name in [
            "pitchfork closed form vs numeric",
            "pitchfork nondegeneracy",
            "Hopf closed form vs numeric",
            "omega0 agreement",
            "Hopf coefficient",
            "cycle side",
            "eigenvalue crossing",
        ] {
            report.skip(name, "requires odd s, r, u".into());
        }
        return report;
    }

    let diagram = sweep_beta(cfg, 0.0, 1.0, 500, &SweepOptions::default());
    let numeric = |kind: BifurcationKind| -> Vec<f64> {
        diagram
            .as_ref()
            .map(|d| {
                d.points_of(kind, Detection::Numeric)
                    .iter()
                    .map(|p| p.beta)
                    .collect()
            })
            .unwrap_or_default()
    };

    match beta_for_zero_eigenvalue(cfg, 0.0, 0.0) {
        Ok(beta_pf) => {
            let nearest = numeric(BifurcationKind::Pitchfork)
                .into_iter()
                .min_by(|a, b| (a - beta_pf).abs().total_cmp(&(b - beta_pf).abs()));
            match nearest {
                Some(b) => report.push(
                    "pitchfork closed form vs numeric",
                    (b - beta_pf).abs() <= AGREEMENT_TOL,
                    format!("closed form {beta_pf:.10}, numeric {b:.10}"),
                ),
                None => report.push(
                    "pitchfork closed form vs numeric",
                    false,
                    format!("closed form {beta_pf:.10}, no determinant sign change found"),
                ),
            }
            match pitchfork_coefficient(cfg, beta_pf, cfg.gamma) {
                Ok(info) => report.push(
                    "pitchfork nondegeneracy",
                    !info.degenerate,
                    format!(
                        "c = {:.6}, weighted c = {:.6}",
                        info.coefficient_c, info.coefficient_c_tau
                    ),
                ),
                Err(e) => report.push("pitchfork nondegeneracy", false, e.to_string()),
            }
        }
        Err(reason) => {
            report.skip("pitchfork closed form vs numeric", reason.to_string());
            report.skip("pitchfork nondegeneracy", reason.to_string());
        }
    }

    match hopf_locus(cfg, 0.0, 0.0) {
        Ok(locus) => {
            let beta_h = locus.beta_star;
            let nearest = numeric(BifurcationKind::Hopf)
                .into_iter()
                .min_by(|a, b| (a - beta_h).abs().total_cmp(&(b - beta_h).abs()));
            match nearest {
                Some(b) => {
                    report.push(
                        "Hopf closed form vs numeric",
                        (b - beta_h).abs() <= AGREEMENT_TOL,
                        format!("closed form {beta_h:.10}, numeric {b:.10}"),
                    );
                    let j = jacobian_fsoe(&cfg.with_beta(b), FsoeState::origin());
                    let im = eigenvalues_2x2(&j)[0].im.abs();
                    report.push(
                        "omega0 agreement",
                        (im - locus.omega0).abs() <= OMEGA_TOL,
                        format!("|Im lambda| = {im:.10}, omega0 = {:.10}", locus.omega0),
                    );
                }
                None => {
                    report.push(
                        "Hopf closed form vs numeric",
                        false,
                        format!("closed form {beta_h:.10}, no trace sign change found"),
                    );
                    report.push("omega0 agreement", false, "no numeric Hopf point".into());
                }
            }
            match hopf_coefficient(cfg, beta_h, cfg.gamma) {
                Ok(info) => {
                    let nonzero = info.h21.re.abs() > crate::bifurcation::HOPF_DEGENERACY_TOL;
                    report.push(
                        "Hopf coefficient",
                        nonzero,
                        format!("h21 = {:.6} {:+.6}i", info.h21.re, info.h21.im),
                    );
                    let opts = CycleOptions::default();
                    let below = limit_cycle_amplitude(cfg, beta_h - 0.01, &opts);
                    let above = limit_cycle_amplitude(cfg, beta_h + 0.01, &opts);
                    match (below, above) {
                        (Ok(b), Ok(a)) => report.push(
                            "cycle side",
                            b.is_some() && a.is_none(),
                            format!(
                                "cycle below: {}, cycle above: {}",
                                b.map_or("none".into(), |c| format!(
                                    "amplitude {:.4}",
                                    c.amplitude()
                                )),
                                a.map_or("none".into(), |c| format!(
                                    "amplitude {:.4}",
                                    c.amplitude()
                                )),
                            ),
                        ),
                        (Err(e), _) | (_, Err(e)) => {
                            report.push("cycle side", false, e.to_string())
                        }
                    }
                }
                Err(e) => {
                    report.push("Hopf coefficient", false, e.to_string());
                    report.skip("cycle side", "no Hopf coefficient".into());
                }
            }
            let slope = eigenvalue_crossing_slope(cfg, beta_h, 1e-6);
            report.push(
                "eigenvalue crossing",
                slope.abs() > 1e-8,
                format!("d Re(lambda)/d beta = {slope:.6}"),
            );
        }
        Err(reason) => {
            for name in [
                "Hopf closed form vs numeric",
                "omega0 agreement",
                "Hopf coefficient",
                "cycle side",
                "eigenvalue crossing",
            ] {
                report.skip(name, reason.to_string());
            }
        }
    }

    if let Ok(d) = &diagram {
        let folds = d.points_of(BifurcationKind::Fold, Detection::Numeric);
        if let (Some(pf), Some(fold)) = (
            d.points_of(BifurcationKind::Pitchfork, Detection::ClosedForm)
                .first(),
            folds.first(),
        ) {
            report.notes.push(format!(
                "the origin's zero eigenvalue sits at beta = {:.6}; the drop to a single \
                 equilibrium near beta = {:.6} is a symmetric fold pair of the outer branches, \
                 not a pitchfork of the origin",
                pf.beta, fold.beta
            ));
        }
        for (beta, why) in &d.gaps {
            report
                .notes
                .push(format!("sweep gap at beta = {beta}: {why}"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_oracle_on_tanh() {
        for k in [-3.0, 0.5, 1.0, 3.0] {
            let err = derivative_fd_error(&SmoothFunction::tanh(k), 1001);
            assert!(err.iter().all(|&e| e <= FD_TOL), "k = {k}: {err:?}");
        }
        let err = derivative_fd_error(&SmoothFunction::affine(1.0, 0.1), 101);
        assert!(err.iter().all(|&e| e <= 1e-8), "{err:?}");
    }

    #[test]
    fn fd_pitchfork_coefficient() {
        let c = pitchfork_c_finite_difference(&ModelConfig::canonical(0.5), 1.0 / 9.0, 0.2);
        assert!((c - 702.0).abs() <= 702.0 * 1e-4, "{c}");
    }

    #[test]
    fn weak_signal_is_not_applicable() {
        let mut cfg = ModelConfig::canonical(0.5);
        cfg.s = SmoothFunction::tanh(0.5);
        let r = run_verification(&cfg);
        assert!(r.all_passed(), "{}", r.render());
        assert_eq!(
            r.status_of("pitchfork closed form vs numeric"),
            Some(CheckStatus::NotApplicable)
        );
        assert!(r.render().contains("amplifier condition violated"));
    }

    #[test]
    fn unshifted_control_fails() {
        let mut cfg = ModelConfig::canonical(0.5);
        cfg.u = SmoothFunction::affine(1.0, 0.0);
        let r = run_verification(&cfg);
        assert!(!r.all_passed());
        assert_eq!(
            r.status_of("odd symmetry of s, r, u"),
            Some(CheckStatus::Fail)
        );
        assert_eq!(r.status_of("odd network dynamics"), Some(CheckStatus::Fail));
    }
}
