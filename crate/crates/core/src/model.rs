//! Smooth odd function families and the scalar model parameters.

use serde::{Deserialize, Serialize};

/// Tolerance used by [`check_odd_symmetry`].
pub const ODDNESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionKind {
    /// `x -> tanh(k x)`
    TanhGain,
    /// `x -> slope * x + offset`
    Affine,
}

/// A scalar function with closed-form derivatives up to third order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothFunction {
    pub kind: FunctionKind,
    pub gain_or_slope: f64,
    /// Only read by [`FunctionKind::Affine`].
    pub offset: f64,
}

/// Value and first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl Derivatives {
    pub fn as_array(&self) -> [f64; 4] {
        [self.f0, self.f1, self.f2, self.f3]
    }
}

impl SmoothFunction {
    pub fn tanh(gain: f64) -> Self {
        SmoothFunction {
            kind: FunctionKind::TanhGain,
            gain_or_slope: gain,
            offset: 0.0,
        }
    }

    pub fn affine(slope: f64, offset: f64) -> Self {
        SmoothFunction {
            kind: FunctionKind::Affine,
            gain_or_slope: slope,
            offset,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            FunctionKind::TanhGain => (self.gain_or_slope * x).tanh(),
            FunctionKind::Affine => self.gain_or_slope * x + self.offset,
        }
    }

    /// Analytic value and derivatives of orders 1 to 3.
    pub fn eval_with_derivatives(&self, x: f64) -> Derivatives {
        let k = self.gain_or_slope;
        match self.kind {
            FunctionKind::TanhGain => {
                let t = (k * x).tanh();
                let sech2 = 1.0 - t * t;
                Derivatives {
                    f0: t,
                    f1: k * sech2,
                    f2: -2.0 * k * k * t * sech2,
                    f3: -2.0 * k * k * k * sech2 * (1.0 - 3.0 * t * t),
                }
            }
            FunctionKind::Affine => Derivatives {
                f0: k * x + self.offset,
                f1: k,
                f2: 0.0,
                f3: 0.0,
            },
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.eval_with_derivatives(x).f1
    }

    pub fn is_finite(&self) -> bool {
        self.gain_or_slope.is_finite() && self.offset.is_finite()
    }
}

/// Parameters of the coupled opinion-environment model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Signal function: opinion to perceived behavior.
    pub s: SmoothFunction,
    /// Response to the environment deviation.
    pub r: SmoothFunction,
    /// Control: synchronized opinion to environment forcing.
    pub u: SmoothFunction,
    /// Trust given to the environmental signal.
    pub beta: f64,
    /// Natural recovery rate of the environment.
    pub gamma: f64,
    /// Environment threshold.
    pub ebar: f64,
    pub tau_x: f64,
    pub tau_e: f64,
}

impl ModelConfig {
    /// The reference configuration: `s = tanh(3x)`, `r = tanh(-3x)`,
    /// `u = x + gamma * ebar`, `gamma = 0.2`, `ebar = 0.5`, unit time constants.
    pub fn canonical(beta: f64) -> Self {
        Self::canonical_with_gamma(beta, 0.2)
    }

    pub fn canonical_with_gamma(beta: f64, gamma: f64) -> Self {
        let ebar = 0.5;
        ModelConfig {
            s: SmoothFunction::tanh(3.0),
            r: SmoothFunction::tanh(-3.0),
            u: SmoothFunction::affine(1.0, gamma * ebar),
            beta,
            gamma,
            ebar,
            tau_x: 1.0,
            tau_e: 1.0,
        }
    }

    /// Time-constant ratio `tau_e / tau_x`.
    pub fn tau(&self) -> f64 {
        self.tau_e / self.tau_x
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OddFunction {
    S,
    R,
    U,
}

impl std::fmt::Display for OddFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            OddFunction::S => "s",
            OddFunction::R => "r",
            OddFunction::U => "u",
        };
        f.write_str(name)
    }
}

/// A sample point where one of the symmetry identities fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddnessViolation {
    pub function: OddFunction,
    pub x: f64,
    pub residual: f64,
}

/// Samples `[-1, 1]` uniformly and reports every point where `s` or `r` fails to
/// be odd, or where `u(x) + u(-x) != 2 gamma ebar`.
pub fn check_odd_symmetry(cfg: &ModelConfig, sample_count: usize) -> Vec<OddnessViolation> {
    let n = sample_count.max(2);
    let shift = 2.0 * cfg.gamma * cfg.ebar;
    let mut out = Vec::new();
    for k in 0..n {
        let x = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
        let checks = [
            (OddFunction::S, cfg.s.eval(-x) + cfg.s.eval(x)),
            (OddFunction::R, cfg.r.eval(-x) + cfg.r.eval(x)),
            (OddFunction::U, cfg.u.eval(-x) + cfg.u.eval(x) - shift),
        ];
        for (function, residual) in checks {
            if residual.abs() > ODDNESS_TOL || !residual.is_finite() {
                out.push(OddnessViolation {
                    function,
                    x,
                    residual: residual.abs(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigIssue {
    BetaOutOfRange(f64),
    GammaOutOfRange(f64),
    TauXNotPositive(f64),
    TauENotPositive(f64),
    EbarNegative(f64),
    NonFinite(&'static str),
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigIssue::BetaOutOfRange(v) => write!(f, "beta out of range [0, 1]: {v}"),
            ConfigIssue::GammaOutOfRange(v) => write!(f, "gamma out of range [0, 1]: {v}"),
            ConfigIssue::TauXNotPositive(v) => write!(f, "tau_x must be positive: {v}"),
            ConfigIssue::TauENotPositive(v) => write!(f, "tau_e must be positive: {v}"),
            ConfigIssue::EbarNegative(v) => write!(f, "ebar must be non-negative: {v}"),
            ConfigIssue::NonFinite(what) => write!(f, "{what} is not finite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub errors: Vec<ConfigIssue>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Hard errors for parameter ranges; the threshold scale condition
/// `ebar in [u(-1)/gamma, u(1)/gamma]` with `0 < u(-1)` is only a warning.
pub fn validate_config(cfg: &ModelConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let scalars = [
        ("beta", cfg.beta),
        ("gamma", cfg.gamma),
        ("ebar", cfg.ebar),
        ("tau_x", cfg.tau_x),
        ("tau_e", cfg.tau_e),
    ];
    for (name, v) in scalars {
        if !v.is_finite() {
            report.errors.push(ConfigIssue::NonFinite(name));
        }
    }
    for (name, f) in [("s", &cfg.s), ("r", &cfg.r), ("u", &cfg.u)] {
        if !f.is_finite() {
            report.errors.push(ConfigIssue::NonFinite(name));
        }
    }
    if !(0.0..=1.0).contains(&cfg.beta) {
        report.errors.push(ConfigIssue::BetaOutOfRange(cfg.beta));
    }
    if !(0.0..=1.0).contains(&cfg.gamma) {
        report.errors.push(ConfigIssue::GammaOutOfRange(cfg.gamma));
    }
    if !(cfg.tau_x > 0.0) {
        report.errors.push(ConfigIssue::TauXNotPositive(cfg.tau_x));
    }
    if !(cfg.tau_e > 0.0) {
        report.errors.push(ConfigIssue::TauENotPositive(cfg.tau_e));
    }
    if cfg.ebar < 0.0 {
        report.errors.push(ConfigIssue::EbarNegative(cfg.ebar));
    }

    let u_min = cfg.u.eval(-1.0);
    let u_max = cfg.u.eval(1.0);
    let mut problems = Vec::new();
    if u_min <= 0.0 {
        problems.push(format!("u_min = u(-1) = {u_min} is not positive"));
    }
    if cfg.gamma > 0.0 {
        let (lo, hi) = (u_min / cfg.gamma, u_max / cfg.gamma);
        if cfg.ebar < lo || cfg.ebar > hi {
            problems.push(format!(
                "ebar = {} outside [u_min/gamma, u_max/gamma] = [{lo}, {hi}]",
                cfg.ebar
            ));
        }
    }
    if !problems.is_empty() {
        report.warnings.push(format!(
            "threshold scale assumption: {}",
            problems.join("; ")
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_derivatives_at_origin() {
        let d = SmoothFunction::tanh(3.0).eval_with_derivatives(0.0);
        assert_eq!(d.as_array(), [0.0, 3.0, 0.0, -54.0]);
        let d = SmoothFunction::tanh(-3.0).eval_with_derivatives(0.0);
        assert_eq!(d.as_array(), [0.0, -3.0, 0.0, 54.0]);
    }

    #[test]
    fn affine_derivatives() {
        let d = SmoothFunction::affine(1.0, 0.1).eval_with_derivatives(0.0);
        assert_eq!(d.as_array(), [0.1, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn canonical_config_is_odd() {
        assert!(check_odd_symmetry(&ModelConfig::canonical(0.3), 201).is_empty());
    }

    #[test]
    fn unshifted_control_violates_symmetry() {
        let mut cfg = ModelConfig::canonical(0.3);
        cfg.u = SmoothFunction::affine(1.0, 0.0);
        let report = check_odd_symmetry(&cfg, 11);
        assert_eq!(report.len(), 11);
        for v in report {
            assert_eq!(v.function, OddFunction::U);
            assert!((v.residual - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_signal_is_odd() {
        let mut cfg = ModelConfig::canonical(0.3);
        cfg.s = SmoothFunction::affine(1.0, 0.0);
        let report = check_odd_symmetry(&cfg, 50);
        assert!(report.iter().all(|v| v.function != OddFunction::S));
    }

    #[test]
    fn canonical_config_warns_only() {
        let report = validate_config(&ModelConfig::canonical(0.5));
        assert!(report.errors.is_empty());
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("-0.9"));
    }

    #[test]
    fn range_errors() {
        let report = validate_config(&ModelConfig::canonical(1.5));
        assert_eq!(report.errors, vec![ConfigIssue::BetaOutOfRange(1.5)]);
        assert!(report.errors[0].to_string().contains("beta out of range"));

        let mut cfg = ModelConfig::canonical(0.5);
        cfg.tau_e = 0.0;
        let report = validate_config(&cfg);
        assert_eq!(report.errors, vec![ConfigIssue::TauENotPositive(0.0)]);
        assert!(report.errors[0]
            .to_string()
            .contains("tau_e must be positive"));
    }

    #[test]
    fn tau_ratio() {
        let mut cfg = ModelConfig::canonical(0.5);
        cfg.tau_e = 3.0;
        cfg.tau_x = 2.0;
        assert_eq!(cfg.tau(), 1.5);
    }
}
