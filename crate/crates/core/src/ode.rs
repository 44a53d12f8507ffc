//! Explicit initial-value integrators: fixed-step classical RK4 and the
//! Dormand-Prince 5(4) embedded pair with step-size control.
//!
//! Both methods record every accepted step. An optional plane
//! `y[index] = threshold` can be watched; crossings in the requested direction
//! are located by bisection, re-integrating the bracketing step from its start.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxStepsExceeded(usize),
    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4Fixed { step: f64 },
    Adaptive45 { abs_tol: f64, rel_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventPlane {
    pub index: usize,
    pub threshold: f64,
    pub direction: Direction,
}

impl EventPlane {
    fn crosses(&self, before: f64, after: f64) -> bool {
        let (a, b) = (before - self.threshold, after - self.threshold);
        let up = a < 0.0 && b >= 0.0;
        let down = a > 0.0 && b <= 0.0;
        match self.direction {
            Direction::Up => up,
            Direction::Down => down,
            Direction::Either => up || down,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    pub max_steps: usize,
    pub event_plane: Option<EventPlane>,
}

impl SolverOptions {
    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        SolverOptions {
            method: Method::Adaptive45 { abs_tol, rel_tol },
            max_steps: 10_000_000,
            event_plane: None,
        }
    }

    pub fn rk4(step: f64) -> Self {
        SolverOptions {
            method: Method::Rk4Fixed { step },
            max_steps: 100_000_000,
            event_plane: None,
        }
    }

    pub fn with_event(mut self, plane: EventPlane) -> Self {
        self.event_plane = Some(plane);
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    fn validate(&self) -> Result<(), SolverError> {
        match self.method {
            Method::Rk4Fixed { step } if !(step > 0.0 && step.is_finite()) => {
                return Err(SolverError::InvalidInput(format!(
                    "step must be > 0, got {step}"
                )))
            }
            Method::Adaptive45 { abs_tol, rel_tol } if !(abs_tol > 0.0 && rel_tol > 0.0) => {
                return Err(SolverError::InvalidInput(format!(
                    "tolerances must be > 0, got abs {abs_tol}, rel {rel_tol}"
                )))
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return Err(SolverError::InvalidInput("max_steps must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.times.len() - 1;
        (self.times[i], &self.states[i])
    }
}

// Dormand-Prince 5(4) tableau. Nodes are omitted since every vector field here is autonomous.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat: difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const EVENT_T_TOL: f64 = 1e-10;

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }
}

fn rk4_step<F>(rhs: &F, y: &[f64], h: f64, ws: &mut Workspace, out: &mut [f64])
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, ..] = &mut ws.k;
    let tmp = &mut ws.tmp;
    rhs(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(tmp, k4);
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// One Dormand-Prince step. `ws.k[0]` must hold `rhs(y)` on entry; on return
/// `ws.k[6]` holds `rhs(out)`. Returns the weighted max-norm of the error estimate.
fn dopri_step<F>(
    rhs: &F,
    y: &[f64],
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) -> f64
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, k5, k6, k7] = &mut ws.k;
    let tmp = &mut ws.tmp;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    rhs(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    rhs(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    rhs(tmp, k4);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    rhs(tmp, k5);
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    rhs(tmp, k6);
    for i in 0..n {
        out[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    rhs(out, k7);
    let mut err: f64 = 0.0;
    for i in 0..n {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = abs_tol + rel_tol * y[i].abs().max(out[i].abs());
        err = err.max((e / scale).abs());
    }
    err
}

fn weighted_max_norm(v: &[f64], y: &[f64], abs_tol: f64, rel_tol: f64) -> f64 {
    v.iter()
        .zip(y)
        .map(|(vi, yi)| (vi / (abs_tol + rel_tol * yi.abs())).abs())
        .fold(0.0, f64::max)
}

/// Starting step from the usual two-evaluation heuristic for order 5.
fn initial_step<F>(rhs: &F, y0: &[f64], f0: &[f64], span: f64, abs_tol: f64, rel_tol: f64) -> f64
where
    F: Fn(&[f64], &mut [f64]),
{
    let d0 = weighted_max_norm(y0, y0, abs_tol, rel_tol);
    let d1 = weighted_max_norm(f0, y0, abs_tol, rel_tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    rhs(&y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = weighted_max_norm(&diff, y0, abs_tol, rel_tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(span)
}

fn finite(y: &[f64]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Locates a plane crossing inside the accepted step `[t, t + h]` that starts at `y`.
fn locate_event<F>(
    rhs: &F,
    method: Method,
    plane: EventPlane,
    t: f64,
    y: &[f64],
    h: f64,
    ws: &mut Workspace,
) -> Event
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    let mut sub = vec![0.0; n];
    let mut f0 = vec![0.0; n];
    rhs(y, &mut f0);
    let advance = |dt: f64, out: &mut [f64], ws: &mut Workspace| match method {
        Method::Rk4Fixed { .. } => rk4_step(rhs, y, dt, ws, out),
        Method::Adaptive45 { abs_tol, rel_tol } => {
            ws.k[0].copy_from_slice(&f0);
            dopri_step(rhs, y, dt, abs_tol, rel_tol, ws, out);
        }
    };
    let (mut lo, mut hi) = (0.0, h);
    let mut state_hi = vec![0.0; n];
    advance(h, &mut state_hi, ws);
    while hi - lo > EVENT_T_TOL {
        let mid = 0.5 * (lo + hi);
        advance(mid, &mut sub, ws);
        if plane.crosses(y[plane.index], sub[plane.index]) {
            hi = mid;
            state_hi.copy_from_slice(&sub);
        } else {
            lo = mid;
        }
    }
    Event {
        t: t + hi,
        state: state_hi,
    }
}

/// Integrates the autonomous system `y' = rhs(y)` from `t0` to `t1`.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    opts: &SolverOptions,
) -> Result<Trajectory, SolverError>
where
    F: Fn(&[f64], &mut [f64]),
{
    opts.validate()?;
    if !(t1 > t0) {
        return Err(SolverError::InvalidInput(format!(
            "t1 ({t1}) must be greater than t0 ({t0})"
        )));
    }
    if y0.is_empty() {
        return Err(SolverError::InvalidInput("empty state".into()));
    }
    if !finite(y0) {
        return Err(SolverError::NonFiniteState(t0));
    }
    if let Some(plane) = opts.event_plane {
        if plane.index >= y0.len() {
            return Err(SolverError::InvalidInput(format!(
                "event index {} out of range for state of length {}",
                plane.index,
                y0.len()
            )));
        }
    }
    match opts.method {
        Method::Rk4Fixed { step } => integrate_rk4(&rhs, y0, t0, t1, step, opts),
        Method::Adaptive45 { abs_tol, rel_tol } => {
            integrate_dopri(&rhs, y0, t0, t1, abs_tol, rel_tol, opts)
        }
    }
}

fn integrate_rk4<F>(
    rhs: &F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
    opts: &SolverOptions,
) -> Result<Trajectory, SolverError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y0.len();
    let steps = ((t1 - t0) / step).ceil() as usize;
    if steps > opts.max_steps {
        return Err(SolverError::MaxStepsExceeded(opts.max_steps));
    }
    let mut ws = Workspace::new(n);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        events: Vec::new(),
    };
    traj.times.push(t0);
    traj.states.push(y0.to_vec());
    let mut y = y0.to_vec();
    let mut next = vec![0.0; n];
    for k in 0..steps {
        let t = t0 + k as f64 * step;
        let t_next = if k + 1 == steps {
            t1
        } else {
            t0 + (k + 1) as f64 * step
        };
        let h = t_next - t;
        if h <= 0.0 {
            continue;
        }
        rk4_step(rhs, &y, h, &mut ws, &mut next);
        if !finite(&next) {
            return Err(SolverError::NonFiniteState(t_next));
        }
        if let Some(plane) = opts.event_plane {
            if plane.crosses(y[plane.index], next[plane.index]) {
                let ev = locate_event(rhs, opts.method, plane, t, &y, h, &mut ws);
                traj.events.push(ev);
            }
        }
        std::mem::swap(&mut y, &mut next);
        traj.times.push(t_next);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

fn integrate_dopri<F>(
    rhs: &F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    abs_tol: f64,
    rel_tol: f64,
    opts: &SolverOptions,
) -> Result<Trajectory, SolverError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y0.len();
    let span = t1 - t0;
    let h_min = 1e-14 * span;
    let mut ws = Workspace::new(n);
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0.to_vec()],
        events: Vec::new(),
    };
    let mut y = y0.to_vec();
    let mut next = vec![0.0; n];
    rhs(&y, &mut ws.k[0]);
    if !finite(&ws.k[0]) {
        return Err(SolverError::NonFiniteState(t0));
    }
    let mut h = initial_step(rhs, &y, &ws.k[0].clone(), span, abs_tol, rel_tol);
    let mut t = t0;
    let mut attempts = 0usize;
    while t < t1 {
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(SolverError::MaxStepsExceeded(opts.max_steps));
        }
        let remaining = t1 - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < h_min && !last {
            return Err(SolverError::StepUnderflow { t, h });
        }
        let err = dopri_step(rhs, &y, h, abs_tol, rel_tol, &mut ws, &mut next);
        if !err.is_finite() || !finite(&next) {
            // treat as a rejected step with maximal shrink
            h *= FAC_MIN;
            if h < h_min {
                return Err(SolverError::NonFiniteState(t));
            }
            continue;
        }
        let factor = if err == 0.0 {
            FAC_MAX
        } else {
            (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
        };
        if err <= 1.0 {
            let t_next = if last { t1 } else { t + h };
            if let Some(plane) = opts.event_plane {
                if plane.crosses(y[plane.index], next[plane.index]) {
                    let k7 = ws.k[6].clone();
                    let ev = locate_event(rhs, opts.method, plane, t, &y, h, &mut ws);
                    ws.k[6] = k7;
                    traj.events.push(ev);
                }
            }
            std::mem::swap(&mut y, &mut next);
            let (k1, rest) = ws.k.split_at_mut(1);
            k1[0].copy_from_slice(&rest[5]);
            t = t_next;
            traj.times.push(t);
            traj.states.push(y.clone());
            h *= factor;
        } else {
            h *= factor.min(1.0);
            if h < h_min {
                return Err(SolverError::StepUnderflow { t, h });
            }
        }
    }
    Ok(traj)
}
