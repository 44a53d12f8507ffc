//! Full coupled dynamics: N opinions on a graph plus the environment deviation.
//!
//! State vectors are laid out as `[x_0, ..., x_{N-1}, e]`. The control is
//! applied to the opinion average, `u_bar(x) = u(mean(x))`, which coincides
//! with `u(p)` on consensus states.

use thiserror::Error;

use crate::graph::Graph;
use crate::model::ModelConfig;
use crate::ode::{integrate, SolverError, SolverOptions, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("state has {got} opinions but the graph has {expected} vertices")]
    SizeMismatch { expected: usize, got: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("simulation failed: {0}")]
    SolverFailure(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub x: Vec<f64>,
    pub e: f64,
}

impl NetworkState {
    pub fn consensus(n: usize, p: f64, e: f64) -> Self {
        NetworkState { x: vec![p; n], e }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push(self.e);
        v
    }

    pub fn from_slice(y: &[f64]) -> Self {
        let (x, e) = y.split_at(y.len() - 1);
        NetworkState {
            x: x.to_vec(),
            e: e[0],
        }
    }

    pub fn negated(&self) -> Self {
        NetworkState {
            x: self.x.iter().map(|v| -v).collect(),
            e: -self.e,
        }
    }
}

/// Mean accumulated as deviations from the first entry; exact on constant vectors.
fn consensus_preserving_mean(x: &[f64]) -> f64 {
    let base = x[0];
    let dev: f64 = x[1..].iter().map(|v| v - base).sum();
    base + dev / x.len() as f64
}

/// Writes the vector field into `dy`. `y` and `dy` have length `N + 1`.
fn rhs_into(
    cfg: &ModelConfig,
    g: &Graph,
    y: &[f64],
    signal: &mut [f64],
    avg: &mut [f64],
    dy: &mut [f64],
) {
    let n = g.n();
    let (x, e) = (&y[..n], y[n]);
    for (s_i, &x_i) in signal.iter_mut().zip(x) {
        *s_i = cfg.s.eval(x_i);
    }
    g.normalized_adjacency_into(signal, avg)
        .expect("buffers sized to the graph");
    let env = cfg.beta * cfg.r.eval(e);
    for i in 0..n {
        dy[i] = (-x[i] + env + (1.0 - cfg.beta) * avg[i]) / cfg.tau_x;
    }
    let u_bar = cfg.u.eval(consensus_preserving_mean(x));
    dy[n] = (-cfg.gamma * e + u_bar - cfg.gamma * cfg.ebar) / cfg.tau_e;
}

pub fn rhs_network(
    cfg: &ModelConfig,
    g: &Graph,
    st: &NetworkState,
) -> Result<NetworkState, NetworkError> {
    if st.x.len() != g.n() {
        return Err(NetworkError::SizeMismatch {
            expected: g.n(),
            got: st.x.len(),
        });
    }
    let y = st.to_vec();
    let mut dy = vec![0.0; y.len()];
    let mut signal = vec![0.0; g.n()];
    let mut avg = vec![0.0; g.n()];
    rhs_into(cfg, g, &y, &mut signal, &mut avg, &mut dy);
    Ok(NetworkState::from_slice(&dy))
}

pub fn simulate_network(
    cfg: &ModelConfig,
    g: &Graph,
    st0: &NetworkState,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<Trajectory, NetworkError> {
    if st0.x.len() != g.n() {
        return Err(NetworkError::SizeMismatch {
            expected: g.n(),
            got: st0.x.len(),
        });
    }
    let n = g.n();
    let signal = std::cell::RefCell::new((vec![0.0; n], vec![0.0; n]));
    let traj = integrate(
        |y: &[f64], dy: &mut [f64]| {
            let mut bufs = signal.borrow_mut();
            let (s, a) = &mut *bufs;
            rhs_into(cfg, g, y, s, a, dy);
        },
        &st0.to_vec(),
        0.0,
        t_end,
        opts,
    )?;
    Ok(traj)
}

/// `max_{i,j} |x_i - x_j|`
pub fn sync_error(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if x.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Tolerances used by the synchronization-manifold checks.
pub fn invariance_solver() -> SolverOptions {
    SolverOptions::adaptive(1e-10, 1e-10)
}

/// Simulates from the consensus state `(p0 * 1, e0)` and returns the largest
/// synchronization error seen along the trajectory.
pub fn check_forward_invariance(
    cfg: &ModelConfig,
    g: &Graph,
    p0: f64,
    e0: f64,
    t_end: f64,
) -> Result<f64, NetworkError> {
    if !g.is_connected() {
        return Err(NetworkError::Disconnected);
    }
    let st0 = NetworkState::consensus(g.n(), p0, e0);
    let traj = simulate_network(cfg, g, &st0, t_end, &invariance_solver())?;
    let n = g.n();
    Ok(traj
        .states
        .iter()
        .map(|y| sync_error(&y[..n]))
        .fold(0.0, f64::max))
}

/// `|| F(-y) + F(y) ||_inf`, zero for odd vector fields.
pub fn check_odd_dynamics(
    cfg: &ModelConfig,
    g: &Graph,
    st: &NetworkState,
) -> Result<f64, NetworkError> {
    let plus = rhs_network(cfg, g, st)?;
    let minus = rhs_network(cfg, g, &st.negated())?;
    let x_res = plus
        .x
        .iter()
        .zip(&minus.x)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    Ok(x_res.max((plus.e + minus.e).abs()))
}
