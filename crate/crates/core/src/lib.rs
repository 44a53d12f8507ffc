//! Opinion dynamics on a network coupled to a shared environment.
//!
//! The crate covers the full `N + 1` dimensional model, its reduction to the
//! synchronized planar system, equilibrium and stability analysis, and the
//! bifurcations that occur as the trust parameter `beta` varies.

pub mod bifurcation;
pub mod config;
pub mod fsoe;
pub mod graph;
pub mod io;
pub mod model;
pub mod network;
pub mod ode;
pub mod verify;

pub use fsoe::{Equilibrium, FsoeState, Stability};
pub use graph::Graph;
pub use model::{ModelConfig, SmoothFunction};
