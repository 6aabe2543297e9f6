//! Mesh-free policy iteration for viscous Hamilton–Jacobi–Isaacs equations.
//!
//! The value function of a two-player zero-sum stochastic differential game is
//! approximated by a sine-activated network under the terminal ansatz
//! `v(t, x) = g(x) + (T - t) N(t, x; θ)`. Policy iteration alternates between
//! training the network on the linear PDE obtained by freezing both players'
//! feedback controls, and recomputing those controls pointwise from `∇ₓv`.
//!
//! Modules:
//! - [`game`]: the problem interface plus the path-planning and
//!   publisher–subscriber benchmarks.
//! - [`net`]: the sine MLP, its second-order input jets, parameter gradients,
//!   Xavier initialization and Adam.
//! - [`pinn`]: collocation, residuals, policy improvement, the outer
//!   iteration and the direct (Hamiltonian-in-the-loss) baseline.
//! - [`fdm`]: explicit finite-difference reference solver in two dimensions and
//!   the pairwise decomposition for high-dimensional isotropic references.
//! - [`analysis`]: error metrics, rate fits, selector probes, Euler–Maruyama
//!   rollouts and CSV reports.
//! - [`config`] / [`cli`]: the run configuration tree and subcommand dispatch.

pub mod analysis;
pub mod cli;
pub mod config;
mod error;
pub mod fdm;
pub mod game;
pub mod net;
pub mod pinn;
pub mod seed;

pub use error::{Error, Result};
