//! Differential-game problem interface and the two benchmarks.

mod control;
mod diffusion;
mod path_planning;
mod pubsub;
mod toy;

use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use control::ControlSet;
pub use diffusion::{Diffusion, MIN_ELLIPTICITY};
pub use path_planning::{disturbance_optimal, PathPlanningParams, PathPlanningProblem};
pub use pubsub::{build_anisotropic_sigma, PubSubParams, PubSubProblem};
pub use toy::{HeatProblem, QuadraticSaddle};

use crate::{Error, Result};

/// Axis-aligned box in state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        BoxDomain { lower: vec![lo; dim], upper: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::Config("domain bounds must be nonempty and of equal length".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Config("degenerate domain: need lower < upper in every axis".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }

    pub fn contains_box(&self, other: &BoxDomain) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, (l, u)) in out.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *o = rng.random_range(*l..*u);
        }
    }
}

/// Terminal cost with its exact gradient and row-major Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// A two-player zero-sum stochastic differential game
/// `dX = f(t, X, a, b) ds + σ(t, X) dW` with running cost `c` and terminal cost `g`.
/// Player I (`a ∈ A`) minimizes, player II (`b ∈ B`) maximizes.
pub trait DifferentialGame: Send + Sync {
    fn label(&self) -> String;
    fn dim(&self) -> usize;
    fn horizon(&self) -> f64;
    fn control_set_a(&self) -> &ControlSet;
    fn control_set_b(&self) -> &ControlSet;

    fn drift(&self, t: f64, x: &[f64], a: &[f64], b: &[f64], out: &mut [f64]);
    fn running_cost(&self, t: f64, x: &[f64], a: &[f64], b: &[f64]) -> f64;
    fn terminal(&self, x: &[f64]) -> TerminalJet;

    fn terminal_value(&self, x: &[f64]) -> f64 {
        self.terminal(x).value
    }

    fn diffusion(&self, t: f64, x: &[f64]) -> Cow<'_, Diffusion>;

    /// Closed-form `H(t, x, p) = sup_b inf_a L(t, x, p)(a, b)`, when known.
    fn hamiltonian(&self, _t: f64, _x: &[f64], _p: &[f64]) -> Option<f64> {
        None
    }

    /// Closed-form feedback selector `(a*, b*)(t, x, p)`, when known.
    fn optimal_controls(&self, _t: f64, _x: &[f64], _p: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// Gradients of `L(t, x, p)(a, b)` in `a` and `b`. Central differences by default.
    fn lagrangian_control_grad(&self, t: f64, x: &[f64], p: &[f64], a: &[f64], b: &[f64], ga: &mut [f64], gb: &mut [f64]) {
        let h = 1e-6;
        let mut aa = a.to_vec();
        for i in 0..a.len() {
            aa[i] = a[i] + h;
            let up = lagrangian_unchecked(self, t, x, p, &aa, b);
            aa[i] = a[i] - h;
            let dn = lagrangian_unchecked(self, t, x, p, &aa, b);
            aa[i] = a[i];
            ga[i] = (up - dn) / (2.0 * h);
        }
        let mut bb = b.to_vec();
        for i in 0..b.len() {
            bb[i] = b[i] + h;
            let up = lagrangian_unchecked(self, t, x, p, a, &bb);
            bb[i] = b[i] - h;
            let dn = lagrangian_unchecked(self, t, x, p, a, &bb);
            bb[i] = b[i];
            gb[i] = (up - dn) / (2.0 * h);
        }
    }

    /// Box used to draw collocation points.
    fn sampling_domain(&self) -> BoxDomain;
    /// Box on which accuracy is reported.
    fn target_domain(&self) -> BoxDomain;

    /// Bound on `|∂H/∂p|` over `x`, used for the explicit time-step limit.
    fn hamiltonian_speed_bound(&self, _t: f64, _x: &[f64]) -> Option<f64> {
        None
    }
}

pub(crate) fn lagrangian_unchecked<G: DifferentialGame + ?Sized>(
    game: &G,
    t: f64,
    x: &[f64],
    p: &[f64],
    a: &[f64],
    b: &[f64],
) -> f64 {
    let mut f = vec![0.0; game.dim()];
    game.drift(t, x, a, b, &mut f);
    game.running_cost(t, x, a, b) + dot(p, &f)
}

/// `L(t, x, p)(a, b) = c(t, x, a, b) + p · f(t, x, a, b)`.
pub fn lagrangian<G: DifferentialGame + ?Sized>(game: &G, t: f64, x: &[f64], p: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    let d = game.dim();
    for v in [x, p] {
        if v.len() != d {
            return Err(Error::Dimension { expected: d, got: v.len() });
        }
    }
    if !game.control_set_a().contains(a, 1e-9) {
        return Err(Error::Inadmissible("a"));
    }
    if !game.control_set_b().contains(b, 1e-9) {
        return Err(Error::Inadmissible("b"));
    }
    Ok(lagrangian_unchecked(game, t, x, p, a, b))
}

/// Checks `σσᵀ ⪰ λ_min I` at the given sample points.
pub fn check_ellipticity<G: DifferentialGame + ?Sized>(game: &G, points: &[(f64, Vec<f64>)]) -> Result<f64> {
    let mut lam = f64::INFINITY;
    for (t, x) in points {
        lam = lam.min(game.diffusion(*t, x).min_eigenvalue());
    }
    if !(lam >= MIN_ELLIPTICITY) {
        return Err(Error::DegenerateDiffusion(lam));
    }
    Ok(lam)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Benchmark problems buildable from configuration.
#[derive(Debug, Clone)]
pub enum Problem {
    PathPlanning(PathPlanningProblem),
    PubSub(PubSubProblem),
}

macro_rules! delegate {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Problem::PathPlanning($p) => $e,
            Problem::PubSub($p) => $e,
        }
    };
}

impl DifferentialGame for Problem {
    fn label(&self) -> String {
        delegate!(self, p => p.label())
    }
    fn dim(&self) -> usize {
        delegate!(self, p => p.dim())
    }
    fn horizon(&self) -> f64 {
        delegate!(self, p => p.horizon())
    }
    fn control_set_a(&self) -> &ControlSet {
        delegate!(self, p => p.control_set_a())
    }
    fn control_set_b(&self) -> &ControlSet {
        delegate!(self, p => p.control_set_b())
    }
    fn drift(&self, t: f64, x: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) {
        delegate!(self, p => p.drift(t, x, a, b, out))
    }
    fn running_cost(&self, t: f64, x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        delegate!(self, p => p.running_cost(t, x, a, b))
    }
    fn terminal(&self, x: &[f64]) -> TerminalJet {
        delegate!(self, p => p.terminal(x))
    }
    fn terminal_value(&self, x: &[f64]) -> f64 {
        delegate!(self, p => p.terminal_value(x))
    }
    fn diffusion(&self, t: f64, x: &[f64]) -> Cow<'_, Diffusion> {
        delegate!(self, p => p.diffusion(t, x))
    }
    fn hamiltonian(&self, t: f64, x: &[f64], q: &[f64]) -> Option<f64> {
        delegate!(self, p => p.hamiltonian(t, x, q))
    }
    fn optimal_controls(&self, t: f64, x: &[f64], q: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        delegate!(self, p => p.optimal_controls(t, x, q))
    }
    fn lagrangian_control_grad(&self, t: f64, x: &[f64], q: &[f64], a: &[f64], b: &[f64], ga: &mut [f64], gb: &mut [f64]) {
        delegate!(self, p => p.lagrangian_control_grad(t, x, q, a, b, ga, gb))
    }
    fn sampling_domain(&self) -> BoxDomain {
        delegate!(self, p => p.sampling_domain())
    }
    fn target_domain(&self) -> BoxDomain {
        delegate!(self, p => p.target_domain())
    }
    fn hamiltonian_speed_bound(&self, t: f64, x: &[f64]) -> Option<f64> {
        delegate!(self, p => p.hamiltonian_speed_bound(t, x))
    }
}
