use std::borrow::Cow;

use super::{BoxDomain, ControlSet, DifferentialGame, Diffusion, TerminalJet};
use crate::Result;

/// Scalar game with `c(a, b) = ½a² - ½b² + ab` and `f(a, b) = a + 2b`, so that
/// `L` is 1-strongly convex in `a` and 1-strongly concave in `b`. For `|p| ≤ 2`
/// the saddle point is interior: `a* = -3p/2`, `b* = p/2`, making the selector
/// Lipschitz in `p` with constant 2 in the `|Δa| + |Δb|` metric.
#[derive(Debug, Clone)]
pub struct QuadraticSaddle {
    set: ControlSet,
    diffusion: Diffusion,
}

impl QuadraticSaddle {
    pub fn new() -> Result<Self> {
        Ok(QuadraticSaddle { set: ControlSet::cube(1, 5.0)?, diffusion: Diffusion::isotropic(1, 0.1)? })
    }

    pub fn saddle(p: f64) -> (f64, f64) {
        (-1.5 * p, 0.5 * p)
    }
}

impl DifferentialGame for QuadraticSaddle {
    fn label(&self) -> String {
        "quadratic_saddle".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        1.0
    }
    fn control_set_a(&self) -> &ControlSet {
        &self.set
    }
    fn control_set_b(&self) -> &ControlSet {
        &self.set
    }
    fn drift(&self, _t: f64, _x: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) {
        out[0] = a[0] + 2.0 * b[0];
    }
    fn running_cost(&self, _t: f64, _x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        0.5 * a[0] * a[0] - 0.5 * b[0] * b[0] + a[0] * b[0]
    }
    fn terminal(&self, _x: &[f64]) -> TerminalJet {
        TerminalJet { value: 0.0, grad: vec![0.0], hess: vec![0.0] }
    }
    fn diffusion(&self, _t: f64, _x: &[f64]) -> Cow<'_, Diffusion> {
        Cow::Borrowed(&self.diffusion)
    }
    fn sampling_domain(&self) -> BoxDomain {
        BoxDomain::cube(1, -1.0, 1.0)
    }
    fn target_domain(&self) -> BoxDomain {
        BoxDomain::cube(1, -1.0, 1.0)
    }
}

/// Pure diffusion with Gaussian terminal data `g(x) = exp(-|x|² / (2s²))` and
/// no drift, cost or control influence, so `H ≡ 0`.
#[derive(Debug, Clone)]
pub struct HeatProblem {
    dim: usize,
    width: f64,
    horizon: f64,
    domain: BoxDomain,
    set: ControlSet,
    diffusion: Diffusion,
}

impl HeatProblem {
    pub fn new(dim: usize, sigma: f64, width: f64, horizon: f64, half_width: f64) -> Result<Self> {
        if !(width > 0.0) || !(horizon > 0.0) || !(half_width > 0.0) {
            return Err(crate::Error::Config("heat problem needs positive width, horizon and domain".into()));
        }
        Ok(HeatProblem {
            dim,
            width,
            horizon,
            domain: BoxDomain::cube(dim, -half_width, half_width),
            set: ControlSet::ball(1, 1.0)?,
            diffusion: Diffusion::isotropic(dim, sigma)?,
        })
    }

    /// Closed-form solution on all of `ℝᵈ`: the terminal Gaussian smoothed by
    /// the heat kernel of variance `σ²(T - t)` per axis.
    pub fn exact(&self, t: f64, x: &[f64]) -> f64 {
        let s2 = self.width * self.width;
        let var = s2 + self.diffusion.a_mat()[(0, 0)] * (self.horizon - t);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (s2 / var).powf(0.5 * self.dim as f64) * (-r2 / (2.0 * var)).exp()
    }
}

impl DifferentialGame for HeatProblem {
    fn label(&self) -> String {
        "heat".into()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn control_set_a(&self) -> &ControlSet {
        &self.set
    }
    fn control_set_b(&self) -> &ControlSet {
        &self.set
    }
    fn drift(&self, _t: f64, _x: &[f64], _a: &[f64], _b: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn running_cost(&self, _t: f64, _x: &[f64], _a: &[f64], _b: &[f64]) -> f64 {
        0.0
    }
    fn terminal(&self, x: &[f64]) -> TerminalJet {
        let s2 = self.width * self.width;
        let g = self.exact(self.horizon, x);
        let d = self.dim;
        let grad: Vec<f64> = x.iter().map(|v| -v / s2 * g).collect();
        let mut hess = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                hess[i * d + j] = g * (x[i] * x[j] / (s2 * s2) - if i == j { 1.0 / s2 } else { 0.0 });
            }
        }
        TerminalJet { value: g, grad, hess }
    }
    fn diffusion(&self, _t: f64, _x: &[f64]) -> Cow<'_, Diffusion> {
        Cow::Borrowed(&self.diffusion)
    }
    fn hamiltonian(&self, _t: f64, _x: &[f64], _p: &[f64]) -> Option<f64> {
        Some(0.0)
    }
    fn optimal_controls(&self, _t: f64, _x: &[f64], _p: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((vec![0.0], vec![0.0]))
    }
    fn sampling_domain(&self) -> BoxDomain {
        self.domain.clone()
    }
    fn target_domain(&self) -> BoxDomain {
        self.domain.clone()
    }
    fn hamiltonian_speed_bound(&self, _t: f64, _x: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}
