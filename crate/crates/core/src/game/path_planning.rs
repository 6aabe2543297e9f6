//! Two-dimensional path planning around a moving obstacle.
//!
//! Dynamics `dX = (a + b) ds + σ dW` with `|a| ≤ 1`, `|b| ≤ δ`; running cost
//! `λ1 |a|² + λ2 φ(s, X)` and terminal cost `λ3 |X(T) - x_goal|²`, where `φ` is
//! a Gaussian bump centred on an obstacle circling the origin.

use std::borrow::Cow;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::control::norm;
use super::{BoxDomain, ControlSet, DifferentialGame, Diffusion, TerminalJet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathPlanningParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub goal: [f64; 2],
    pub noise: f64,
    pub horizon: f64,
    pub sampling_domain: BoxDomain,
    pub target_domain: BoxDomain,
}

impl Default for PathPlanningParams {
    fn default() -> Self {
        PathPlanningParams {
            lambda1: 0.1,
            lambda2: 100.0,
            lambda3: 10.0,
            delta: 0.1,
            epsilon: 0.3,
            goal: [0.9, 0.9],
            noise: 0.1,
            horizon: 1.0,
            sampling_domain: BoxDomain::cube(2, -1.0, 1.0),
            target_domain: BoxDomain::cube(2, -1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathPlanningProblem {
    params: PathPlanningParams,
    a_set: ControlSet,
    b_set: ControlSet,
    diffusion: Diffusion,
}

impl PathPlanningProblem {
    pub fn new(params: PathPlanningParams) -> Result<Self> {
        let p = &params;
        if !(p.lambda1 > 0.0) || !(p.epsilon > 0.0) || !(p.delta >= 0.0) || p.lambda2 < 0.0 || p.lambda3 < 0.0 {
            return Err(Error::Config("path planning needs lambda1 > 0, epsilon > 0, delta >= 0, lambda2, lambda3 >= 0".into()));
        }
        if !(p.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        p.sampling_domain.validate()?;
        p.target_domain.validate()?;
        if p.sampling_domain.dim() != 2 || p.target_domain.dim() != 2 {
            return Err(Error::Dimension { expected: 2, got: p.sampling_domain.dim() });
        }
        let a_set = ControlSet::ball(2, 1.0)?;
        // A zero-radius disturbance set is still represented as a (tiny) ball.
        let b_set = ControlSet::ball(2, p.delta.max(f64::MIN_POSITIVE))?;
        let diffusion = Diffusion::isotropic(2, p.noise)?;
        Ok(PathPlanningProblem { params, a_set, b_set, diffusion })
    }

    pub fn params(&self) -> &PathPlanningParams {
        &self.params
    }

    /// `x_obs(s) = (0.5 cos πs, 0.5 sin πs)`.
    pub fn obstacle_center(s: f64) -> [f64; 2] {
        [0.5 * (PI * s).cos(), 0.5 * (PI * s).sin()]
    }

    /// `φ(s, x) = exp(-|x - x_obs(s)|² / (2ε²))`.
    pub fn obstacle_penalty(&self, s: f64, x: &[f64]) -> f64 {
        let c = Self::obstacle_center(s);
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        (-r2 / (2.0 * self.params.epsilon * self.params.epsilon)).exp()
    }

    /// Piecewise closed form of `sup_b inf_a [λ1|a|² + λ2 φ + p·(a + b)]`.
    pub fn closed_form_hamiltonian(&self, t: f64, x: &[f64], p: &[f64]) -> f64 {
        let PathPlanningParams { lambda1: l1, lambda2: l2, delta, .. } = self.params;
        let np = norm(p);
        let bump = l2 * self.obstacle_penalty(t, x);
        if np <= 2.0 * l1 {
            -np * np / (4.0 * l1) + bump + delta * np
        } else {
            -np + l1 + bump + delta * np
        }
    }

    /// `a* = -p / (2λ1)` clipped to the unit ball.
    pub fn optimal_control(&self, p: &[f64]) -> [f64; 2] {
        let l1 = self.params.lambda1;
        let a = [-p[0] / (2.0 * l1), -p[1] / (2.0 * l1)];
        let n = norm(&a);
        if n <= 1.0 {
            a
        } else {
            let np = norm(p);
            [-p[0] / np, -p[1] / np]
        }
    }
}

/// Maximizer of `p · b` over `|b| ≤ δ`; `b* = 0` at `p = 0`.
pub fn disturbance_optimal(p: &[f64], delta: f64) -> Vec<f64> {
    let np = norm(p);
    if np == 0.0 {
        vec![0.0; p.len()]
    } else {
        p.iter().map(|v| delta * v / np).collect()
    }
}

impl DifferentialGame for PathPlanningProblem {
    fn label(&self) -> String {
        "path_planning".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn horizon(&self) -> f64 {
        self.params.horizon
    }
    fn control_set_a(&self) -> &ControlSet {
        &self.a_set
    }
    fn control_set_b(&self) -> &ControlSet {
        &self.b_set
    }
    fn drift(&self, _t: f64, _x: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) {
        out[0] = a[0] + b[0];
        out[1] = a[1] + b[1];
    }
    fn running_cost(&self, t: f64, x: &[f64], a: &[f64], _b: &[f64]) -> f64 {
        self.params.lambda1 * (a[0] * a[0] + a[1] * a[1]) + self.params.lambda2 * self.obstacle_penalty(t, x)
    }
    fn terminal(&self, x: &[f64]) -> TerminalJet {
        let l3 = self.params.lambda3;
        let g = self.params.goal;
        let (dx, dy) = (x[0] - g[0], x[1] - g[1]);
        TerminalJet {
            value: l3 * (dx * dx + dy * dy),
            grad: vec![2.0 * l3 * dx, 2.0 * l3 * dy],
            hess: vec![2.0 * l3, 0.0, 0.0, 2.0 * l3],
        }
    }
    fn terminal_value(&self, x: &[f64]) -> f64 {
        let g = self.params.goal;
        self.params.lambda3 * ((x[0] - g[0]).powi(2) + (x[1] - g[1]).powi(2))
    }
    fn diffusion(&self, _t: f64, _x: &[f64]) -> Cow<'_, Diffusion> {
        Cow::Borrowed(&self.diffusion)
    }
    fn hamiltonian(&self, t: f64, x: &[f64], p: &[f64]) -> Option<f64> {
        Some(self.closed_form_hamiltonian(t, x, p))
    }
    fn optimal_controls(&self, _t: f64, _x: &[f64], p: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((self.optimal_control(p).to_vec(), disturbance_optimal(p, self.params.delta)))
    }
    fn lagrangian_control_grad(&self, _t: f64, _x: &[f64], p: &[f64], a: &[f64], _b: &[f64], ga: &mut [f64], gb: &mut [f64]) {
        for i in 0..2 {
            ga[i] = 2.0 * self.params.lambda1 * a[i] + p[i];
            gb[i] = p[i];
        }
    }
    fn sampling_domain(&self) -> BoxDomain {
        self.params.sampling_domain.clone()
    }
    fn target_domain(&self) -> BoxDomain {
        self.params.target_domain.clone()
    }
    fn hamiltonian_speed_bound(&self, _t: f64, _x: &[f64]) -> Option<f64> {
        Some(1.0 + self.params.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> PathPlanningProblem {
        PathPlanningProblem::new(PathPlanningParams::default()).unwrap()
    }

    #[test]
    fn obstacle_positions() {
        let c = PathPlanningProblem::obstacle_center(0.0);
        assert!((c[0] - 0.5).abs() < 1e-15 && c[1].abs() < 1e-15);
        let c = PathPlanningProblem::obstacle_center(0.5);
        assert!(c[0].abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        let c = PathPlanningProblem::obstacle_center(1.0);
        assert!((c[0] + 0.5).abs() < 1e-15 && c[1].abs() < 1e-15);
    }

    #[test]
    fn obstacle_penalty_values() {
        let pp = problem();
        for s in [0.0, 0.3, 0.9] {
            let c = PathPlanningProblem::obstacle_center(s);
            assert_eq!(pp.obstacle_penalty(s, &c), 1.0);
        }
        // |x - x_obs| = 0.3 = ε gives exp(-1/2).
        assert!((pp.obstacle_penalty(0.0, &[0.8, 0.0]) - (-0.5f64).exp()).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 1..50 {
            let v = pp.obstacle_penalty(0.0, &[0.5 + 0.05 * k as f64, 0.0]);
            assert!(v < prev && v > 0.0 || v == 0.0);
            prev = v;
        }
        assert!(pp.obstacle_penalty(0.0, &[40.0, 0.0]) < 1e-300);
    }

    #[test]
    fn hamiltonian_branches() {
        let pp = problem();
        let x = [0.3, -0.2];
        let bump = 100.0 * pp.obstacle_penalty(0.4, &x);
        assert!((pp.closed_form_hamiltonian(0.4, &x, &[0.0, 0.0]) - bump).abs() < 1e-12);
        // At the switch |p| = 2λ1 = 0.2 both branches give λ2 φ - 0.08.
        let p = [0.12, 0.16];
        let inner = -0.04 / 0.4 + bump + 0.1 * 0.2;
        let outer = -0.2 + 0.1 + bump + 0.1 * 0.2;
        assert!((inner - outer).abs() < 1e-15);
        assert!((pp.closed_form_hamiltonian(0.4, &x, &p) - (bump - 0.08)).abs() < 1e-12);
        // Far from the obstacle φ underflows to zero: H = -0.025 + 0.01.
        let far = [1e3, 1e3];
        assert!((pp.closed_form_hamiltonian(0.0, &far, &[0.1, 0.0]) + 0.015).abs() < 1e-15);
    }

    #[test]
    fn control_recovery() {
        let pp = problem();
        assert_eq!(pp.optimal_control(&[0.0, 0.0]), [0.0, 0.0]);
        let a = pp.optimal_control(&[0.1, 0.0]);
        assert!((a[0] + 0.5).abs() < 1e-15 && a[1] == 0.0);
        assert_eq!(pp.optimal_control(&[4.0, 0.0]), [-1.0, 0.0]);
        assert_eq!(disturbance_optimal(&[1.0, 0.0], 0.1), vec![0.1, 0.0]);
        assert_eq!(disturbance_optimal(&[0.0, 0.0], 0.1), vec![0.0, 0.0]);
    }

    #[test]
    fn lagrangian_at_zero_controls() {
        let pp = problem();
        let x = [0.1, 0.2];
        let l = crate::game::lagrangian(&pp, 0.3, &x, &[1.0, -2.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((l - 100.0 * pp.obstacle_penalty(0.3, &x)).abs() < 1e-12);
        assert!(crate::game::lagrangian(&pp, 0.3, &x, &[1.0, -2.0], &[2.0, 0.0], &[0.0, 0.0]).is_err());
    }
}
