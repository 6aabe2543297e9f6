//! Publisher–subscriber game in `R^N`.
//!
//! State `x = (x₀, x₁, …, x_{N-1})` with publisher `x₀`. Drift
//! `f = A x + B u + C d + ψ(x)` with
//! `A = e₁e₁ᵀ - 1 e₁ᵀ + a I`, `B = [0; b I]`, `C = [0; c I]` and
//! `ψ(x) = (α sin x₀, -β x₀, …, -β x₀) ∘ x ∘ x`. There is no running cost.
//! Both players act through the box `[-1, 1]^{N-1}`.

use std::borrow::Cow;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoxDomain, ControlSet, DifferentialGame, Diffusion, TerminalJet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PubSubParams {
    pub dimension: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Terminal radius; only shifts the value by a constant.
    pub r: f64,
    pub noise: f64,
    pub epsilon_aniso: f64,
    pub sigma_seed: u64,
    pub horizon: f64,
    /// Defaults to `[-1.5, 1.5]^N` when absent.
    pub sampling_domain: Option<BoxDomain>,
    /// Defaults to `[-0.5, 0.5]^N` when absent.
    pub target_domain: Option<BoxDomain>,
}

impl Default for PubSubParams {
    fn default() -> Self {
        PubSubParams {
            dimension: 2,
            a: 1.0,
            b: 1.0,
            c: 0.5,
            alpha: -2.0,
            beta: 2.0,
            r: 0.0,
            noise: 0.1,
            epsilon_aniso: 0.0,
            sigma_seed: 0,
            horizon: 0.5,
            sampling_domain: None,
            target_domain: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PubSubProblem {
    params: PubSubParams,
    controls: ControlSet,
    diffusion: Diffusion,
    sampling: BoxDomain,
    target: BoxDomain,
}

impl PubSubProblem {
    pub fn new(params: PubSubParams) -> Result<Self> {
        let n = params.dimension;
        let sigma = build_anisotropic_sigma(n, params.noise, params.epsilon_aniso, params.sigma_seed)?;
        Self::with_sigma(params, sigma)
    }

    /// Same game with an explicit `σ` (used for the pairwise sub-problems).
    pub fn with_sigma(params: PubSubParams, sigma: DMatrix<f64>) -> Result<Self> {
        let n = params.dimension;
        if n < 2 {
            return Err(Error::Config(format!("publisher-subscriber needs N >= 2, got {n}")));
        }
        if !(params.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if sigma.nrows() != n {
            return Err(Error::Dimension { expected: n, got: sigma.nrows() });
        }
        let sampling = params.sampling_domain.clone().unwrap_or_else(|| BoxDomain::cube(n, -1.5, 1.5));
        let target = params.target_domain.clone().unwrap_or_else(|| BoxDomain::cube(n, -0.5, 0.5));
        for dom in [&sampling, &target] {
            dom.validate()?;
            if dom.dim() != n {
                return Err(Error::Dimension { expected: n, got: dom.dim() });
            }
        }
        Ok(PubSubProblem {
            controls: ControlSet::cube(n - 1, 1.0)?,
            diffusion: Diffusion::new(sigma)?,
            params,
            sampling,
            target,
        })
    }

    pub fn params(&self) -> &PubSubParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.dimension
    }

    pub fn is_isotropic(&self) -> bool {
        self.diffusion.is_diagonal()
    }

    /// `ψ(x)`, written into `out`.
    pub fn psi(&self, x: &[f64], out: &mut [f64]) {
        let x0 = x[0];
        out[0] = self.params.alpha * x0.sin() * x0 * x0;
        for i in 1..x.len() {
            out[i] = -self.params.beta * x0 * x[i] * x[i];
        }
    }

    /// `A x + ψ(x)`: the control-free part of the drift.
    pub fn autonomous_drift(&self, x: &[f64], out: &mut [f64]) {
        self.psi(x, out);
        let a = self.params.a;
        out[0] += a * x[0];
        for i in 1..x.len() {
            out[i] += -x[0] + a * x[i];
        }
    }

    pub fn drift_checked(&self, x: &[f64], u: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::Dimension { expected: n, got: x.len() });
        }
        for v in [u, d] {
            if v.len() != n - 1 {
                return Err(Error::Dimension { expected: n - 1, got: v.len() });
            }
        }
        let mut out = vec![0.0; n];
        self.drift(0.0, x, u, d, &mut out);
        Ok(out)
    }

    /// `g_i(x₀, x_i) = ½ (x₀² + x_i² - r²)`.
    pub fn pairwise_cost(&self, x0: f64, xi: f64) -> f64 {
        0.5 * (x0 * x0 + xi * xi - self.params.r * self.params.r)
    }

    /// `pᵀ(A x + ψ(x)) - ‖Bᵀp‖₁ + ‖Cᵀp‖₁`.
    pub fn closed_form_hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let mut f = vec![0.0; x.len()];
        self.autonomous_drift(x, &mut f);
        let lin: f64 = p.iter().zip(&f).map(|(a, b)| a * b).sum();
        let tail: f64 = p[1..].iter().map(|v| v.abs()).sum();
        lin - self.params.b.abs() * tail + self.params.c.abs() * tail
    }

    /// `u* = -sign(Bᵀp)`, `d* = sign(Cᵀp)` with `sign(0) = 0`.
    pub fn controls(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let u = p[1..].iter().map(|v| -sign(self.params.b * v)).collect();
        let d = p[1..].iter().map(|v| sign(self.params.c * v)).collect();
        (u, d)
    }

    /// The game restricted to the `(x₀, x_i)` plane, with `σ_i` the matching
    /// 2×2 principal submatrix of `σ`.
    pub fn pair_problem(&self, i: usize) -> Result<PubSubProblem> {
        if i == 0 || i >= self.n() {
            return Err(Error::OutOfRange(format!("subscriber index {i} for N = {}", self.n())));
        }
        let sub = self.diffusion.submatrix(&[0, i])?;
        let pick = |d: &BoxDomain| BoxDomain { lower: vec![d.lower[0], d.lower[i]], upper: vec![d.upper[0], d.upper[i]] };
        let params = PubSubParams {
            dimension: 2,
            epsilon_aniso: 0.0,
            sampling_domain: Some(pick(&self.sampling)),
            target_domain: Some(pick(&self.target)),
            ..self.params.clone()
        };
        PubSubProblem::with_sigma(params, sub.sigma().clone())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

const SIGMA_RETRIES: usize = 64;

/// `σ = scale · I + P_ε`, with `P_ε` symmetric, zero on the diagonal and
/// off-diagonal entries drawn from `U(0, ε)`. Draws that leave `σσᵀ` with
/// minimum eigenvalue below [`super::MIN_ELLIPTICITY`] are redrawn a bounded number
/// of times.
pub fn build_anisotropic_sigma(n: usize, scale: f64, eps: f64, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 || !(scale > 0.0) || !(eps >= 0.0) {
        return Err(Error::Config(format!("need N >= 1, scale > 0, eps >= 0 (got {n}, {scale}, {eps})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = 0.0;
    for _ in 0..SIGMA_RETRIES {
        let mut s = DMatrix::identity(n, n) * scale;
        if eps > 0.0 {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.random_range(0.0..eps);
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
        }
        match Diffusion::new(s.clone()) {
            Ok(_) => return Ok(s),
            Err(Error::DegenerateDiffusion(l)) => last = l,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateDiffusion(last))
}

impl DifferentialGame for PubSubProblem {
    fn label(&self) -> String {
        format!("pubsub_{}d", self.n())
    }
    fn dim(&self) -> usize {
        self.n()
    }
    fn horizon(&self) -> f64 {
        self.params.horizon
    }
    fn control_set_a(&self) -> &ControlSet {
        &self.controls
    }
    fn control_set_b(&self) -> &ControlSet {
        &self.controls
    }
    fn drift(&self, _t: f64, x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]) {
        self.autonomous_drift(x, out);
        for i in 1..x.len() {
            out[i] += self.params.b * u[i - 1] + self.params.c * d[i - 1];
        }
    }
    fn running_cost(&self, _t: f64, _x: &[f64], _a: &[f64], _b: &[f64]) -> f64 {
        0.0
    }
    fn terminal(&self, x: &[f64]) -> TerminalJet {
        let n = self.n();
        let m = (n - 1) as f64;
        let mut grad = x.to_vec();
        grad[0] *= m;
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            hess[i * n + i] = 1.0;
        }
        hess[0] = m;
        TerminalJet { value: self.terminal_value(x), grad, hess }
    }
    fn terminal_value(&self, x: &[f64]) -> f64 {
        let m = (self.n() - 1) as f64;
        let tail: f64 = x[1..].iter().map(|v| v * v).sum();
        0.5 * (m * x[0] * x[0] + tail - m * self.params.r * self.params.r)
    }
    fn diffusion(&self, _t: f64, _x: &[f64]) -> Cow<'_, Diffusion> {
        Cow::Borrowed(&self.diffusion)
    }
    fn hamiltonian(&self, _t: f64, x: &[f64], p: &[f64]) -> Option<f64> {
        Some(self.closed_form_hamiltonian(x, p))
    }
    fn optimal_controls(&self, _t: f64, _x: &[f64], p: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some(self.controls(p))
    }
    fn lagrangian_control_grad(&self, _t: f64, _x: &[f64], p: &[f64], _a: &[f64], _b: &[f64], ga: &mut [f64], gb: &mut [f64]) {
        for i in 1..p.len() {
            ga[i - 1] = self.params.b * p[i];
            gb[i - 1] = self.params.c * p[i];
        }
    }
    fn sampling_domain(&self) -> BoxDomain {
        self.sampling.clone()
    }
    fn target_domain(&self) -> BoxDomain {
        self.target.clone()
    }
    fn hamiltonian_speed_bound(&self, _t: f64, x: &[f64]) -> Option<f64> {
        let mut f = vec![0.0; x.len()];
        self.autonomous_drift(x, &mut f);
        let base = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        Some(base + (self.params.b.abs() + self.params.c.abs()) * ((x.len() - 1) as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn problem(n: usize) -> PubSubProblem {
        PubSubProblem::new(PubSubParams { dimension: n, ..Default::default() }).unwrap()
    }

    #[test]
    fn psi_values() {
        let ps = problem(2);
        let mut out = [0.0; 2];
        ps.psi(&[PI / 2.0, 2.0], &mut out);
        assert!((out[0] + PI * PI / 2.0).abs() < 1e-12);
        assert!((out[1] + 4.0 * PI).abs() < 1e-12);
        let ps5 = problem(5);
        let mut out = [1.0; 5];
        ps5.psi(&[0.0, 1.0, -2.0, 3.0, 0.5], &mut out);
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn drift_matches_dense_matrices() {
        let n = 4;
        let ps = problem(n);
        let (a, b, c) = (1.0, 1.0, 0.5);
        // A = e1 e1ᵀ - 1 e1ᵀ + a I
        let mut am = DMatrix::<f64>::identity(n, n) * a;
        am[(0, 0)] += 1.0;
        for i in 0..n {
            am[(i, 0)] -= 1.0;
        }
        let mut bm = DMatrix::<f64>::zeros(n, n - 1);
        let mut cm = DMatrix::<f64>::zeros(n, n - 1);
        for i in 1..n {
            bm[(i, i - 1)] = b;
            cm[(i, i - 1)] = c;
        }
        let x = nalgebra::DVector::from_vec(vec![0.3, -0.7, 1.1, 0.2]);
        let u = nalgebra::DVector::from_vec(vec![0.5, -0.1, 0.9]);
        let d = nalgebra::DVector::from_vec(vec![-0.4, 0.3, 0.0]);
        let mut psi = vec![0.0; n];
        ps.psi(x.as_slice(), &mut psi);
        let dense = &am * &x + &bm * &u + &cm * &d + nalgebra::DVector::from_vec(psi);
        let got = ps.drift_checked(x.as_slice(), u.as_slice(), d.as_slice()).unwrap();
        for i in 0..n {
            assert!((got[i] - dense[i]).abs() < 1e-14);
        }
        assert!(ps.drift_checked(&[0.0; 3], u.as_slice(), d.as_slice()).is_err());
        assert!(ps.drift_checked(&[0.0; 4], u.as_slice(), d.as_slice()).unwrap().iter().any(|v| *v != 0.0));
        assert_eq!(ps.drift_checked(&[0.0; 4], &[0.0; 3], &[0.0; 3]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn two_dimensional_drift_example() {
        let ps = problem(2);
        let f = ps.drift_checked(&[1.0, 0.0], &[0.0], &[0.0]).unwrap();
        let mut psi = [0.0; 2];
        ps.psi(&[1.0, 0.0], &mut psi);
        assert!((f[0] - (1.0 + psi[0])).abs() < 1e-15);
        assert!((f[1] - (-1.0 + psi[1])).abs() < 1e-15);
    }

    #[test]
    fn terminal_cost_values() {
        assert_eq!(problem(2).terminal_value(&[0.0, 0.0]), 0.0);
        assert!((problem(2).terminal_value(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn controls_and_tie_breaks() {
        let ps = problem(2);
        assert_eq!(ps.controls(&[1.0, 1.0]), (vec![-1.0], vec![1.0]));
        assert_eq!(ps.controls(&[1.0, 0.0]), (vec![0.0], vec![0.0]));
        assert_eq!(ps.closed_form_hamiltonian(&[0.2, 0.3], &[0.0, 0.0]), 0.0);
        // x = 0: -‖Bᵀp‖₁ + ‖Cᵀp‖₁ = -0.5 |p₁|.
        assert!((ps.closed_form_hamiltonian(&[0.0, 0.0], &[3.0, -2.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_construction() {
        let s = build_anisotropic_sigma(5, 0.1, 0.0, 7).unwrap();
        assert_eq!(s, DMatrix::identity(5, 5) * 0.1);
        let s = build_anisotropic_sigma(5, 0.1, 0.3, 7).unwrap();
        assert_eq!(s, s.transpose());
        assert!((0..5).all(|i| s[(i, i)] == 0.1));
        assert_eq!(s, build_anisotropic_sigma(5, 0.1, 0.3, 7).unwrap());
        assert!(Diffusion::new(s).unwrap().min_eigenvalue() > 0.0);
    }

    #[test]
    fn pair_problem_is_the_two_dimensional_game() {
        let ps = problem(5);
        let pair = ps.pair_problem(3).unwrap();
        assert_eq!(pair.n(), 2);
        assert!(ps.pair_problem(0).is_err() && ps.pair_problem(5).is_err());
    }
}
