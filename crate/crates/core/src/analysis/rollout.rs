use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::game::DifferentialGame;
use crate::net::{value_jets, NetworkState, Representation};
use crate::pinn::{select_controls, SelectorMode};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Feedback `(t, x) ↦ (a, b)`.
pub trait FeedbackPolicy: Sync {
    fn controls(&self, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
}

impl<F> FeedbackPolicy for F
where
    F: Fn(f64, &[f64]) -> Result<(Vec<f64>, Vec<f64>)> + Sync,
{
    fn controls(&self, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self(t, x)
    }
}

/// Disturbance used during rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disturbance {
    /// The maximizing feedback `b*`.
    #[default]
    Adversarial,
    /// The centre of `B` (zero for the benchmarks).
    Zero,
}

/// Minimax feedback derived from the gradient of a trained value network.
pub struct LearnedPolicy<'a, G: ?Sized> {
    pub game: &'a G,
    pub state: &'a NetworkState,
    pub repr: Representation,
    pub mode: SelectorMode,
    pub disturbance: Disturbance,
}

impl<G: DifferentialGame + ?Sized> FeedbackPolicy for LearnedPolicy<'_, G> {
    fn controls(&self, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let t = t.min(self.game.horizon());
        let jet = value_jets(self.state, self.game, self.repr, &[t], x)?.remove(0);
        let out = select_controls(self.game, &self.mode, t, x, &jet.grad_x)?;
        let b = match self.disturbance {
            Disturbance::Adversarial => out.b,
            Disturbance::Zero => self.game.control_set_b().center(),
        };
        Ok((out.a, b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path_id: usize,
    pub dim: usize,
    pub t: Vec<f64>,
    /// Row-major `(steps + 1) × dim`.
    pub x: Vec<f64>,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.t.len() - 1)
    }
}

/// `X_{k+1} = X_k + f(t_k, X_k, a_k, b_k) Δt + σ(t_k, X_k) √Δt ξ_k` from `t = 0`.
pub fn euler_maruyama<G: DifferentialGame + ?Sized, P: FeedbackPolicy + ?Sized>(
    game: &G,
    policy: &P,
    x0: &[f64],
    dt: f64,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let d = game.dim();
    if x0.len() != d {
        return Err(Error::Dimension { expected: d, got: x0.len() });
    }
    if !(dt > 0.0) {
        return Err(Error::Config("time step must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::with_capacity(steps + 1);
    let mut x = Vec::with_capacity((steps + 1) * d);
    t.push(0.0);
    x.extend_from_slice(x0);
    let mut cur = x0.to_vec();
    let mut f = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let sq = dt.sqrt();
    for k in 0..steps {
        let tk = k as f64 * dt;
        let (a, b) = policy.controls(tk, &cur)?;
        game.drift(tk, &cur, &a, &b, &mut f);
        xi.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        let sigma = game.diffusion(tk, &cur).sigma().clone();
        let noise = &sigma * nalgebra::DVector::from_column_slice(&xi);
        for i in 0..d {
            cur[i] += f[i] * dt + sq * noise[i];
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("trajectory state at step {}", k + 1)));
        }
        t.push((k + 1) as f64 * dt);
        x.extend_from_slice(&cur);
    }
    Ok(Trajectory { path_id: 0, dim: d, t, x })
}

/// Independent rollouts from each start point; path `i` uses a sub-seed
/// derived from `(seed, i)`, so results do not depend on the worker count.
pub fn simulate_paths<G: DifferentialGame + ?Sized, P: FeedbackPolicy + ?Sized>(
    game: &G,
    policy: &P,
    starts: &[Vec<f64>],
    dt: f64,
    steps: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut tr = euler_maruyama(game, policy, x0, dt, steps, derive_seed(seed, &[i as u64]))?;
            tr.path_id = i;
            Ok(tr)
        })
        .collect()
}
