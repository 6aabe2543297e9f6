use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::collocation::CollocationBatch;
use super::selector::{select_controls, SelectorMode};
use crate::game::DifferentialGame;
use crate::net::{value_jet, value_jets, NetworkState, Representation, DEFAULT_CHUNK};
use crate::{Error, Result};

/// How the first policy of an iteration is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialPolicy {
    /// A constant control pair drawn uniformly from `A × B`.
    #[default]
    Uniform,
    /// The centres of `A` and `B`.
    Zero,
    /// Minimax feedback of the freshly initialized network.
    Network,
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Constant { a: Vec<f64>, b: Vec<f64> },
    Network { state: NetworkState, repr: Representation },
}

/// An immutable feedback policy: either constant controls or the minimax
/// feedback of a frozen value network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySnapshot {
    source: Source,
    pub mode: SelectorMode,
}

impl PolicySnapshot {
    pub fn constant<G: DifferentialGame + ?Sized>(game: &G, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if !game.control_set_a().contains(&a, 1e-12) {
            return Err(Error::Inadmissible("a"));
        }
        if !game.control_set_b().contains(&b, 1e-12) {
            return Err(Error::Inadmissible("b"));
        }
        Ok(PolicySnapshot { source: Source::Constant { a, b }, mode: SelectorMode::ClosedForm })
    }

    pub fn initial<G: DifferentialGame + ?Sized>(game: &G, kind: InitialPolicy, state: &NetworkState, repr: Representation, mode: SelectorMode, seed: u64) -> Result<Self> {
        match kind {
            InitialPolicy::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = game.control_set_a().sample_uniform(&mut rng);
                let b = game.control_set_b().sample_uniform(&mut rng);
                Self::constant(game, a, b)
            }
            InitialPolicy::Zero => Self::constant(game, game.control_set_a().center(), game.control_set_b().center()),
            InitialPolicy::Network => Ok(Self::from_network(state.clone(), repr, mode)),
        }
    }

    pub fn from_network(state: NetworkState, repr: Representation, mode: SelectorMode) -> Self {
        PolicySnapshot { source: Source::Network { state, repr }, mode }
    }

    pub fn network(&self) -> Option<&NetworkState> {
        match &self.source {
            Source::Network { state, .. } => Some(state),
            Source::Constant { .. } => None,
        }
    }

    /// Controls at every point of the batch.
    pub fn controls_batch<G: DifferentialGame + ?Sized>(&self, game: &G, t: &[f64], x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = game.dim();
        let (ma, mb) = (game.control_set_a().dim(), game.control_set_b().dim());
        match &self.source {
            Source::Constant { a, b } => Ok((a.repeat(t.len()), b.repeat(t.len()))),
            Source::Network { state, repr } => {
                let jets = value_jets(state, game, *repr, t, x)?;
                let parts: Vec<Result<(Vec<f64>, Vec<f64>)>> = jets
                    .par_chunks(DEFAULT_CHUNK)
                    .enumerate()
                    .map(|(ci, chunk)| {
                        let mut ac = Vec::with_capacity(chunk.len() * ma);
                        let mut bc = Vec::with_capacity(chunk.len() * mb);
                        for (j, jet) in chunk.iter().enumerate() {
                            let i = ci * DEFAULT_CHUNK + j;
                            let out = select_controls(game, &self.mode, t[i], &x[i * d..(i + 1) * d], &jet.grad_x)?;
                            ac.extend_from_slice(&out.a);
                            bc.extend_from_slice(&out.b);
                        }
                        Ok((ac, bc))
                    })
                    .collect();
                let mut a = Vec::with_capacity(t.len() * ma);
                let mut b = Vec::with_capacity(t.len() * mb);
                for p in parts {
                    let (ac, bc) = p?;
                    a.extend(ac);
                    b.extend(bc);
                }
                Ok((a, b))
            }
        }
    }
}

/// Minimax controls at `(t, x)` for the co-state `∇ₓv` of the snapshot.
pub fn policy_improvement<G: DifferentialGame + ?Sized>(snapshot: &PolicySnapshot, t: f64, x: &[f64], game: &G) -> Result<(Vec<f64>, Vec<f64>)> {
    match &snapshot.source {
        Source::Constant { a, b } => Ok((a.clone(), b.clone())),
        Source::Network { state, repr } => {
            let p = match repr {
                Representation::Ansatz => value_jet(state, t, x, &game.diffusion(t, x), &game.terminal(x), game.horizon())?.grad_x,
                Representation::Plain => value_jets(state, game, *repr, &[t], x)?.remove(0).grad_x,
            };
            let out = select_controls(game, &snapshot.mode, t, x, &p)?;
            Ok((out.a, out.b))
        }
    }
}

/// Frozen policy tabulated on a collocation batch: running cost `c_j` and
/// drift `f_j` at each point.
#[derive(Debug, Clone)]
pub struct FrozenPolicy {
    pub dim: usize,
    pub cost: Vec<f64>,
    pub drift: Vec<f64>,
}

impl FrozenPolicy {
    pub fn tabulate<G: DifferentialGame + ?Sized>(snapshot: &PolicySnapshot, game: &G, batch: &CollocationBatch) -> Result<Self> {
        let d = game.dim();
        let (a, b) = snapshot.controls_batch(game, &batch.t, &batch.x)?;
        let (ma, mb) = (game.control_set_a().dim(), game.control_set_b().dim());
        let n = batch.len();
        let mut cost = vec![0.0; n];
        let mut drift = vec![0.0; n * d];
        cost.par_chunks_mut(DEFAULT_CHUNK).zip(drift.par_chunks_mut(DEFAULT_CHUNK * d)).enumerate().for_each(|(ci, (cc, fc))| {
            for j in 0..cc.len() {
                let i = ci * DEFAULT_CHUNK + j;
                let (t, x) = batch.point(i);
                let (aj, bj) = (&a[i * ma..(i + 1) * ma], &b[i * mb..(i + 1) * mb]);
                cc[j] = game.running_cost(t, x, aj, bj);
                game.drift(t, x, aj, bj, &mut fc[j * d..(j + 1) * d]);
            }
        });
        Ok(FrozenPolicy { dim: d, cost, drift })
    }
}
