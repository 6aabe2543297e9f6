use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::collocation::{sample_collocation, sample_with, CollocationBatch};
use super::policy::{FrozenPolicy, InitialPolicy, PolicySnapshot};
use super::residual::{residuals_batch, DirectResidual, FrozenPolicyResidual, TerminalPenalty};
use super::selector::SelectorMode;
use crate::game::{BoxDomain, DifferentialGame};
use crate::net::{loss_and_gradient, AdamConfig, AdamState, NetworkArch, NetworkState, Representation, ResidualModel, DEFAULT_CHUNK};
use crate::seed::derive_seed;
use crate::{Error, Result};

const TAG_INIT: u64 = 1;
const TAG_POLICY: u64 = 2;
const TAG_VALIDATION: u64 = 3;
const TAG_COLLOCATION: u64 = 4;
const TAG_RESIDUAL: u64 = 5;
const TAG_DIRECT: u64 = 6;

/// Training settings shared by policy iteration and the direct baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Adam epochs per policy evaluation (`E`).
    pub epochs: usize,
    /// Maximum number of outer iterations (`M`).
    pub outer_iterations: usize,
    pub resample_interval: usize,
    /// Stop once the validation sup-norm change drops below this.
    pub tol: f64,
    pub adam: AdamConfig,
    pub n_collocation: usize,
    /// Terminal points per batch; only used by the plain representation.
    pub n_terminal: usize,
    pub validation_size: usize,
    pub seed: u64,
    pub representation: Representation,
    pub hidden: Vec<usize>,
    pub selector: SelectorMode,
    pub initial_policy: InitialPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            outer_iterations: 1000,
            resample_interval: 100,
            tol: 1e-4,
            adam: AdamConfig::default(),
            n_collocation: 2000,
            n_terminal: 500,
            validation_size: 2048,
            seed: 0,
            representation: Representation::Ansatz,
            hidden: vec![64; 4],
            selector: SelectorMode::ClosedForm,
            initial_policy: InitialPolicy::Uniform,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.outer_iterations == 0 || self.n_collocation == 0 || self.resample_interval == 0 {
            return Err(Error::Config("epochs, outer_iterations, n_collocation and resample_interval must be positive".into()));
        }
        if self.validation_size == 0 {
            return Err(Error::Config("validation_size must be positive".into()));
        }
        if self.representation == Representation::Plain && self.n_terminal == 0 {
            return Err(Error::Config("the plain representation needs terminal points".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::Config("tol must be >= 0".into()));
        }
        if let SelectorMode::Numeric(m) = &self.selector {
            m.validate()?;
        }
        self.adam.validate()?;
        NetworkArch::new(1, self.hidden.clone()).map(|_| ())
    }

    fn terminal_points(&self) -> usize {
        match self.representation {
            Representation::Ansatz => 0,
            Representation::Plain => self.n_terminal,
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub losses: Vec<f64>,
    /// Monte Carlo `L²` norm of the frozen-policy residual over the target domain.
    pub p_n: f64,
    pub p_n_stderr: f64,
    /// Validation sup-norm change from the previous iterate.
    pub sup_diff: f64,
    pub wall_time_s: f64,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationHistory {
    pub records: Vec<IterationRecord>,
}

impl IterationHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sup_diffs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sup_diff).collect()
    }

    /// CSV with columns `iteration,epoch,loss,p_n,sup_diff`; the per-iteration
    /// quantities repeat on every epoch row.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,epoch,loss,p_n,sup_diff")?;
        for r in &self.records {
            for (e, l) in r.losses.iter().enumerate() {
                writeln!(w, "{},{},{:e},{:e},{:e}", r.iteration, e, l, r.p_n, r.sup_diff)?;
            }
        }
        Ok(())
    }
}

fn sampling_batch<G: DifferentialGame + ?Sized>(game: &G, config: &TrainConfig, seed: u64) -> Result<CollocationBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(&game.sampling_domain(), game.horizon(), config.n_collocation, config.terminal_points(), &mut rng)
}

fn epoch_step<G: DifferentialGame + ?Sized, R: ResidualModel>(
    state: &mut NetworkState,
    adam: &mut AdamState,
    game: &G,
    config: &TrainConfig,
    batch: &CollocationBatch,
    interior: &R,
    epoch: usize,
) -> Result<f64> {
    let repr = config.representation;
    let tag = |e: Error| Error::NonFinite(format!("epoch {epoch}: {e}"));
    let (mut loss, mut grad) = loss_and_gradient(state, game, repr, &batch.t, &batch.x, interior).map_err(tag)?;
    if repr == Representation::Plain {
        let tk = vec![game.horizon(); batch.terminal_len()];
        let (lt, gt) = loss_and_gradient(state, game, repr, &tk, &batch.terminal_x, &TerminalPenalty { game }).map_err(tag)?;
        loss += lt;
        grad.iter_mut().zip(&gt).for_each(|(a, b)| *a += b);
    }
    adam.step(&mut state.params, &grad)?;
    if !state.is_finite() {
        return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
    }
    Ok(loss)
}

/// `epochs` Adam steps on the mean squared frozen-policy residual, drawing a
/// fresh batch every `resample_interval` epochs. Returns the loss before each step.
pub fn train_policy_evaluation<G: DifferentialGame + ?Sized>(
    state: &mut NetworkState,
    adam: &mut AdamState,
    snapshot: &PolicySnapshot,
    config: &TrainConfig,
    game: &G,
    stream: u64,
) -> Result<Vec<f64>> {
    let mut losses = Vec::with_capacity(config.epochs);
    let mut current: Option<(CollocationBatch, FrozenPolicy)> = None;
    for epoch in 0..config.epochs {
        if epoch % config.resample_interval == 0 || current.is_none() {
            let k = (epoch / config.resample_interval) as u64;
            let batch = sampling_batch(game, config, derive_seed(config.seed, &[TAG_COLLOCATION, stream, k]))?;
            let frozen = FrozenPolicy::tabulate(snapshot, game, &batch)?;
            current = Some((batch, frozen));
        }
        let (batch, frozen) = current.as_ref().expect("batch drawn above");
        losses.push(epoch_step(state, adam, game, config, batch, &FrozenPolicyResidual { policy: frozen }, epoch)?);
    }
    Ok(losses)
}

/// Value predictions at a batch of points.
pub fn predict_values<G: DifferentialGame + ?Sized>(state: &NetworkState, game: &G, repr: Representation, t: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let d = game.dim();
    if state.arch.state_dim != d || x.len() != t.len() * d {
        return Err(Error::Dimension { expected: t.len() * d, got: x.len() });
    }
    let horizon = game.horizon();
    let parts: Vec<Vec<f64>> = t
        .par_chunks(DEFAULT_CHUNK)
        .zip(x.par_chunks(DEFAULT_CHUNK * d))
        .map(|(tc, xc)| {
            tc.iter()
                .zip(xc.chunks(d))
                .map(|(&ti, xi)| match repr {
                    Representation::Ansatz => state.ansatz_value(ti, xi, game.terminal_value(xi), horizon),
                    Representation::Plain => state.forward(ti, xi),
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// `max_j |v_a(t_j, x_j) - v_b(t_j, x_j)|` over the validation points.
pub fn estimate_sup_norm_diff<G: DifferentialGame + ?Sized>(
    state_a: &NetworkState,
    state_b: &NetworkState,
    game: &G,
    repr: Representation,
    validation: &CollocationBatch,
) -> Result<f64> {
    if validation.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let va = predict_values(state_a, game, repr, &validation.t, &validation.x)?;
    let vb = predict_values(state_b, game, repr, &validation.t, &validation.x)?;
    Ok(va.iter().zip(&vb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn volume(domain: &BoxDomain, horizon: f64) -> f64 {
    domain.lower.iter().zip(&domain.upper).map(|(l, u)| u - l).product::<f64>() * horizon
}

/// Monte Carlo estimate of `‖R‖₂` over `[0, T) × target` for the residual
/// under `snapshot`, with its standard error (delta method).
pub fn empirical_residual_norm<G: DifferentialGame + ?Sized>(
    state: &NetworkState,
    repr: Representation,
    snapshot: &PolicySnapshot,
    game: &G,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let domain = game.target_domain();
    let batch = sample_collocation(&domain, game.horizon(), n, seed)?;
    let frozen = FrozenPolicy::tabulate(snapshot, game, &batch)?;
    let r = residuals_batch(state, repr, &batch, &frozen, game)?;
    let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
    let nf = n as f64;
    let mean = sq.iter().sum::<f64>() / nf;
    let var = if n > 1 { sq.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
    let vol = volume(&domain, game.horizon());
    let p = (vol * mean).sqrt();
    let se_mean = (var / nf).sqrt();
    let se = if p > 0.0 { vol * se_mean / (2.0 * p) } else { 0.0 };
    Ok((p, se))
}

/// Network, optimizer and validation set after `run_policy_iteration`.
#[derive(Debug, Clone)]
pub struct PolicyIterationResult {
    pub state: NetworkState,
    pub initial: NetworkState,
    pub history: IterationHistory,
}

pub fn initial_network<G: DifferentialGame + ?Sized>(game: &G, config: &TrainConfig) -> Result<NetworkState> {
    let arch = NetworkArch::new(game.dim(), config.hidden.clone())?;
    Ok(NetworkState::xavier(arch, derive_seed(config.seed, &[TAG_INIT])))
}

pub fn validation_set<G: DifferentialGame + ?Sized>(game: &G, config: &TrainConfig) -> Result<CollocationBatch> {
    sample_collocation(&game.target_domain(), game.horizon(), config.validation_size, derive_seed(config.seed, &[TAG_VALIDATION]))
}

pub fn run_policy_iteration<G: DifferentialGame + ?Sized>(game: &G, config: &TrainConfig) -> Result<PolicyIterationResult> {
    run_policy_iteration_with(game, config, |_, _| Ok(None))
}

/// Policy iteration with a callback after every outer iteration; the callback
/// may persist the iterate and return the checkpoint path.
pub fn run_policy_iteration_with<G, F>(game: &G, config: &TrainConfig, mut on_iteration: F) -> Result<PolicyIterationResult>
where
    G: DifferentialGame + ?Sized,
    F: FnMut(&IterationRecord, &NetworkState) -> Result<Option<PathBuf>>,
{
    config.validate()?;
    let repr = config.representation;
    let mut state = initial_network(game, config)?;
    let initial = state.clone();
    let mut adam = AdamState::new(config.adam, state.params.len());
    let validation = validation_set(game, config)?;
    let mut snapshot = PolicySnapshot::initial(game, config.initial_policy, &state, repr, config.selector, derive_seed(config.seed, &[TAG_POLICY]))?;
    let mut previous = state.clone();
    let mut history = IterationHistory::default();
    for n in 0..config.outer_iterations {
        let start = Instant::now();
        let losses = train_policy_evaluation(&mut state, &mut adam, &snapshot, config, game, n as u64)?;
        let (p_n, p_n_stderr) = empirical_residual_norm(&state, repr, &snapshot, game, config.validation_size, derive_seed(config.seed, &[TAG_RESIDUAL, n as u64]))?;
        let sup_diff = estimate_sup_norm_diff(&state, &previous, game, repr, &validation)?;
        let mut record = IterationRecord { iteration: n, losses, p_n, p_n_stderr, sup_diff, wall_time_s: start.elapsed().as_secs_f64(), checkpoint: None };
        record.checkpoint = on_iteration(&record, &state)?;
        history.records.push(record);
        previous.clone_from(&state);
        snapshot = PolicySnapshot::from_network(state.clone(), repr, config.selector);
        if n >= 1 && sup_diff < config.tol {
            break;
        }
    }
    Ok(PolicyIterationResult { state, initial, history })
}

/// Baseline that puts the closed-form Hamiltonian directly into the loss and
/// trains for `E × M` epochs on the same resampling schedule.
pub fn direct_pinn_train<G: DifferentialGame + ?Sized>(game: &G, config: &TrainConfig) -> Result<(NetworkState, Vec<f64>)> {
    config.validate()?;
    let probe_x = game.sampling_domain().center();
    let probe_p = vec![0.0; game.dim()];
    if game.hamiltonian(0.0, &probe_x, &probe_p).is_none() || game.optimal_controls(0.0, &probe_x, &probe_p).is_none() {
        return Err(Error::Unsupported(format!("{} has no closed-form Hamiltonian", game.label())));
    }
    let mut state = initial_network(game, config)?;
    let mut adam = AdamState::new(config.adam, state.params.len());
    let total = config.epochs * config.outer_iterations;
    let mut losses = Vec::with_capacity(total);
    let model = DirectResidual { game };
    let mut batch: Option<CollocationBatch> = None;
    for epoch in 0..total {
        if epoch % config.resample_interval == 0 || batch.is_none() {
            let k = (epoch / config.resample_interval) as u64;
            batch = Some(sampling_batch(game, config, derive_seed(config.seed, &[TAG_DIRECT, k]))?);
        }
        let b = batch.as_ref().expect("batch drawn above");
        losses.push(epoch_step(&mut state, &mut adam, game, config, b, &model, epoch)?);
    }
    Ok((state, losses))
}
