use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{TimeGrid, TimeInterp};
use crate::game::{BoxDomain, DifferentialGame};
use crate::{Error, Result};

/// Grid, domains and time stepping of the reference solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdmConfig {
    pub extended: BoxDomain,
    pub target: BoxDomain,
    /// Nodes per axis.
    pub n_x: usize,
    /// Requested number of time steps; `Δt = min(Δx², T / time_steps, stability bound)`.
    #[serde(default)]
    pub time_steps: Option<usize>,
    /// Number of stored time slices including `t = 0` and `t = T`.
    #[serde(default = "default_slices")]
    pub stored_slices: usize,
    #[serde(default)]
    pub time_interp: TimeInterp,
}

fn default_slices() -> usize {
    41
}

/// Blow-up threshold relative to the terminal data scale.
pub const BLOWUP_FACTOR: f64 = 1e6;

impl FdmConfig {
    pub fn path_planning() -> Self {
        FdmConfig {
            extended: BoxDomain::cube(2, -2.0, 2.0),
            target: BoxDomain::cube(2, -1.0, 1.0),
            n_x: 201,
            time_steps: Some(201 * 201),
            stored_slices: default_slices(),
            time_interp: TimeInterp::Linear,
        }
    }

    pub fn pubsub() -> Self {
        FdmConfig {
            extended: BoxDomain::cube(2, -1.5, 1.5),
            target: BoxDomain::cube(2, -0.5, 0.5),
            n_x: 151,
            time_steps: Some(151 * 151),
            stored_slices: default_slices(),
            time_interp: TimeInterp::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.extended.validate()?;
        self.target.validate()?;
        if self.extended.dim() != self.target.dim() || !self.extended.contains_box(&self.target) {
            return Err(Error::Config("fdm target must lie inside the extended domain".into()));
        }
        if self.n_x < 3 || self.stored_slices < 2 || self.time_steps == Some(0) {
            return Err(Error::Config("fdm needs n_x >= 3, stored_slices >= 2 and time_steps > 0".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.extended.lower.iter().zip(&self.extended.upper).map(|(l, u)| (u - l) / (self.n_x - 1) as f64).collect()
    }
}

/// Largest explicit step for which the central scheme is stable: the
/// diffusion limit `1 / (Σ aᵢᵢ/hᵢ² + |a₁₂|/(2h₁h₂))` and, with a nonzero speed
/// bound `L`, the advection limit `λ_min(a) / L²`.
pub fn stability_bound<G: DifferentialGame + ?Sized>(game: &G, grid: &TimeGrid) -> f64 {
    let h = &grid.spacing;
    let mut bound = f64::INFINITY;
    for t in [0.0, game.horizon()] {
        for x in grid.nodes() {
            let diff = game.diffusion(t, &x);
            let a = diff.a_mat();
            let mut s = a[(0, 0)] / (h[0] * h[0]) + a[(1, 1)] / (h[1] * h[1]) + a[(0, 1)].abs() / (2.0 * h[0] * h[1]);
            s = s.max(f64::MIN_POSITIVE);
            bound = bound.min(1.0 / s);
            if let Some(l) = game.hamiltonian_speed_bound(t, &x) {
                if l > 0.0 {
                    bound = bound.min(diff.min_eigenvalue() / (l * l));
                }
            }
        }
    }
    bound
}

#[inline]
fn mirror(i: usize, n: usize) -> (usize, usize) {
    (if i == 0 { 1 } else { i - 1 }, if i + 1 == n { n - 2 } else { i + 1 })
}

/// Central gradient and `(v₀₀, v₀₁, v₁₁)` at node `(i, j)` of an `n × n`
/// slice, reflecting across the boundary for missing neighbours.
#[inline]
pub(crate) fn stencil_2d(v: &[f64], n: usize, h: &[f64], i: usize, j: usize) -> ([f64; 2], [f64; 3]) {
    let (im, ip) = mirror(i, n);
    let (jm, jp) = mirror(j, n);
    let at = |a: usize, b: usize| v[a * n + b];
    let c = at(i, j);
    let grad = [(at(ip, j) - at(im, j)) / (2.0 * h[0]), (at(i, jp) - at(i, jm)) / (2.0 * h[1])];
    let hess = [
        (at(ip, j) - 2.0 * c + at(im, j)) / (h[0] * h[0]),
        (at(ip, jp) - at(ip, jm) - at(im, jp) + at(im, jm)) / (4.0 * h[0] * h[1]),
        (at(i, jp) - 2.0 * c + at(i, jm)) / (h[1] * h[1]),
    ];
    (grad, hess)
}

/// Explicit backward-in-time solve of `∂ₜv + H(t, x, ∇v) + ½ Tr(a D²v) = 0`,
/// `v(T) = g`, on a 2D grid with central differences and mirrored ghost nodes.
pub fn fdm_solve_2d<G: DifferentialGame + ?Sized>(game: &G, config: &FdmConfig) -> Result<TimeGrid> {
    config.validate()?;
    if game.dim() != 2 || config.extended.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: game.dim() });
    }
    let horizon = game.horizon();
    let probe = config.extended.center();
    if game.hamiltonian(horizon, &probe, &[0.0, 0.0]).is_none() {
        return Err(Error::Unsupported(format!("{} has no closed-form Hamiltonian", game.label())));
    }
    let n = config.n_x;
    let spacing = config.spacing();
    let mut grid = TimeGrid { lower: config.extended.lower.clone(), spacing: spacing.clone(), shape: vec![n, n], dt: 0.0, times: Vec::new(), slices: Vec::new() };
    let nodes = grid.nodes();
    let hmin = spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut dt_max = (hmin * hmin).min(stability_bound(game, &grid));
    if let Some(steps) = config.time_steps {
        dt_max = dt_max.min(horizon / steps as f64);
    }
    let stride = (config.stored_slices - 1) as u64;
    let mut steps = (horizon / dt_max).ceil() as u64;
    steps = steps.div_ceil(stride) * stride;
    let per_slice = steps / stride;
    let dt = horizon / steps as f64;
    grid.dt = dt;

    let mut v: Vec<f64> = nodes.iter().map(|x| game.terminal_value(x)).collect();
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut next = vec![0.0; v.len()];
    let mut times = vec![horizon];
    let mut slices = vec![v.clone()];
    for k in 0..steps {
        let t = horizon * (1.0 - k as f64 / steps as f64);
        let cur = &v;
        next.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, out) in row.iter_mut().enumerate() {
                let flat = i * n + j;
                let x = &nodes[flat];
                let (p, hess) = stencil_2d(cur, n, &spacing, i, j);
                let a = game.diffusion(t, x);
                let a = a.a_mat();
                let diff = a[(0, 0)] * hess[0] + 2.0 * a[(0, 1)] * hess[1] + a[(1, 1)] * hess[2];
                let h = game.hamiltonian(t, x, &p).unwrap_or(f64::NAN);
                *out = cur[flat] + dt * (h + 0.5 * diff);
            }
        });
        std::mem::swap(&mut v, &mut next);
        let t_next = horizon * (1.0 - (k + 1) as f64 / steps as f64);
        let max_abs = v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) });
        if !(max_abs <= BLOWUP_FACTOR * scale) {
            return Err(Error::Unstable { t: t_next, max_abs });
        }
        if (k + 1) % per_slice == 0 {
            times.push(if k + 1 == steps { 0.0 } else { t_next });
            slices.push(v.clone());
        }
    }
    times.reverse();
    slices.reverse();
    grid.times = times;
    grid.slices = slices;
    Ok(grid)
}
