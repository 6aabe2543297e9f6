//! Pointwise minimax feedback selection.

use std::cell::{Cell, RefCell};

use serde::{Deserialize, Serialize};

use crate::game::{lagrangian_unchecked, ControlSet, DifferentialGame};
use crate::{Error, Result};

/// Settings for the numeric selector used when no closed form is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxConfig {
    /// Initial trial step; adapted by backtracking.
    pub step: f64,
    pub max_iterations: usize,
    /// Stop when an iterate moves less than this.
    pub tolerance: f64,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        MinimaxConfig { step: 0.05, max_iterations: 200, tolerance: 1e-6 }
    }
}

impl MinimaxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || self.max_iterations == 0 || !(self.tolerance > 0.0) {
            return Err(Error::Config("minimax needs step > 0, max_iterations > 0, tolerance > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SelectorMode {
    #[default]
    ClosedForm,
    Numeric(MinimaxConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorOutcome {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Minimax controls at `(t, x)` for the co-state `p`.
pub fn select_controls<G: DifferentialGame + ?Sized>(game: &G, mode: &SelectorMode, t: f64, x: &[f64], p: &[f64]) -> Result<SelectorOutcome> {
    match mode {
        SelectorMode::ClosedForm => {
            let (a, b) = game
                .optimal_controls(t, x, p)
                .ok_or_else(|| Error::Unsupported(format!("{} has no closed-form selector", game.label())))?;
            Ok(SelectorOutcome { a, b, converged: true, iterations: 0 })
        }
        SelectorMode::Numeric(cfg) => Ok(numeric_minimax(game, cfg, t, x, p)),
    }
}

const ARMIJO_MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e8;

/// Projected gradient with backtracking on a smooth function over a convex set.
/// `sign = 1` minimizes, `sign = -1` maximizes. Returns the final iterate,
/// whether it converged, and the iteration count.
fn projected_search<F, G>(set: &ControlSet, start: Vec<f64>, sign: f64, cfg: &MinimaxConfig, mut value: F, mut grad: G) -> (Vec<f64>, bool, usize)
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64], &mut [f64]),
{
    let m = start.len();
    let mut z = start;
    set.project(&mut z);
    let mut fz = sign * value(&z);
    let mut g = vec![0.0; m];
    let mut step = cfg.step;
    for it in 1..=cfg.max_iterations {
        grad(&z, &mut g);
        g.iter_mut().for_each(|v| *v *= sign);
        let mut trial = step;
        loop {
            let mut cand: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - trial * gi).collect();
            set.project(&mut cand);
            let diff: Vec<f64> = cand.iter().zip(&z).map(|(c, zi)| c - zi).collect();
            let moved = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
            if moved < cfg.tolerance {
                return (z, true, it);
            }
            let fc = sign * value(&cand);
            let model = fz + g.iter().zip(&diff).map(|(a, b)| a * b).sum::<f64>() + moved * moved / (2.0 * trial);
            if fc <= model + 1e-15 * fz.abs() {
                z = cand;
                fz = fc;
                // Grow after an accepted first trial, so linear objectives reach the boundary quickly.
                step = if trial == step { (2.0 * trial).min(MAX_STEP) } else { trial };
                break;
            }
            trial *= 0.5;
            if trial < ARMIJO_MIN_STEP {
                return (z, false, it);
            }
        }
    }
    (z, false, cfg.max_iterations)
}

fn inner_argmin<G: DifferentialGame + ?Sized>(game: &G, cfg: &MinimaxConfig, t: f64, x: &[f64], p: &[f64], b: &[f64], start: &[f64]) -> (Vec<f64>, bool) {
    let mut gb = vec![0.0; b.len()];
    let (a, conv, _) = projected_search(
        game.control_set_a(),
        start.to_vec(),
        1.0,
        cfg,
        |a| lagrangian_unchecked(game, t, x, p, a, b),
        |a, ga| game.lagrangian_control_grad(t, x, p, a, b, ga, &mut gb),
    );
    (a, conv)
}

/// Two-stage selector: `α_b = argmin_a L(a, b)` for each trial `b`, then
/// `β = argmax_b L(α_b, b)`, using `∇_b L(α_b, b)` as the gradient of the
/// outer objective. Both stages are projected-gradient searches with backtracking.
pub fn numeric_minimax<G: DifferentialGame + ?Sized>(game: &G, cfg: &MinimaxConfig, t: f64, x: &[f64], p: &[f64]) -> SelectorOutcome {
    let ma = game.control_set_a().dim();
    let warm = RefCell::new(game.control_set_a().center());
    let inner_ok = Cell::new(true);
    let respond = |b: &[f64]| {
        let (a, conv) = inner_argmin(game, cfg, t, x, p, b, &warm.borrow());
        inner_ok.set(inner_ok.get() && conv);
        warm.replace(a.clone());
        a
    };
    let (b, outer_conv, iterations) = projected_search(
        game.control_set_b(),
        game.control_set_b().center(),
        -1.0,
        cfg,
        |b| lagrangian_unchecked(game, t, x, p, &respond(b), b),
        |b, gb| {
            let mut ga = vec![0.0; ma];
            game.lagrangian_control_grad(t, x, p, &respond(b), b, &mut ga, gb);
        },
    );
    let a = respond(&b);
    SelectorOutcome { a, b, converged: outer_conv && inner_ok.get(), iterations }
}
