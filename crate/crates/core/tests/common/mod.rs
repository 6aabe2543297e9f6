//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use viscous_hji::game::{lagrangian, DifferentialGame};
use viscous_hji::net::NetworkState;

/// Ansatz value via the plain scalar forward pass.
pub fn ansatz<G: DifferentialGame + ?Sized>(state: &NetworkState, game: &G, t: f64, x: &[f64]) -> f64 {
    game.terminal_value(x) + (game.horizon() - t) * state.forward(t, x)
}

/// Central-difference gradient of the ansatz in `x`.
pub fn fd_gradient<G: DifferentialGame + ?Sized>(state: &NetworkState, game: &G, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let up = ansatz(state, game, t, &xp);
            xp[i] = x[i] - h;
            let dn = ansatz(state, game, t, &xp);
            xp[i] = x[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

pub fn fd_time<G: DifferentialGame + ?Sized>(state: &NetworkState, game: &G, t: f64, x: &[f64], h: f64) -> f64 {
    (ansatz(state, game, t + h, x) - ansatz(state, game, t - h, x)) / (2.0 * h)
}

/// `Tr(a D²v)` from second-order central differences of the full Hessian.
pub fn fd_diffusion<G: DifferentialGame + ?Sized>(state: &NetworkState, game: &G, t: f64, x: &[f64], h: f64) -> f64 {
    let d = x.len();
    let a = game.diffusion(t, x).a_mat().clone();
    let f = |y: &[f64]| ansatz(state, game, t, y);
    let mut total = 0.0;
    let mut y = x.to_vec();
    let v0 = f(x);
    for i in 0..d {
        for j in 0..d {
            let hij = if i == j {
                y[i] = x[i] + h;
                let up = f(&y);
                y[i] = x[i] - h;
                let dn = f(&y);
                y[i] = x[i];
                (up - 2.0 * v0 + dn) / (h * h)
            } else {
                let mut acc = 0.0;
                for (si, sj, sgn) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    y[i] = x[i] + si * h;
                    y[j] = x[j] + sj * h;
                    acc += sgn * f(&y);
                }
                y[i] = x[i];
                y[j] = x[j];
                acc / (4.0 * h * h)
            };
            total += a[(i, j)] * hij;
        }
    }
    total
}

/// `sup_b inf_a L` over projected tensor grids of both control sets, searching
/// every pair.
pub fn brute_force_sup_inf<G: DifferentialGame + ?Sized>(game: &G, t: f64, x: &[f64], p: &[f64], n: usize) -> f64 {
    let ga = game.control_set_a().grid(n);
    let gb = game.control_set_b().grid(n);
    gb.iter()
        .map(|b| ga.iter().map(|a| lagrangian(game, t, x, p, a, b).unwrap()).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// True if `L(a, b) - L(a, b0) - L(a0, b) + L(a0, b0)` vanishes on the grids,
/// i.e. `L` splits into a sum of a function of `a` and one of `b`.
pub fn is_separable<G: DifferentialGame + ?Sized>(game: &G, t: f64, x: &[f64], p: &[f64], n: usize) -> bool {
    let ga = game.control_set_a().grid(n);
    let gb = game.control_set_b().grid(n);
    let (a0, b0) = (&ga[0], &gb[0]);
    let l00 = lagrangian(game, t, x, p, a0, b0).unwrap();
    ga.iter().step_by(7).all(|a| {
        gb.iter().step_by(5).all(|b| {
            let mix = lagrangian(game, t, x, p, a, b).unwrap() - lagrangian(game, t, x, p, a, b0).unwrap()
                - lagrangian(game, t, x, p, a0, b).unwrap()
                + l00;
            mix.abs() < 1e-9
        })
    })
}

/// Brute force for separable Lagrangians: with `L = F(a) + G(b)`,
/// `sup_b inf_a L = inf_a L(a, b0) + sup_b L(a0, b) - L(a0, b0)`.
pub fn brute_force_separable<G: DifferentialGame + ?Sized>(game: &G, t: f64, x: &[f64], p: &[f64], n: usize) -> f64 {
    let ga = game.control_set_a().grid(n);
    let gb = game.control_set_b().grid(n);
    let (a0, b0) = (&ga[0], &gb[0]);
    let inf_a = ga.iter().map(|a| lagrangian(game, t, x, p, a, b0).unwrap()).fold(f64::INFINITY, f64::min);
    let sup_b = gb.iter().map(|b| lagrangian(game, t, x, p, a0, b).unwrap()).fold(f64::NEG_INFINITY, f64::max);
    inf_a + sup_b - lagrangian(game, t, x, p, a0, b0).unwrap()
}

/// Argmin / argmax of the separable brute force.
pub fn brute_force_controls<G: DifferentialGame + ?Sized>(game: &G, t: f64, x: &[f64], p: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let ga = game.control_set_a().grid(n);
    let gb = game.control_set_b().grid(n);
    let (a0, b0) = (ga[0].clone(), gb[0].clone());
    let a = ga
        .iter()
        .min_by(|u, v| lagrangian(game, t, x, p, u, &b0).unwrap().total_cmp(&lagrangian(game, t, x, p, v, &b0).unwrap()))
        .unwrap()
        .clone();
    let b = gb
        .iter()
        .max_by(|u, v| lagrangian(game, t, x, p, &a0, u).unwrap().total_cmp(&lagrangian(game, t, x, p, &a0, v).unwrap()))
        .unwrap()
        .clone();
    (a, b)
}
