mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viscous_hji::game::{DifferentialGame, PubSubParams, PubSubProblem};
use viscous_hji::net::{
    loss_and_gradient, value_jet, value_jets, JetSensitivity, NetworkArch, NetworkState, Representation, ResidualModel,
    ValueJet,
};

fn anisotropic_game() -> PubSubProblem {
    PubSubProblem::new(PubSubParams { dimension: 3, epsilon_aniso: 0.3, sigma_seed: 4, ..Default::default() }).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-2)
}

#[test]
fn jets_match_finite_differences() {
    let game = anisotropic_game();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for net_seed in 0..3 {
        let state = NetworkState::xavier(NetworkArch::new(3, vec![12, 10, 8]).unwrap(), net_seed);
        for _ in 0..30 {
            let t = rng.random_range(0.05..0.45);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jet = value_jet(&state, t, &x, &game.diffusion(t, &x), &game.terminal(&x), game.horizon()).unwrap();
            assert!((jet.v - common::ansatz(&state, &game, t, &x)).abs() < 1e-12);
            let fd = common::fd_gradient(&state, &game, t, &x, 1e-4);
            for i in 0..3 {
                assert!(rel(jet.grad_x[i], fd[i]) < 1e-6, "grad {} vs {}", jet.grad_x[i], fd[i]);
            }
            let fdt = common::fd_time(&state, &game, t, &x, 1e-4);
            assert!(rel(jet.dv_dt, fdt) < 1e-6);
            let fdd = common::fd_diffusion(&state, &game, t, &x, 1e-3);
            assert!(rel(jet.diff_contract, fdd) < 1e-4, "diff {} vs {}", jet.diff_contract, fdd);
        }
    }
}

#[test]
fn zero_network_reduces_to_terminal_cost() {
    let game = anisotropic_game();
    let state = NetworkState::zeros(NetworkArch::new(3, vec![6]).unwrap());
    let x = [0.3, -0.4, 0.8];
    let jet = value_jet(&state, 0.2, &x, &game.diffusion(0.2, &x), &game.terminal(&x), 0.5).unwrap();
    let g = game.terminal(&x);
    assert_eq!(jet.dv_dt, 0.0);
    for i in 0..3 {
        assert!((jet.grad_x[i] - g.grad[i]).abs() < 1e-14);
    }
    let expect = game.diffusion(0.2, &x).contract(&g.hess);
    assert!((jet.diff_contract - expect).abs() < 1e-14);
}

#[test]
fn batched_and_single_point_jets_agree() {
    let game = anisotropic_game();
    let state = NetworkState::xavier(NetworkArch::new(3, vec![7, 7]).unwrap(), 9);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 600;
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.5)).collect();
    let x: Vec<f64> = (0..3 * n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let jets = value_jets(&state, &game, Representation::Ansatz, &t, &x).unwrap();
    for j in [0, 249, 250, 599] {
        let xj = &x[3 * j..3 * j + 3];
        let single = value_jet(&state, t[j], xj, &game.diffusion(t[j], xj), &game.terminal(xj), 0.5).unwrap();
        assert!((jets[j].v - single.v).abs() < 1e-13);
        assert!((jets[j].diff_contract - single.diff_contract).abs() < 1e-12);
    }
}

/// A nonlinear residual touching every jet field.
struct Nonlinear;

impl ResidualModel for Nonlinear {
    fn residual(&self, _i: usize, t: f64, x: &[f64], jet: &ValueJet, sens: &mut JetSensitivity) -> f64 {
        let p2: f64 = jet.grad_x.iter().map(|v| v * v).sum();
        sens.v = 0.3 * jet.v.cos();
        sens.dt = 1.0;
        for i in 0..x.len() {
            sens.grad[i] = x[i] + 0.2 * jet.grad_x[i];
        }
        sens.diff = 0.5;
        0.3 * jet.v.sin() + jet.dv_dt + x.iter().zip(&jet.grad_x).map(|(a, b)| a * b).sum::<f64>() + 0.1 * p2
            + 0.5 * jet.diff_contract
            + t
    }
}

#[test]
fn parameter_gradient_matches_finite_differences() {
    let game = anisotropic_game();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for repr in [Representation::Ansatz, Representation::Plain] {
        for net_seed in 0..3 {
            let state = NetworkState::xavier(NetworkArch::new(3, vec![5, 4]).unwrap(), 100 + net_seed);
            let t: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..0.5)).collect();
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (loss, grad) = loss_and_gradient(&state, &game, repr, &t, &x, &Nonlinear).unwrap();
            assert!(loss > 0.0);
            let h = 1e-6;
            for k in 0..state.params.len() {
                let mut s = state.clone();
                s.params[k] += h;
                let up = loss_and_gradient(&s, &game, repr, &t, &x, &Nonlinear).unwrap().0;
                s.params[k] -= 2.0 * h;
                let dn = loss_and_gradient(&s, &game, repr, &t, &x, &Nonlinear).unwrap().0;
                let fd = (up - dn) / (2.0 * h);
                assert!((grad[k] - fd).abs() / fd.abs().max(1e-3) < 1e-5, "{repr:?} param {k}: {} vs {fd}", grad[k]);
            }
        }
    }
}

#[test]
fn duplicating_the_batch_leaves_loss_and_gradient_unchanged() {
    let game = anisotropic_game();
    let state = NetworkState::xavier(NetworkArch::new(3, vec![6, 6]).unwrap(), 3);
    let t = vec![0.1, 0.3, 0.2];
    let x = vec![0.1, 0.2, 0.3, -0.5, 0.4, 0.0, 1.0, -1.0, 0.5];
    let (l1, g1) = loss_and_gradient(&state, &game, Representation::Ansatz, &t, &x, &Nonlinear).unwrap();
    let t2: Vec<f64> = t.iter().chain(&t).cloned().collect();
    let x2: Vec<f64> = x.iter().chain(&x).cloned().collect();
    let (l2, g2) = loss_and_gradient(&state, &game, Representation::Ansatz, &t2, &x2, &Nonlinear).unwrap();
    assert!((l1 - l2).abs() < 1e-12 * l1.abs());
    for (a, b) in g1.iter().zip(&g2) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
    assert!(loss_and_gradient(&state, &game, Representation::Ansatz, &[], &[], &Nonlinear).is_err());
}

struct Zero;
impl ResidualModel for Zero {
    fn residual(&self, _: usize, _: f64, _: &[f64], _: &ValueJet, _: &mut JetSensitivity) -> f64 {
        0.0
    }
}

#[test]
fn zero_residual_gives_zero_loss_and_gradient() {
    let game = anisotropic_game();
    let state = NetworkState::xavier(NetworkArch::new(3, vec![6]).unwrap(), 3);
    let (l, g) = loss_and_gradient(&state, &game, Representation::Ansatz, &[0.1], &[0.0, 0.1, 0.2], &Zero).unwrap();
    assert_eq!(l, 0.0);
    assert!(g.iter().all(|v| *v == 0.0));
}

#[test]
fn terminal_exactness() {
    let game = anisotropic_game();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let state = NetworkState::xavier(NetworkArch::new(3, vec![16, 16]).unwrap(), 1);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
        let g = game.terminal_value(&x);
        assert_eq!(state.ansatz_value(0.5, &x, g, 0.5), g);
    }
}
