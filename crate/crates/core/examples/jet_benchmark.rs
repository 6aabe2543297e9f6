//! Times one full-batch loss/gradient evaluation for the benchmark network sizes.
use std::time::Instant;

use rand::{Rng, SeedableRng};
use viscous_hji::game::{PathPlanningParams, PathPlanningProblem};
use viscous_hji::net::{loss_and_gradient, JetSensitivity, NetworkArch, NetworkState, Representation, ResidualModel, ValueJet};

struct Linear;
impl ResidualModel for Linear {
    fn residual(&self, _: usize, _: f64, _: &[f64], jet: &ValueJet, sens: &mut JetSensitivity) -> f64 {
        sens.dt = 1.0;
        sens.diff = 0.5;
        jet.dv_dt + 0.5 * jet.diff_contract
    }
}

fn main() {
    let game = PathPlanningProblem::new(PathPlanningParams::default()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let n = 2000;
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    for hidden in [vec![64; 4], vec![64; 3], vec![32; 3]] {
        let state = NetworkState::xavier(NetworkArch::new(2, hidden.clone()).unwrap(), 0);
        let reps = 20;
        let start = Instant::now();
        for _ in 0..reps {
            std::hint::black_box(loss_and_gradient(&state, &game, Representation::Ansatz, &t, &x, &Linear).unwrap());
        }
        println!("{hidden:?}: {:.2} ms per epoch", start.elapsed().as_secs_f64() * 1e3 / reps as f64);
    }
}
