//! Euler–Maruyama rollouts of the path-planning game under the feedback of a
//! briefly trained value network, with and without the adversary.
//!
//! `cargo run --release --example trajectories -- [M] [E] [out.csv]`

use std::fs::File;
use std::io::BufWriter;

use viscous_hji::analysis::{simulate_paths, write_trajectories_csv, Disturbance, LearnedPolicy};
use viscous_hji::game::{DifferentialGame, PathPlanningParams, PathPlanningProblem};
use viscous_hji::pinn::{run_policy_iteration, SelectorMode, TrainConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> viscous_hji::Result<()> {
    let (m, e) = (arg(1, 5usize), arg(2, 300usize));
    let problem = PathPlanningProblem::new(PathPlanningParams::default())?;
    let config = TrainConfig { outer_iterations: m, epochs: e, ..TrainConfig::default() };
    let trained = run_policy_iteration(&problem, &config)?;
    let starts = vec![vec![-0.8, -0.8], vec![-0.8, 0.8], vec![0.8, -0.8]];
    let dt = 0.01;
    let steps = (problem.horizon() / dt).round() as usize;
    let goal = problem.params().goal.clone();
    for disturbance in [Disturbance::Adversarial, Disturbance::Zero] {
        let policy = LearnedPolicy { game: &problem, state: &trained.state, repr: config.representation, mode: SelectorMode::ClosedForm, disturbance };
        let paths = simulate_paths(&problem, &policy, &starts, dt, steps, 0)?;
        for p in &paths {
            let end = p.last();
            let miss = ((end[0] - goal[0]).powi(2) + (end[1] - goal[1]).powi(2)).sqrt();
            println!("{disturbance:?} path {}: end {end:.3?}, distance to goal {miss:.3}", p.path_id);
        }
        if let (Disturbance::Adversarial, Some(path)) = (disturbance, std::env::args().nth(3)) {
            write_trajectories_csv(&paths, BufWriter::new(File::create(&path)?))?;
            println!("wrote {path}");
        }
    }
    Ok(())
}
