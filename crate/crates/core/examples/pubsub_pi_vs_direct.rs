//! Policy iteration against the direct baseline on the two-dimensional
//! publisher–subscriber game at an equal epoch budget.
//!
//! `cargo run --release --example pubsub_pi_vs_direct -- [M] [E] [seed]`

use std::time::Instant;

use viscous_hji::analysis::{convergence_history, error_report_on_grid};
use viscous_hji::config::ProblemConfig;
use viscous_hji::fdm::{fdm_solve_2d, restrict_to_target, FdmConfig};
use viscous_hji::game::{PubSubParams, PubSubProblem};
use viscous_hji::pinn::{direct_pinn_train, run_policy_iteration, TrainConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> viscous_hji::Result<()> {
    let (m, e, seed) = (arg(1, 10), arg(2, 500), arg(3, 0u64));
    let params = PubSubParams::default();
    let problem = PubSubProblem::new(params.clone())?;
    let fdm = FdmConfig::pubsub();
    let start = Instant::now();
    let (reference, _) = restrict_to_target(&fdm_solve_2d(&problem, &fdm)?, &fdm.target)?;
    println!("reference {:?} in {:.1?}", reference.shape, start.elapsed());

    let config = TrainConfig { outer_iterations: m, epochs: e, tol: 0.0, seed, ..ProblemConfig::PubSub(params).default_training() };
    let times = [0.0, 0.25];

    let start = Instant::now();
    let pi = run_policy_iteration(&problem, &config)?;
    println!("policy iteration: {} iterations in {:.1?}", pi.history.len(), start.elapsed());
    if pi.history.len() >= 3 {
        let fit = convergence_history(&pi.history, 10)?;
        println!("  sup-norm changes: slope {:.3}, rho {:.3}, R^2 {:.3}", fit.slope, fit.rho(), fit.r_squared);
    }
    let start = Instant::now();
    let (direct, losses) = direct_pinn_train(&problem, &config)?;
    println!("direct: {} epochs in {:.1?}, final loss {:.3e}", losses.len(), start.elapsed(), losses.last().unwrap());

    for (name, state) in [("PI", &pi.state), ("Direct", &direct)] {
        let report = error_report_on_grid(state, &problem, config.representation, &reference, &times, name)?;
        for row in &report.rows {
            println!("{name:>6} t = {:.2}: relative L2 {:.3e}, MSE {:.3e}", row.t, row.rel_l2, row.mse);
        }
    }
    Ok(())
}
