//! Policy iteration on the moving-obstacle path-planning game, scored against
//! the finite-difference reference on the target box.
//!
//! `cargo run --release --example path_planning_pi -- [M] [E] [seed] [n_x]`

use std::time::Instant;

use viscous_hji::analysis::error_report_on_grid;
use viscous_hji::fdm::{fdm_solve_2d, restrict_to_target, FdmConfig};
use viscous_hji::game::{PathPlanningParams, PathPlanningProblem};
use viscous_hji::pinn::{run_policy_iteration_with, TrainConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> viscous_hji::Result<()> {
    let (m, e, seed, n_x) = (arg(1, 50), arg(2, 500), arg(3, 0u64), arg(4, 201usize));
    let problem = PathPlanningProblem::new(PathPlanningParams::default())?;
    let fdm = FdmConfig { n_x, time_steps: Some(n_x * n_x), ..FdmConfig::path_planning() };
    let start = Instant::now();
    let (reference, _) = restrict_to_target(&fdm_solve_2d(&problem, &fdm)?, &fdm.target)?;
    println!("reference {:?} in {:.1?}", reference.shape, start.elapsed());

    let config = TrainConfig { outer_iterations: m, epochs: e, seed, ..TrainConfig::default() };
    let start = Instant::now();
    let result = run_policy_iteration_with(&problem, &config, |r, _| {
        println!(
            "iteration {:3}: final loss {:.3e}, p_n {:.3e} ± {:.1e}, sup change {:.3e} ({:.1}s)",
            r.iteration,
            r.losses.last().copied().unwrap_or(f64::NAN),
            r.p_n,
            r.p_n_stderr,
            r.sup_diff,
            r.wall_time_s
        );
        Ok(None)
    })?;
    println!("trained in {:.1?}", start.elapsed());
    let report = error_report_on_grid(&result.state, &problem, config.representation, &reference, &[0.0, 0.25, 0.5, 0.75], "pi")?;
    for row in &report.rows {
        println!("t = {:.2}: relative L2 {:.3e}, MSE {:.3e}", row.t, row.rel_l2, row.mse);
    }
    Ok(())
}
