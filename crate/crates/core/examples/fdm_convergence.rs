//! Grid refinement of the finite-difference solver on pure diffusion with a
//! Gaussian terminal condition, against the closed-form solution.

use viscous_hji::fdm::{fdm_solve_2d, FdmConfig};
use viscous_hji::game::{BoxDomain, HeatProblem};

fn main() -> viscous_hji::Result<()> {
    let problem = HeatProblem::new(2, 0.1, 0.2, 1.0, 2.0)?;
    let mut previous: Option<f64> = None;
    for n_x in [51, 101, 201] {
        let config = FdmConfig {
            extended: BoxDomain::cube(2, -2.0, 2.0),
            target: BoxDomain::cube(2, -1.0, 1.0),
            n_x,
            time_steps: None,
            stored_slices: 5,
            time_interp: Default::default(),
        };
        let grid = fdm_solve_2d(&problem, &config)?;
        let err = grid
            .nodes()
            .iter()
            .zip(&grid.slices[0])
            .map(|(x, v)| (v - problem.exact(0.0, x)).abs())
            .fold(0.0, f64::max);
        let ratio = previous.map_or(String::from("-"), |p| format!("{:.3}", p / err));
        println!("n_x = {n_x:4}  dt = {:.3e}  max error at t=0: {err:.3e}  ratio: {ratio}", grid.dt);
        previous = Some(err);
    }
    Ok(())
}
