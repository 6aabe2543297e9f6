//! Reference value function of the path-planning game on the extended grid,
//! restricted to the target box and written as CSV.
//!
//! `cargo run --release --example fdm_reference -- [n_x] [out.csv]`

use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use viscous_hji::fdm::{fdm_solve_2d, interpolate, restrict_to_target, write_grid_csv, FdmConfig, TimeInterp};
use viscous_hji::game::{PathPlanningParams, PathPlanningProblem};

fn main() -> viscous_hji::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n_x = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(201);
    let problem = PathPlanningProblem::new(PathPlanningParams::default())?;
    let config = FdmConfig { n_x, time_steps: Some(n_x * n_x), ..FdmConfig::path_planning() };
    let start = Instant::now();
    let grid = fdm_solve_2d(&problem, &config)?;
    println!("solved {n_x}x{n_x} with dt = {:.3e} in {:.1?}", grid.dt, start.elapsed());
    let (target, snapped) = restrict_to_target(&grid, &config.target)?;
    println!("target grid {:?}, snapped: {snapped}", target.shape);
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let v = interpolate(&target, t, &[0.0, 0.0], TimeInterp::Linear)?;
        println!("v({t:.2}, origin) = {v:.6}");
    }
    if let Some(path) = args.get(2) {
        write_grid_csv(&target, BufWriter::new(File::create(path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
