//! Reference for the N-dimensional isotropic publisher–subscriber game built
//! from one 2D solve per subscriber, with its full-dimensional HJI residual.
//!
//! `cargo run --release --example decomposition_reference -- [N] [n_x]`

use std::time::Instant;

use viscous_hji::analysis::{decomposition_residual_check, pair_truncation_estimate};
use viscous_hji::fdm::{reference_nd_isotropic, FdmConfig};
use viscous_hji::game::{DifferentialGame, PubSubParams, PubSubProblem};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> viscous_hji::Result<()> {
    let (n, n_x) = (arg(1, 3usize), arg(2, 101usize));
    let problem = PubSubProblem::new(PubSubParams { dimension: n, ..Default::default() })?;
    let config = FdmConfig { n_x, time_steps: Some(n_x * n_x), ..FdmConfig::pubsub() };
    let start = Instant::now();
    let reference = reference_nd_isotropic(&problem, &config)?;
    println!("{} pair solves on {n_x}x{n_x} in {:.1?}", reference.pairs.len(), start.elapsed());

    // grid node closest to 0.1 so the terminal check carries no interpolation error
    let h = 3.0 / (n_x - 1) as f64;
    let c = -1.5 + ((1.6 / h).round()) * h;
    let x0 = vec![c; n];
    for t in [0.0, 0.25, 0.5] {
        println!("v({t:.2}, {c:.3}·1) = {:.6}", reference.value(t, &x0)?);
    }
    let terminal = reference.value(problem.horizon(), &x0)?;
    println!("terminal identity: {terminal:.15} vs g = {:.15}", problem.terminal_value(&x0));

    let nd = decomposition_residual_check(&reference, &problem, 1000, 0)?;
    let pair = pair_truncation_estimate(&reference, &problem, 1000, 0)?;
    println!("mean |HJI residual|: summed {:.3e}, single pair {:.3e}, ratio {:.2}", nd.mean_abs, pair.mean_abs, nd.mean_abs / pair.mean_abs);
    Ok(())
}
