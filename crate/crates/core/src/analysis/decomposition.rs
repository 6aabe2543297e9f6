use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fdm::{hji_residual, NdReference};
use crate::game::{DifferentialGame, PubSubProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub mean_abs: f64,
    pub max_abs: f64,
    pub n: usize,
}

fn sample_points(problem: &PubSubProblem, n: usize, seed: u64) -> Result<Vec<(f64, Vec<f64>)>> {
    if n == 0 {
        return Err(Error::Empty("residual sample"));
    }
    let domain = problem.target_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let t = rng.random_range(0.0..problem.horizon());
            let mut x = vec![0.0; problem.n()];
            domain.sample(&mut rng, &mut x);
            (t, x)
        })
        .collect())
}

fn stats(r: &[f64]) -> ResidualStats {
    let a: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    ResidualStats { mean_abs: a.iter().sum::<f64>() / a.len() as f64, max_abs: a.iter().cloned().fold(0.0, f64::max), n: a.len() }
}

fn check(reference: &NdReference, problem: &PubSubProblem) -> Result<()> {
    if !problem.is_isotropic() {
        return Err(Error::Unsupported("decomposition check needs a diagonal diffusion".into()));
    }
    if reference.dim() != problem.n() {
        return Err(Error::Dimension { expected: problem.n(), got: reference.dim() });
    }
    Ok(())
}

/// Full `N`-dimensional HJI residual of the summed reference, from the
/// interpolated stencil derivatives, at `n` seeded points of `[0, T) × target`.
pub fn decomposition_residual_check(reference: &NdReference, problem: &PubSubProblem, n: usize, seed: u64) -> Result<ResidualStats> {
    check(reference, problem)?;
    let r = sample_points(problem, n, seed)?
        .iter()
        .map(|(t, x)| hji_residual(problem, *t, x, &reference.jet(*t, x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats(&r))
}

/// Truncation scale of a single pair solve: the 2D residual of the first pair
/// solution at the projections `(t, x₀, x₁)` of the same sample points.
pub fn pair_truncation_estimate(reference: &NdReference, problem: &PubSubProblem, n: usize, seed: u64) -> Result<ResidualStats> {
    check(reference, problem)?;
    let pair = problem.pair_problem(1)?;
    let grid = &reference.pairs[0];
    let r = sample_points(problem, n, seed)?
        .iter()
        .map(|(t, x)| {
            let y = [x[0], x[1]];
            hji_residual(&pair, *t, &y, &grid.jet(*t, &y)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats(&r))
}
