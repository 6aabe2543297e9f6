use rayon::prelude::*;

use super::grid::{interpolate, GridJet, TimeGrid, TimeInterp};
use super::solver::{fdm_solve_2d, FdmConfig};
use crate::game::{DifferentialGame, PubSubProblem};
use crate::{Error, Result};

/// `v̂(t, x) = Σᵢ vᵢ(t, x₀, xᵢ)` assembled from one 2D solve per subscriber.
#[derive(Debug, Clone)]
pub struct NdReference {
    pub pairs: Vec<TimeGrid>,
    pub time_interp: TimeInterp,
}

impl NdReference {
    pub fn dim(&self) -> usize {
        self.pairs.len() + 1
    }

    pub fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let mut v = 0.0;
        for (i, g) in self.pairs.iter().enumerate() {
            v += interpolate(g, t, &[x[0], x[i + 1]], self.time_interp)?;
        }
        Ok(v)
    }

    /// Sum of the interpolated stencil jets of the pair solutions, embedded in
    /// `N` dimensions.
    pub fn jet(&self, t: f64, x: &[f64]) -> Result<GridJet> {
        self.check(x)?;
        let n = self.dim();
        let mut out = GridJet { v: 0.0, dv_dt: 0.0, grad: vec![0.0; n], hess: vec![0.0; n * n] };
        for (k, g) in self.pairs.iter().enumerate() {
            let i = k + 1;
            let j = g.jet(t, &[x[0], x[i]])?;
            out.v += j.v;
            out.dv_dt += j.dv_dt;
            out.grad[0] += j.grad[0];
            out.grad[i] += j.grad[1];
            out.hess[0] += j.hess[0];
            out.hess[i] += j.hess[1];
            out.hess[i * n] += j.hess[2];
            out.hess[i * n + i] += j.hess[3];
        }
        Ok(out)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }
}

/// Pairwise reference for an isotropic publisher–subscriber game.
pub fn reference_nd_isotropic(problem: &PubSubProblem, config: &FdmConfig) -> Result<NdReference> {
    if !problem.is_isotropic() {
        return Err(Error::Unsupported("the pairwise reference needs a diagonal diffusion".into()));
    }
    let pairs: Vec<Result<TimeGrid>> = (1..problem.n())
        .into_par_iter()
        .map(|i| {
            let sub = problem.pair_problem(i)?;
            fdm_solve_2d(&sub, config)
        })
        .collect();
    Ok(NdReference { pairs: pairs.into_iter().collect::<Result<_>>()?, time_interp: config.time_interp })
}

/// `∂ₜv + H(t, x, ∇v) + ½ Tr(a D²v)` for a jet of any reference.
pub fn hji_residual<G: DifferentialGame + ?Sized>(game: &G, t: f64, x: &[f64], jet: &GridJet) -> Result<f64> {
    let h = game
        .hamiltonian(t, x, &jet.grad)
        .ok_or_else(|| Error::Unsupported(format!("{} has no closed-form Hamiltonian", game.label())))?;
    Ok(jet.dv_dt + h + 0.5 * game.diffusion(t, x).contract(&jet.hess))
}
