use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Minimum admissible eigenvalue of `σσᵀ`.
pub const MIN_ELLIPTICITY: f64 = 1e-6;

/// Diffusion matrix `σ` together with `a = σσᵀ` and its eigen-decomposition.
///
/// `Tr(a D²v) = Σ_k w_k u_kᵀ D²v u_k` with `(w_k, u_k)` the eigenpairs of `a`;
/// the jet engine propagates second derivatives along the `u_k` only.
#[derive(Debug, Clone, PartialEq)]
pub struct Diffusion {
    sigma: DMatrix<f64>,
    a_mat: DMatrix<f64>,
    directions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Diffusion {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() || sigma.nrows() == 0 {
            return Err(Error::Config("sigma must be a nonempty square matrix".into()));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sigma".into()));
        }
        let a_mat = &sigma * sigma.transpose();
        let a_sym = (&a_mat + a_mat.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a_sym.clone());
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_eig >= MIN_ELLIPTICITY) {
            return Err(Error::DegenerateDiffusion(min_eig));
        }
        let d = sigma.nrows();
        let directions = (0..d).map(|k| eig.eigenvectors.column(k).iter().cloned().collect()).collect();
        let weights = eig.eigenvalues.iter().cloned().collect();
        Ok(Diffusion { sigma, a_mat: a_sym, directions, weights })
    }

    /// `σ = scale · I_d`.
    pub fn isotropic(d: usize, scale: f64) -> Result<Self> {
        Self::new(DMatrix::identity(d, d) * scale)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn a_mat(&self) -> &DMatrix<f64> {
        &self.a_mat
    }

    /// Orthonormal eigenvectors of `a`.
    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// Eigenvalues of `a`, matching [`Diffusion::directions`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Principal submatrix of `σ` on the given coordinates.
    pub fn submatrix(&self, coords: &[usize]) -> Result<Self> {
        let m = coords.len();
        let sub = DMatrix::from_fn(m, m, |i, j| self.sigma[(coords[i], coords[j])]);
        Self::new(sub)
    }

    /// True when `σ` has no off-diagonal mass.
    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.sigma[(i, j)] == 0.0))
    }

    /// `Tr(a H)` for a dense symmetric `H` given row-major.
    pub fn contract(&self, hess: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += self.a_mat[(i, j)] * hess[i * d + j];
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_contraction_matches_trace() {
        let sigma = DMatrix::from_row_slice(3, 3, &[0.1, 0.03, 0.02, 0.03, 0.1, 0.01, 0.02, 0.01, 0.1]);
        let diff = Diffusion::new(sigma).unwrap();
        let hess = [1.0, 0.5, -0.2, 0.5, 2.0, 0.3, -0.2, 0.3, -1.0];
        let mut via_eig = 0.0;
        for (u, w) in diff.directions().iter().zip(diff.weights()) {
            let mut q = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    q += u[i] * hess[i * 3 + j] * u[j];
                }
            }
            via_eig += w * q;
        }
        assert!((via_eig - diff.contract(&hess)).abs() < 1e-14);
    }

    #[test]
    fn singular_sigma_is_rejected() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(Diffusion::new(sigma), Err(Error::DegenerateDiffusion(_))));
    }
}
