use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::BoxDomain;
use crate::{Error, Result};

/// Interior space-time points `(t_j, x_j)` with `t_j ∈ [0, T)`, plus optional
/// terminal points `x_k` used only when the terminal condition is penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationBatch {
    pub dim: usize,
    pub t: Vec<f64>,
    /// Row-major `len × dim`.
    pub x: Vec<f64>,
    pub terminal_x: Vec<f64>,
}

impl CollocationBatch {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn point(&self, j: usize) -> (f64, &[f64]) {
        (self.t[j], &self.x[j * self.dim..(j + 1) * self.dim])
    }

    pub fn terminal_len(&self) -> usize {
        self.terminal_x.len() / self.dim.max(1)
    }
}

/// `n` i.i.d. uniform points on `[0, T) × domain` (and `n_terminal` uniform
/// points on `domain`), drawn from `rng`.
pub fn sample_with<R: Rng + ?Sized>(domain: &BoxDomain, horizon: f64, n: usize, n_terminal: usize, rng: &mut R) -> Result<CollocationBatch> {
    domain.validate()?;
    if n == 0 {
        return Err(Error::Empty("collocation request"));
    }
    if !(horizon > 0.0) {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let d = domain.dim();
    let mut t = Vec::with_capacity(n);
    let mut x = vec![0.0; n * d];
    for j in 0..n {
        t.push(rng.random_range(0.0..horizon));
        domain.sample(rng, &mut x[j * d..(j + 1) * d]);
    }
    let mut terminal_x = vec![0.0; n_terminal * d];
    for k in 0..n_terminal {
        domain.sample(rng, &mut terminal_x[k * d..(k + 1) * d]);
    }
    Ok(CollocationBatch { dim: d, t, x, terminal_x })
}

pub fn sample_collocation(domain: &BoxDomain, horizon: f64, n: usize, seed: u64) -> Result<CollocationBatch> {
    sample_with(domain, horizon, n, 0, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_lie_in_domain_and_are_reproducible() {
        let dom = BoxDomain { lower: vec![-1.0, 0.0], upper: vec![1.0, 2.0] };
        let b = sample_collocation(&dom, 0.5, 5000, 4).unwrap();
        assert_eq!(b.len(), 5000);
        for j in 0..b.len() {
            let (t, x) = b.point(j);
            assert!((0.0..0.5).contains(&t));
            assert!(dom.contains(x));
        }
        assert_eq!(b, sample_collocation(&dom, 0.5, 5000, 4).unwrap());
    }

    #[test]
    fn coordinate_means_are_centred() {
        let dom = BoxDomain::cube(3, -1.5, 1.5);
        let n = 10_000;
        let b = sample_collocation(&dom, 1.0, n, 99).unwrap();
        // Uniform on [-1.5, 1.5]: sd = 3/sqrt(12); standard error = sd / sqrt(n).
        let se = 3.0 / 12f64.sqrt() / (n as f64).sqrt();
        for i in 0..3 {
            let mean = (0..n).map(|j| b.x[j * 3 + i]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 3.0 * se, "axis {i}: {mean}");
        }
        let tmean = b.t.iter().sum::<f64>() / n as f64;
        assert!((tmean - 0.5).abs() < 3.0 / 12f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn degenerate_requests_fail() {
        let dom = BoxDomain { lower: vec![0.0], upper: vec![0.0] };
        assert!(sample_collocation(&dom, 1.0, 10, 0).is_err());
        assert!(sample_collocation(&BoxDomain::cube(1, 0.0, 1.0), 1.0, 0, 0).is_err());
    }
}
