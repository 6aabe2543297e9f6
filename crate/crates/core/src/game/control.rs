use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Admissible control set. Both kinds are convex and compact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlSet {
    /// Closed Euclidean ball of `radius` centred at the origin of `R^dim`.
    Ball { dim: usize, radius: f64 },
    /// Axis-aligned box `[lower_i, upper_i]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl ControlSet {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("ball needs dim >= 1 and radius > 0, got dim={dim} radius={radius}")));
        }
        Ok(ControlSet::Ball { dim, radius })
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new_box(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Config("box bounds must be nonempty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Config("box bounds need lower < upper in every coordinate".into()));
        }
        Ok(ControlSet::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSet::Ball { dim, .. } => *dim,
            ControlSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn contains(&self, c: &[f64], tol: f64) -> bool {
        if c.len() != self.dim() {
            return false;
        }
        match self {
            ControlSet::Ball { radius, .. } => norm(c) <= radius + tol,
            ControlSet::Box { lower, upper } => c
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
        }
    }

    /// Euclidean projection onto the set, in place.
    pub fn project(&self, c: &mut [f64]) {
        match self {
            ControlSet::Ball { radius, .. } => {
                let n = norm(c);
                if n > *radius {
                    let s = radius / n;
                    c.iter_mut().for_each(|v| *v *= s);
                }
            }
            ControlSet::Box { lower, upper } => {
                for (v, (l, u)) in c.iter_mut().zip(lower.iter().zip(upper)) {
                    *v = v.clamp(*l, *u);
                }
            }
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            ControlSet::Ball { dim, .. } => vec![0.0; *dim],
            ControlSet::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ControlSet::Ball { radius, .. } => 2.0 * radius,
            ControlSet::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>().sqrt()
            }
        }
    }

    /// Uniform sample over the set (rejection sampling for balls).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ControlSet::Ball { dim, radius } => loop {
                let c: Vec<f64> = (0..*dim).map(|_| rng.random_range(-*radius..=*radius)).collect();
                if norm(&c) <= *radius {
                    break c;
                }
            },
            ControlSet::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| rng.random_range(*l..=*u)).collect()
            }
        }
    }

    /// Tensor grid with `n_per_axis` nodes per coordinate over the bounding box,
    /// each node projected onto the set. Ball boundaries are therefore covered.
    pub fn grid(&self, n_per_axis: usize) -> Vec<Vec<f64>> {
        assert!(n_per_axis >= 2);
        let (lo, hi) = match self {
            ControlSet::Ball { dim, radius } => (vec![-*radius; *dim], vec![*radius; *dim]),
            ControlSet::Box { lower, upper } => (lower.clone(), upper.clone()),
        };
        let m = lo.len();
        let total = n_per_axis.pow(m as u32);
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut c = vec![0.0; m];
            for k in 0..m {
                let i = rem % n_per_axis;
                rem /= n_per_axis;
                c[k] = lo[k] + (hi[k] - lo[k]) * i as f64 / (n_per_axis - 1) as f64;
            }
            self.project(&mut c);
            out.push(c);
        }
        out
    }

    /// Largest spacing of [`ControlSet::grid`] along any axis.
    pub fn grid_spacing(&self, n_per_axis: usize) -> f64 {
        match self {
            ControlSet::Ball { radius, .. } => 2.0 * radius / (n_per_axis - 1) as f64,
            ControlSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) / (n_per_axis - 1) as f64)
                .fold(0.0, f64::max),
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn rejects_bad_sets() {
        assert!(ControlSet::ball(2, 0.0).is_err());
        assert!(ControlSet::ball(0, 1.0).is_err());
        assert!(ControlSet::new_box(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn projection_lands_in_set() {
        let ball = ControlSet::ball(2, 0.5).unwrap();
        let mut c = [3.0, 4.0];
        ball.project(&mut c);
        assert!((c[0] - 0.3).abs() < 1e-15 && (c[1] - 0.4).abs() < 1e-15);
        let bx = ControlSet::cube(3, 1.0).unwrap();
        let mut c = [2.0, -0.5, -7.0];
        bx.project(&mut c);
        assert_eq!(c, [1.0, -0.5, -1.0]);
    }

    #[test]
    fn samples_and_grid_are_admissible() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ball = ControlSet::ball(2, 0.1).unwrap();
        for _ in 0..1000 {
            assert!(ball.contains(&ball.sample_uniform(&mut rng), 0.0));
        }
        let g = ball.grid(21);
        assert_eq!(g.len(), 441);
        assert!(g.iter().all(|c| ball.contains(c, 1e-15)));
    }
}
