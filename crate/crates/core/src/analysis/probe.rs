use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{BoxDomain, DifferentialGame};
use crate::pinn::{select_controls, SelectorMode};
use crate::Result;

/// Smallest co-state separation included in the probe.
pub const MIN_SEPARATION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorProbeResult {
    pub problem: String,
    pub kappa_hat: f64,
    pub n_samples: usize,
}

/// Which part of the selector output is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbedControl {
    Minimizer,
    Maximizer,
    /// `|Δa| + |Δb|`.
    Both,
}

/// `max |S(t, x, p₁) - S(t, x, p₂)| / |p₁ - p₂|` over `n` random samples with
/// `p₁` uniform in `[-p_max, p_max]ᵈ` and `p₂ = p₁ + r u`, `u` a random unit
/// vector and `r` log-uniform in `[MIN_SEPARATION, p_max]`.
pub fn lipschitz_selector_probe<G: DifferentialGame + ?Sized>(
    game: &G,
    mode: &SelectorMode,
    probed: ProbedControl,
    p_max: f64,
    n: usize,
    seed: u64,
) -> Result<SelectorProbeResult> {
    let d = game.dim();
    let domain = game.sampling_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kappa: f64 = 0.0;
    let mut x = vec![0.0; d];
    let pbox = BoxDomain::cube(d, -p_max, p_max);
    let mut p1 = vec![0.0; d];
    for _ in 0..n {
        let t = rng.random_range(0.0..game.horizon());
        domain.sample(&mut rng, &mut x);
        pbox.sample(&mut rng, &mut p1);
        let mut u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let un = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let r = (MIN_SEPARATION.ln() + rng.random::<f64>() * (p_max / MIN_SEPARATION).ln()).exp();
        u.iter_mut().for_each(|v| *v *= r / un);
        let p2: Vec<f64> = p1.iter().zip(&u).map(|(a, b)| a + b).collect();
        let dp = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dp < MIN_SEPARATION * (1.0 - 1e-12) {
            continue;
        }
        let s1 = select_controls(game, mode, t, &x, &p1)?;
        let s2 = select_controls(game, mode, t, &x, &p2)?;
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let num = match probed {
            ProbedControl::Minimizer => dist(&s1.a, &s2.a),
            ProbedControl::Maximizer => dist(&s1.b, &s2.b),
            ProbedControl::Both => dist(&s1.a, &s2.a) + dist(&s1.b, &s2.b),
        };
        kappa = kappa.max(num / dp);
    }
    Ok(SelectorProbeResult { problem: game.label(), kappa_hat: kappa, n_samples: n })
}
