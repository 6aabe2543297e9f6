//! The numeric minimax selector next to the closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viscous_hji::game::{lagrangian, PathPlanningParams, PathPlanningProblem, PubSubParams, PubSubProblem, QuadraticSaddle};
use viscous_hji::pinn::{select_controls, MinimaxConfig, SelectorMode};

fn main() -> viscous_hji::Result<()> {
    let numeric = SelectorMode::Numeric(MinimaxConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let pp = PathPlanningProblem::new(PathPlanningParams::default())?;
    let ps = PubSubProblem::new(PubSubParams { dimension: 3, ..Default::default() })?;
    for _ in 0..3 {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let c = select_controls(&pp, &SelectorMode::ClosedForm, 0.5, &x, &p)?;
        let n = select_controls(&pp, &numeric, 0.5, &x, &p)?;
        println!("path planning p = {p:.3?}: closed a {:.4?} b {:.4?} | numeric a {:.4?} b {:.4?} ({} iterations)", c.a, c.b, n.a, n.b, n.iterations);

        let x3 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let p3 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let c = select_controls(&ps, &SelectorMode::ClosedForm, 0.2, &x3, &p3)?;
        let n = select_controls(&ps, &numeric, 0.2, &x3, &p3)?;
        let (lc, ln) = (lagrangian(&ps, 0.2, &x3, &p3, &c.a, &c.b)?, lagrangian(&ps, 0.2, &x3, &p3, &n.a, &n.b)?);
        println!("pub-sub N=3: closed L {lc:.6} | numeric L {ln:.6}, converged {}", n.converged);
    }

    let toy = QuadraticSaddle::new()?;
    for p in [-1.0, 0.3, 1.5] {
        let n = select_controls(&toy, &numeric, 0.0, &[0.0], &[p])?;
        let (a, b) = QuadraticSaddle::saddle(p);
        println!("quadratic saddle p = {p}: numeric ({:.5}, {:.5}), exact ({a}, {b})", n.a[0], n.b[0]);
    }
    Ok(())
}
