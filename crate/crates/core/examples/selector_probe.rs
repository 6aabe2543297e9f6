//! Empirical Lipschitz constants of the feedback selectors.
//!
//! `cargo run --release --example selector_probe -- [samples]`

use viscous_hji::analysis::{lipschitz_selector_probe, ProbedControl};
use viscous_hji::game::{PathPlanningParams, PathPlanningProblem, PubSubParams, PubSubProblem, QuadraticSaddle};
use viscous_hji::pinn::{MinimaxConfig, SelectorMode};

fn main() -> viscous_hji::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let pp = PathPlanningProblem::new(PathPlanningParams::default())?;
    let r = lipschitz_selector_probe(&pp, &SelectorMode::ClosedForm, ProbedControl::Minimizer, 1.0, n, 0)?;
    println!("path planning a*: kappa {:.4} (clipped-linear map, 1/(2 lambda1) = {})", r.kappa_hat, 0.5 / pp.params().lambda1);
    let r = lipschitz_selector_probe(&pp, &SelectorMode::ClosedForm, ProbedControl::Maximizer, 1.0, n, 0)?;
    println!("path planning b*: kappa {:.1} (jumps at p = 0, grows as the pair separation shrinks)", r.kappa_hat);

    // Sign feedback: the selector is piecewise constant with jumps across Bᵀp = 0.
    let ps = PubSubProblem::new(PubSubParams::default())?;
    let r = lipschitz_selector_probe(&ps, &SelectorMode::ClosedForm, ProbedControl::Both, 1.0, n, 0)?;
    println!("pub-sub: kappa {:.1}", r.kappa_hat);

    let toy = QuadraticSaddle::new()?;
    let r = lipschitz_selector_probe(&toy, &SelectorMode::Numeric(MinimaxConfig::default()), ProbedControl::Both, 1.0, n, 0)?;
    println!("quadratic saddle (numeric minimax): kappa {:.4}, hand-derived 2", r.kappa_hat);
    Ok(())
}
