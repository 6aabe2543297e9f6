use super::collocation::CollocationBatch;
use super::policy::{policy_improvement, FrozenPolicy, PolicySnapshot};
use crate::game::{dot, DifferentialGame};
use crate::net::{value_jets, JetSensitivity, NetworkState, Representation, ResidualModel, ValueJet};
use crate::{Error, Result};

/// `∂ₜv + c_j + ∇ₓv · f_j + ½ Tr(a D²v)` with the controls frozen per point.
pub struct FrozenPolicyResidual<'a> {
    pub policy: &'a FrozenPolicy,
}

impl ResidualModel for FrozenPolicyResidual<'_> {
    fn residual(&self, index: usize, _t: f64, _x: &[f64], jet: &ValueJet, sens: &mut JetSensitivity) -> f64 {
        let d = self.policy.dim;
        let f = &self.policy.drift[index * d..(index + 1) * d];
        sens.dt = 1.0;
        sens.grad.copy_from_slice(f);
        sens.diff = 0.5;
        jet.dv_dt + self.policy.cost[index] + dot(&jet.grad_x, f) + 0.5 * jet.diff_contract
    }
}

/// `∂ₜv + H(t, x, ∇ₓv) + ½ Tr(a D²v)` with the closed-form Hamiltonian. The
/// sensitivity to `∇ₓv` is `f(t, x, a*, b*)`.
pub struct DirectResidual<'a, G: ?Sized> {
    pub game: &'a G,
}

impl<G: DifferentialGame + ?Sized> ResidualModel for DirectResidual<'_, G> {
    fn residual(&self, _index: usize, t: f64, x: &[f64], jet: &ValueJet, sens: &mut JetSensitivity) -> f64 {
        let p = &jet.grad_x;
        let (h, (a, b)) = match (self.game.hamiltonian(t, x, p), self.game.optimal_controls(t, x, p)) {
            (Some(h), Some(c)) => (h, c),
            _ => return f64::NAN,
        };
        self.game.drift(t, x, &a, &b, &mut sens.grad);
        sens.dt = 1.0;
        sens.diff = 0.5;
        jet.dv_dt + h + 0.5 * jet.diff_contract
    }
}

/// `v(T, x_k) - g(x_k)` for terminal points, used with the plain representation.
pub struct TerminalPenalty<'a, G: ?Sized> {
    pub game: &'a G,
}

impl<G: DifferentialGame + ?Sized> ResidualModel for TerminalPenalty<'_, G> {
    fn residual(&self, _index: usize, _t: f64, x: &[f64], jet: &ValueJet, sens: &mut JetSensitivity) -> f64 {
        sens.v = 1.0;
        jet.v - self.game.terminal_value(x)
    }
}

/// Frozen-policy residual at one interior point, with the controls taken from
/// the snapshot's feedback at that point.
pub fn residual<G: DifferentialGame + ?Sized>(state: &NetworkState, repr: Representation, t: f64, x: &[f64], snapshot: &PolicySnapshot, game: &G) -> Result<f64> {
    if !(t < game.horizon()) {
        return Err(Error::OutOfRange(format!("t = {t} is not interior")));
    }
    let jet = value_jets(state, game, repr, &[t], x)?.remove(0);
    let (a, b) = policy_improvement(snapshot, t, x, game)?;
    let mut f = vec![0.0; game.dim()];
    game.drift(t, x, &a, &b, &mut f);
    Ok(jet.dv_dt + game.running_cost(t, x, &a, &b) + dot(&jet.grad_x, &f) + 0.5 * jet.diff_contract)
}

/// Frozen-policy residuals over a batch.
pub fn residuals_batch<G: DifferentialGame + ?Sized>(state: &NetworkState, repr: Representation, batch: &CollocationBatch, policy: &FrozenPolicy, game: &G) -> Result<Vec<f64>> {
    let jets = value_jets(state, game, repr, &batch.t, &batch.x)?;
    let model = FrozenPolicyResidual { policy };
    let mut sens = JetSensitivity::zeros(game.dim());
    Ok(jets
        .iter()
        .enumerate()
        .map(|(j, jet)| {
            let (t, x) = batch.point(j);
            model.residual(j, t, x, jet, &mut sens)
        })
        .collect())
}
