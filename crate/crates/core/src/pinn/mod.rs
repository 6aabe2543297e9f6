//! Physics-informed policy iteration and the direct baseline.

mod collocation;
mod policy;
mod residual;
mod selector;
mod train;

pub use collocation::{sample_collocation, sample_with, CollocationBatch};
pub use policy::{policy_improvement, FrozenPolicy, InitialPolicy, PolicySnapshot};
pub use residual::{residual, residuals_batch, DirectResidual, FrozenPolicyResidual, TerminalPenalty};
pub use selector::{numeric_minimax, select_controls, MinimaxConfig, SelectorMode, SelectorOutcome};
pub use train::{
    direct_pinn_train, empirical_residual_norm, estimate_sup_norm_diff, initial_network, predict_values, run_policy_iteration,
    run_policy_iteration_with, train_policy_evaluation, validation_set, IterationHistory, IterationRecord, PolicyIterationResult,
    TrainConfig,
};
