//! Error metrics, convergence-rate fits, selector probes, trajectory rollouts
//! and CSV reports.

mod decomposition;
mod metrics;
mod probe;
mod rates;
mod report;
mod rollout;

pub use decomposition::{decomposition_residual_check, pair_truncation_estimate, ResidualStats};
pub use metrics::{error_report_nd, error_report_on_grid, mse, relative_l2_error, ErrorReport, ErrorRow};
pub use probe::{lipschitz_selector_probe, ProbedControl, SelectorProbeResult, MIN_SEPARATION};
pub use rates::{convergence_history, fit_rate, RateFit};
pub use report::{emit_report, write_errors_csv, write_probes_csv, write_rates_csv, write_trajectories_csv, ERRORS_HEADER, PROBES_HEADER, RATES_HEADER};
pub use rollout::{euler_maruyama, simulate_paths, Disturbance, FeedbackPolicy, LearnedPolicy, Trajectory};
