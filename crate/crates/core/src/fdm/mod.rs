//! Explicit finite-difference references in two dimensions and the pairwise
//! decomposition for isotropic publisher–subscriber games.

mod decomposition;
mod grid;
mod solver;

pub use decomposition::{hji_residual, reference_nd_isotropic, NdReference};
pub use grid::{interpolate, read_grid_binary, read_grid_csv, restrict_to_target, write_grid_binary, write_grid_csv, GridJet, TimeGrid, TimeInterp};
pub use solver::{fdm_solve_2d, stability_bound, FdmConfig, BLOWUP_FACTOR};
