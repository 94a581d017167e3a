//! Discrete `∂̄` on grids over domains in `ℂ^n` (`n ≤ 2`), minimal weighted
//! solutions, and the twisted estimate.

pub mod cg;
pub mod dbar;
pub mod estimate;
pub mod grid;

pub use cg::{dbar_of, minimal_solution, MinimalSolution};
pub use dbar::{discretize_dbar, DbarOperator};
pub use estimate::{estimate_ratio, Estimate, SolveReport};
pub use grid::{GridField, GridSpec};
