//! Numerical checks of partial curvature positivity through weighted
//! L² estimates for the ∂̄ operator on `(n,q)`-forms.

pub mod error;
pub mod forms;
pub mod geometry;
pub mod linalg;
pub mod multi_index;
pub mod probes;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{eig_hermitian, CMatrix, HermitianMatrix, Spectrum, C64};
pub use multi_index::{multi_indices, MultiIndex};
pub use spectral::{q_smallest_sum, subset_sums_oracle};
