//! `(n,q)`-form coefficients, curvature operators and `D′*`.

pub mod exterior;
pub mod field;
pub mod form;
pub mod operator;

pub use field::{dprime_star_closed, ConstantField, DPrimeStar, FiniteDifferenceField, FormField};
pub use form::{FormNQ, OperatorNQ};
pub use operator::{apply_inverse, commutator_of_hermitian, commutator_operator, twist_operator, twist_operator_rank};
