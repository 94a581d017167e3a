//! Weights, domains, curvature and pointwise positivity checks.

pub mod bundle;
pub mod domain;
pub mod expr;
pub mod hessian;
pub mod positivity;
pub mod sampling;
pub mod weight;

pub use bundle::{BundleCurvature, CurvatureAtPoint};
pub use domain::{Domain, DomainKind};
pub use expr::{parse_weight, Expr};
pub use hessian::{complex_hessian, finite_difference_hessian, DEFAULT_H_STEP};
pub use positivity::{
    check_q_positive, check_uniform_q_positive, rc_directional_check, rc_trace_check, CheckOptions, Criterion,
    PositivityReport, Witness,
};
pub use weight::{DerivativeMode, Weight};
