//! Probe forms for the curvature functional, monotone limits and fiber integrals.

pub mod cutoff;
pub mod monotone;
pub mod prekopa;
pub mod probe;
pub mod quadrature;
pub mod sekibun;

pub use cutoff::Cutoff;
pub use monotone::{monotone_limit_check, MonotoneReport};
pub use prekopa::{
    fiber_integrate_prekopa, Fiber, FiberIntegralField, FiberLabel, FiberOptions, FiberQuadrature, PrekopaOutcome,
};
pub use probe::{build_control_probe, build_probe_form, default_schedule, probe_rhs, ProbeConfig, ProbeForm};
pub use sekibun::{run_probe, sekibun_functional, ProbeReport, SekibunEntry, SekibunValue};
