//! Stabilized semi-implicit Cahn–Hilliard solver with L∞ stability
//! certification.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

// `!(x > 0)` is how parameter checks reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod graph;
pub mod kernel;
pub mod scalar;
pub mod snapshot;
pub mod stability;
pub mod stepper;

pub use error::{Error, Result};
pub use field::{
    inverse_transform, norms_and_mean, spectral_laplacian, transform, Norms, TorusGrid, Transform,
};
pub use graph::{resolvent_solve, Boundary, ResolventProblem, ResolventSolution};
pub use kernel::{
    general_kernel, kernel_1d_periodic, maximize_linear_meanzero, sharp_meanzero_constant,
};
pub use scalar::{Real, SpectralReal};
pub use snapshot::{read_chf1, write_chf1};
pub use stability::{
    bound_window, certify, certify_with_bound, critical_a, cubic_envelope, splitting,
    splitting_beta, unstabilized_tau_heuristic, CubicBranch, Envelope, Splitting,
};
pub use stepper::{
    dissipation_report, energy, find_critical_tau, invariant_region_step, step, step_graph,
    step_spectral, sweep_critical_tau, DecayConfig, Discretization,
};

pub type Field64 = field::Field<f64>;
pub type SpectralCoefficients64 = field::SpectralCoefficients<f64>;
pub type GraphLaplacian64 = graph::GraphLaplacianOp<f64>;
pub type SchemeParams64 = stability::SchemeParams<f64>;
pub type StabilityCertificate64 = stability::StabilityCertificate<f64>;
pub type ResolventKernel64 = kernel::ResolventKernel<f64>;
pub type GeneralKernel64 = kernel::GeneralKernel<f64>;
pub type StepperState64 = stepper::StepperState<f64>;
pub type EnergyReport64 = stepper::EnergyReport<f64>;
pub type SpectralBackend64 = stepper::SpectralBackend<f64>;
pub type GraphBackend64 = stepper::GraphBackend<f64>;
pub type CriticalTau64 = stepper::CriticalTau<f64>;
