//! Heteroclinic solutions of `−(φ(|u'|)u')' + V'(u) = 0` for double-well
//! potentials `V`.
//!
//! Two independent routes produce profiles: [`cauchy::solve_cauchy`]
//! integrates the energy reduction `q' = G⁻¹(V(q))`, and
//! [`minimizer::solve_variational`] minimizes the discretized action.
//! [`verify::run_all`] checks either one against the qualitative properties every heteroclinic must have.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cauchy;
pub mod error;
pub mod io;
pub mod kernels;
pub mod mc_truncation;
pub mod minimizer;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod verify;

pub use cauchy::{
    closed_form_oracle, fit_decay, oracle_for, sandwich_for, solve_cauchy, ClosedForm, DecayFit, Route, Sandwich,
    SolverConfig,
};
pub use error::{Error, Result};
pub use kernels::{certify_kernel, estimate_exponents, kernel_catalog, KernelCertificate, KernelSpec};
pub use mc_truncation::{mc_sandwich_check, solve_mc, solve_mc_schedule, SlopeCertificate};
pub use minimizer::{solve_variational, Descent, MinimizeOptions};
pub use potentials::{certify_hypotheses, PotentialCertificate, PotentialSpec};
pub use scalar::Real;
pub use verify::{finite_action, run_all, CheckStatus, VerificationReport, VerifyOptions};

pub type PhiKernel = kernels::PhiKernel<f64>;
pub type Potential = potentials::Potential<f64>;
pub type HeteroclinicProfile = cauchy::HeteroclinicProfile<f64>;
pub type TruncationParams = mc_truncation::TruncationParams<f64>;
pub type DiscreteAction = minimizer::DiscreteAction<f64>;

pub type PhiKernelF32 = kernels::PhiKernel<f32>;
pub type PotentialF32 = potentials::Potential<f32>;
pub type HeteroclinicProfileF32 = cauchy::HeteroclinicProfile<f32>;
