//! Exact worst-case analysis of data-driven newsvendor policies.
//!
//! The crate evaluates the worst-case relative regret of order-statistic
//! policies (SAA and arbitrary mixtures) in closed form, solves for the
//! minimax-optimal policy, evaluates classical large-deviation bounds and
//! asymptotic constants, and estimates instance-dependent performance by
//! seeded Monte Carlo simulation.
//!
//! Modules mirror the analysis pipeline:
//!
//! - [`numerics`]: binomial tails, normal cdf, quadrature, 1-D searches
//! - [`model`]: problem parameters, policies, demand distributions
//! - [`bernoulli_regret`]: closed-form regret against Bernoulli demand and
//!   the worst-case evaluator
//! - [`general_regret`]: exact costs against arbitrary distributions
//! - [`minimax`]: the optimal two-point policy solver
//! - [`bounds`]: instance-independent bounds and sample-size thresholds
//! - [`asymptotics`]: large-sample constants and diagnostics
//! - [`simulation`]: reproducible Monte Carlo estimation

// Validation deliberately writes `!(x > 0.0)` so that NaN inputs are
// rejected alongside out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bernoulli_regret;
pub mod bounds;
pub mod general_regret;
pub mod minimax;
pub mod model;
pub mod numerics;
pub mod simulation;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("bracket error: {0}")]
    Bracket(&'static str),
    #[error("iteration limit exceeded in {0}")]
    IterationLimit(&'static str),
    #[error("failed to converge: {0}")]
    NonConvergence(&'static str),
    #[error("unsupported policy form: {0}")]
    UnsupportedPolicyForm(&'static str),
    #[error("diverging quantity: {0}")]
    Divergence(&'static str),
    #[error("scan horizon {n_cap} exhausted without satisfying the target")]
    Horizon { n_cap: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("enumeration of {0} candidates exceeds the 1e7 guard")]
    CombinatorialExplosion(u128),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(&'static str),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub use bernoulli_regret::{saa_curve, saa_policy, worst_case_regret, SideRestriction};
pub use bounds::{levi_bound, threshold, ThresholdMethod, ThresholdResult};
pub use minimax::{derandomize, optimal_curve, solve_minimax, MinimaxSolution};
pub use model::{DemandDistribution, Policy, PolicyForm, ProblemParams, RegretEvaluation};
pub use numerics::Tolerance;
pub use simulation::{simulate_regret, simulate_threshold, SimConfig, SimEstimate};
