//! Outlier-robust linear regression by square-root lasso.
//!
//! The model is `y_i = x_i' beta + alpha_i + eps_i` with a sparse vector of
//! per-observation shifts `alpha`. Both are estimated jointly by
//!
//! ```text
//!     min over (beta, alpha):  ||y - X beta - alpha||_2 / sqrt(n) + (lambda / n) ||alpha||_1
//! ```
//!
//! whose penalty level does not depend on the noise variance. The crate
//! provides the solver ([`solver`]), penalty selection ([`penalty`]),
//! normal-theory inference ([`inference`]) and a Monte-Carlo study harness
//! ([`simulation`]). Numerical code is generic over [`Float`] (`f32`/`f64`);
//! the `*64` aliases below fix the common `f64` case.

// `!(a > b)` comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod penalty;
mod scalar;
pub mod simulation;
pub mod solver;

pub use data::RegressionData;
pub use error::{Result, RobustError};
pub use inference::{confidence_intervals, ols_inference, sigma2_hat, InferenceReport, Interval};
pub use linalg::{least_squares, QrFactor};
pub use penalty::{
    calibrate_lambda_monte_carlo, lambda_closed_form, select_lambda, NoiseDistribution, PenaltyKind,
    PenaltyRule,
};
pub use scalar::Float;
pub use simulation::{generate, run_study, DgpConfig, SimulatedSample, StudyReport};
pub use solver::{
    fit, objective, soft_threshold_update, FitConfig, FitResult, FitWarning, InitPolicy, IterationState,
    PenaltyScale,
};

pub type RegressionData64 = RegressionData<f64>;
pub type FitConfig64 = FitConfig<f64>;
pub type FitResult64 = FitResult<f64>;
pub type PenaltyRule64 = PenaltyRule<f64>;
pub type InferenceReport64 = InferenceReport<f64>;
pub type DgpConfig64 = DgpConfig<f64>;

pub type RegressionData32 = RegressionData<f32>;
pub type FitConfig32 = FitConfig<f32>;
pub type FitResult32 = FitResult<f32>;
