//! Normal-theory inference for the coefficients.
//!
//! The robust estimator is asymptotically normal with the homoscedastic OLS
//! covariance `sigma^2 Sigma^-1 / n`, so intervals are built exactly as for
//! OLS with the residual `y - X beta_hat - alpha_hat` in place of the OLS
//! residual. `sigma2_hat` uses the divisor `n` (no degrees-of-freedom
//! correction) and the critical values are normal.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::data::RegressionData;
use crate::error::{Result, RobustError};
use crate::linalg::QrFactor;
use crate::solver::FitResult;
use crate::Float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<F> {
    pub lower: F,
    pub upper: F,
}

impl<F: Float> Interval<F> {
    pub fn contains(&self, value: F) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> F {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport<F> {
    pub beta_hat: Array1<F>,
    pub sigma2_hat: F,
    /// `X'X / n`.
    pub sigma_matrix_hat: Array2<F>,
    /// `sigma2_hat * (X'X)^-1`.
    pub beta_cov: Array2<F>,
    pub std_errors: Array1<F>,
    pub intervals: Vec<Interval<F>>,
    /// `beta_hat_j / se_j`, against `beta_j = 0`.
    pub z_stats: Array1<F>,
    pub level: F,
    /// Two-sided critical value used for the intervals.
    pub critical_value: F,
}

/// `(1/n) sum_i (y_i - x_i' beta_hat - alpha_hat_i)^2`.
pub fn sigma2_hat<F: Float>(data: &RegressionData<F>, fit: &FitResult<F>) -> Result<F> {
    check_fit(data, fit)?;
    let residual = &data.y() - &data.x().dot(&fit.beta_hat) - &fit.alpha_hat;
    Ok(residual.mapv(|r| r * r).sum() / F::cast(data.n() as f64))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn check_level<F: Float>(level: F) -> Result<()> {
    if !(level > F::zero() && level < F::one()) {
        return Err(RobustError::DomainError(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

fn check_fit<F: Float>(data: &RegressionData<F>, fit: &FitResult<F>) -> Result<()> {
    if fit.beta_hat.len() != data.k() || fit.alpha_hat.len() != data.n() {
        return Err(RobustError::DimensionMismatch(format!(
            "fit has {} coefficients and {} shifts, data is {} x {}",
            fit.beta_hat.len(),
            fit.alpha_hat.len(),
            data.n(),
            data.k()
        )));
    }
    Ok(())
}

/// Intervals `beta_hat_j +- z * sqrt(sigma2_hat (Sigma_hat^-1)_jj / n)` at `level`.
pub fn confidence_intervals<F: Float>(
    data: &RegressionData<F>,
    fit: &FitResult<F>,
    level: F,
) -> Result<InferenceReport<F>> {
    check_level(level)?;
    let sigma2 = sigma2_hat(data, fit)?;
    let qr = QrFactor::new(data.x())?;
    let z = F::cast(normal_quantile(1.0 - (1.0 - level.as_f64()) / 2.0));
    Ok(build_report(data, &qr, fit.beta_hat.clone(), sigma2, level, z))
}

/// Naive OLS of `y` on `X` with textbook homoscedastic inference: unbiased
/// `RSS / (n - K)` and Student-t critical values on `n - K` degrees of freedom.
pub fn ols_inference<F: Float>(data: &RegressionData<F>, level: F) -> Result<InferenceReport<F>> {
    check_level(level)?;
    let qr = QrFactor::new(data.x())?;
    let beta = qr.solve(data.y())?;
    let dof = (data.n() - data.k()) as f64;
    let residual = &data.y() - &data.x().dot(&beta);
    let sigma2 = residual.mapv(|r| r * r).sum() / F::cast(dof);
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - (1.0 - level.as_f64()) / 2.0);
    Ok(build_report(data, &qr, beta, sigma2, level, F::cast(t)))
}

fn build_report<F: Float>(
    data: &RegressionData<F>,
    qr: &QrFactor<F>,
    beta_hat: Array1<F>,
    sigma2: F,
    level: F,
    critical_value: F,
) -> InferenceReport<F> {
    let n = F::cast(data.n() as f64);
    let x = data.x();
    let sigma_matrix_hat = x.t().dot(&x) / n;
    let gram_inv = qr.gram_inverse();
    let k = data.k();
    let beta_cov = Array2::from_shape_fn((k, k), |(i, j)| {
        sigma2 * (gram_inv[[i, j]] + gram_inv[[j, i]]) / F::cast(2.0)
    });
    let std_errors: Array1<F> = beta_cov.diag().mapv(|v| v.sqrt());
    let intervals = beta_hat
        .iter()
        .zip(std_errors.iter())
        .map(|(&b, &se)| Interval {
            lower: b - critical_value * se,
            upper: b + critical_value * se,
        })
        .collect();
    let z_stats = &beta_hat / &std_errors;
    InferenceReport {
        beta_hat,
        sigma2_hat: sigma2,
        sigma_matrix_hat,
        beta_cov,
        std_errors,
        intervals,
        z_stats,
        level,
        critical_value,
    }
}
