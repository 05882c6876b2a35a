//! Alternating minimization for the outlier-robust square-root lasso
//!
//! ```text
//!     minimize over (beta, alpha):  ||y - X beta - alpha||_2 / sqrt(n) + (lambda / n) ||alpha||_1
//! ```
//!
//! Writing the root loss as `min_{s > 0} s/2 + ||r||^2 / (2 s)` turns the
//! problem into a jointly convex one in `(beta, alpha, s)`, minimized one
//! block at a time:
//!
//! 1. `beta`: least squares of `y - alpha` on `X`;
//! 2. `alpha`: soft thresholding of `y - X beta` at `lambda * s / sqrt(n)`;
//! 3. `s`: the norm of the new residual `y - X beta - alpha`.
//!
//! Each block step minimizes the joint objective exactly, so the concentrated
//! objective recorded in [`FitResult::objective_trace`] never increases.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::RegressionData;
use crate::error::{Result, RobustError};
use crate::linalg::QrFactor;
use crate::Float;

/// How `alpha` is initialised before the first block step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// `alpha = 0`.
    #[default]
    ZeroAlpha,
    /// `alpha` = soft-thresholded OLS residuals.
    OlsResidualAlpha,
}

/// Which scaling of `lambda` the solver minimizes.
///
/// With `Concentrated` the solver minimizes
/// `||y - X b - a||_2 / sqrt(n) + (lambda / n) ||a||_1` and thresholds at
/// `lambda * s / sqrt(n)`. `JointObjective` puts `lambda / (2 sqrt(n))` in
/// front of `||a||_1` in the sigma-augmented objective, which amounts to the
/// concentrated problem at `lambda / 2` and a threshold of `lambda * s / (2 sqrt(n))`.
/// The published Monte-Carlo tables were produced under the latter scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyScale {
    #[default]
    Concentrated,
    JointObjective,
}

impl PenaltyScale {
    /// Penalty level of the concentrated objective that is actually minimized.
    pub fn effective<F: Float>(self, lambda: F) -> F {
        match self {
            PenaltyScale::Concentrated => lambda,
            PenaltyScale::JointObjective => lambda / F::cast(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig<F> {
    /// Penalty level, nonnegative.
    pub lambda: F,
    pub max_iters: usize,
    /// Stop once the relative change of the objective falls below this.
    pub rel_tol: F,
    /// When set, stopping additionally requires the largest change of any
    /// coefficient or shift in one sweep to be at most
    /// `step_tol * (1 + max |coefficient|)`. The objective is locally
    /// quadratic near the minimizer, so `rel_tol` alone resolves the iterates
    /// only to about the square root of its value.
    pub step_tol: Option<F>,
    /// Lower guard on `s` in the threshold. `None` uses `1e-12 * ||y||_2`.
    pub abs_sigma_floor: Option<F>,
    pub init_policy: InitPolicy,
    pub penalty_scale: PenaltyScale,
}

impl<F: Float> FitConfig<F> {
    pub const DEFAULT_MAX_ITERS: usize = 100;
    pub const DEFAULT_REL_TOL: f64 = 1e-10;
    pub const RELATIVE_SIGMA_FLOOR: f64 = 1e-12;

    pub fn new(lambda: F) -> Self {
        Self {
            lambda,
            max_iters: Self::DEFAULT_MAX_ITERS,
            rel_tol: F::cast(Self::DEFAULT_REL_TOL),
            step_tol: None,
            abs_sigma_floor: None,
            init_policy: InitPolicy::ZeroAlpha,
            penalty_scale: PenaltyScale::Concentrated,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: F) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_step_tol(mut self, step_tol: F) -> Self {
        self.step_tol = Some(step_tol);
        self
    }

    pub fn with_sigma_floor(mut self, floor: F) -> Self {
        self.abs_sigma_floor = Some(floor);
        self
    }

    pub fn with_init_policy(mut self, policy: InitPolicy) -> Self {
        self.init_policy = policy;
        self
    }

    pub fn with_penalty_scale(mut self, scale: PenaltyScale) -> Self {
        self.penalty_scale = scale;
        self
    }

    /// Penalty of the concentrated objective after applying `penalty_scale`.
    pub fn effective_lambda(&self) -> F {
        self.penalty_scale.effective(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= F::zero()) || !self.lambda.is_finite() {
            return Err(RobustError::InvalidConfig(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if self.max_iters < 1 {
            return Err(RobustError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > F::zero()) {
            return Err(RobustError::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if let Some(step) = self.step_tol {
            if !(step > F::zero()) {
                return Err(RobustError::InvalidConfig(format!(
                    "step_tol must be positive, got {step}"
                )));
            }
        }
        if let Some(floor) = self.abs_sigma_floor {
            if !(floor > F::zero()) || !floor.is_finite() {
                return Err(RobustError::InvalidConfig(format!(
                    "abs_sigma_floor must be positive, got {floor}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    /// The residual norm fell below the sigma floor: the data are (numerically)
    /// interpolated and the root loss is not differentiable there.
    DegenerateResidual { iteration: usize },
}

/// Iterate after a completed block sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState<F> {
    pub beta: Array1<F>,
    pub alpha: Array1<F>,
    /// `||y - X beta - alpha||_2`.
    pub sigma: F,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<F> {
    pub beta_hat: Array1<F>,
    pub alpha_hat: Array1<F>,
    /// `||y - X beta_hat - alpha_hat||_2 / sqrt(n)`.
    pub sigma_hat: F,
    /// Objective at the start, after each sweep, and after the closing beta step.
    pub objective_trace: Vec<F>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Indices with `alpha_hat[i] != 0`, increasing.
    pub outlier_indices: Vec<usize>,
    /// Penalty of the concentrated objective that was minimized.
    pub lambda_effective: F,
    pub warnings: Vec<FitWarning>,
}

impl<F: Float> FitResult<F> {
    /// `||y - X beta_hat - alpha_hat||_2`, the scale used inside the iteration.
    pub fn residual_norm(&self) -> F {
        self.sigma_hat * F::cast(self.alpha_hat.len() as f64).sqrt()
    }

    /// Objective value at the returned estimate.
    pub fn final_objective(&self) -> F {
        *self.objective_trace.last().expect("trace is never empty")
    }

    pub fn is_degenerate(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, FitWarning::DegenerateResidual { .. }))
    }
}

/// `||y - X beta - alpha||_2 / sqrt(n) + (lambda / n) ||alpha||_1`.
pub fn objective<F: Float>(
    data: &RegressionData<F>,
    beta: ArrayView1<'_, F>,
    alpha: ArrayView1<'_, F>,
    lambda: F,
) -> Result<F> {
    if beta.len() != data.k() || alpha.len() != data.n() {
        return Err(RobustError::DimensionMismatch(format!(
            "beta has length {} (expected {}), alpha has length {} (expected {})",
            beta.len(),
            data.k(),
            alpha.len(),
            data.n()
        )));
    }
    let residual = &data.y() - &data.x().dot(&beta) - alpha;
    Ok(concentrated(norm2(residual.view()), alpha, lambda, data.n()))
}

fn concentrated<F: Float>(residual_norm: F, alpha: ArrayView1<'_, F>, lambda: F, n: usize) -> F {
    let n = F::cast(n as f64);
    residual_norm / n.sqrt() + lambda / n * alpha.iter().map(|a| a.abs()).sum::<F>()
}

/// Elementwise soft thresholding: zero when `|r_i| <= threshold`, otherwise
/// `r_i - sign(r_i) * threshold`.
pub fn soft_threshold_update<F: Float>(residual: ArrayView1<'_, F>, threshold: F) -> Array1<F> {
    debug_assert!(threshold >= F::zero(), "negative threshold {threshold}");
    residual.mapv(|r| {
        if r.abs() <= threshold {
            F::zero()
        } else {
            r - r.sign() * threshold
        }
    })
}

/// Fits the robust estimator.
pub fn fit<F: Float>(data: &RegressionData<F>, config: &FitConfig<F>) -> Result<FitResult<F>> {
    fit_observed(data, config, |_| {})
}

/// As [`fit`], calling `observe` with the iterate after every sweep.
pub fn fit_observed<F, O>(
    data: &RegressionData<F>,
    config: &FitConfig<F>,
    mut observe: O,
) -> Result<FitResult<F>>
where
    F: Float,
    O: FnMut(&IterationState<F>),
{
    config.validate()?;
    let qr = QrFactor::new(data.x())?;
    let x = data.x();
    let y = data.y();
    let n = data.n();
    let root_n = F::cast(n as f64).sqrt();
    let lambda = config.effective_lambda();
    let floor = config
        .abs_sigma_floor
        .unwrap_or_else(|| F::cast(FitConfig::<F>::RELATIVE_SIGMA_FLOOR) * norm2(y))
        .max(F::min_positive_value());

    let mut beta = qr.solve(y)?;
    let ols_residual = &y - &x.dot(&beta);
    let mut alpha = match config.init_policy {
        InitPolicy::ZeroAlpha => Array1::zeros(n),
        InitPolicy::OlsResidualAlpha => {
            let s = norm2(ols_residual.view()).max(floor);
            soft_threshold_update(ols_residual.view(), lambda * s / root_n)
        }
    };
    let mut sigma = norm2((&ols_residual - &alpha).view());
    let mut trace = vec![concentrated(sigma, alpha.view(), lambda, n)];
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations_used = 0;

    for t in 1..=config.max_iters {
        let degenerate = sigma < floor;
        let threshold = lambda * sigma.max(floor) / root_n;

        let next_beta = qr.solve((&y - &alpha).view())?;
        let residual = &y - &x.dot(&next_beta);
        let next_alpha = soft_threshold_update(residual.view(), threshold);
        let step =
            max_abs_diff(next_beta.view(), beta.view()).max(max_abs_diff(next_alpha.view(), alpha.view()));
        let size = max_abs(next_beta.view()).max(max_abs(next_alpha.view()));
        beta = next_beta;
        alpha = next_alpha;
        sigma = norm2((&residual - &alpha).view());
        if !sigma.is_finite() || beta.iter().any(|b| !b.is_finite()) {
            return Err(RobustError::NonFinite(format!("iterate {t}")));
        }

        let value = concentrated(sigma, alpha.view(), lambda, n);
        let previous = *trace.last().expect("trace is never empty");
        trace.push(value);
        iterations_used = t;
        observe(&IterationState {
            beta: beta.clone(),
            alpha: alpha.clone(),
            sigma,
            t,
        });

        if degenerate {
            warnings.push(FitWarning::DegenerateResidual { iteration: t });
            converged = true;
            break;
        }
        let scale = previous.abs().max(F::min_positive_value());
        let settled = config.step_tol.is_none_or(|tol| step <= tol * (F::one() + size));
        if (previous - value).abs() / scale < config.rel_tol && settled {
            converged = true;
            break;
        }
    }

    // Closing beta step: beta_hat is the least-squares fit of y - alpha_hat.
    beta = qr.solve((&y - &alpha).view())?;
    let sigma_final = norm2((&y - &x.dot(&beta) - &alpha).view());
    trace.push(concentrated(sigma_final, alpha.view(), lambda, n));
    if sigma_final < floor && warnings.is_empty() {
        warnings.push(FitWarning::DegenerateResidual {
            iteration: iterations_used,
        });
    }

    let outlier_indices = alpha
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != F::zero())
        .map(|(i, _)| i)
        .collect();

    Ok(FitResult {
        beta_hat: beta,
        alpha_hat: alpha,
        sigma_hat: sigma_final / root_n,
        objective_trace: trace,
        converged,
        iterations_used,
        outlier_indices,
        lambda_effective: lambda,
        warnings,
    })
}

fn max_abs<F: Float>(v: ArrayView1<'_, F>) -> F {
    v.iter().fold(F::zero(), |m, a| m.max(a.abs()))
}

fn max_abs_diff<F: Float>(a: ArrayView1<'_, F>, b: ArrayView1<'_, F>) -> F {
    a.iter()
        .zip(b.iter())
        .fold(F::zero(), |m, (u, v)| m.max((*u - *v).abs()))
}

pub(crate) fn norm2<F: Float>(v: ArrayView1<'_, F>) -> F {
    // Scaled accumulation so large responses do not overflow in f32.
    let scale = v.iter().fold(F::zero(), |m, a| m.max(a.abs()));
    if scale == F::zero() || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|&a| (a / scale) * (a / scale)).sum::<F>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn line_data() -> RegressionData<f64> {
        let x = array![
            [1.0, -1.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [1.0, 3.0],
            [1.0, 4.0]
        ];
        let y = array![-1.1, 1.2, 2.9, 5.2, 30.0, 9.1];
        RegressionData::new(x, y).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(
            soft_threshold_update(array![0.5, -0.3].view(), 1.0),
            array![0.0, 0.0]
        );
        assert_eq!(
            soft_threshold_update(array![3.0, -3.0].view(), 1.0),
            array![2.0, -2.0]
        );
        assert_eq!(soft_threshold_update(array![1.0].view(), 1.0), array![0.0]);
        let r = array![0.7, -2.0, 0.0, 1e-300];
        assert_eq!(soft_threshold_update(r.view(), 0.0), r);
    }

    #[test]
    fn objective_zero_residual_and_zero_alpha() {
        let x = array![[1.0], [1.0], [1.0], [1.0]];
        let beta = array![2.0];
        let alpha = array![0.0, 3.0, 0.0, -1.0];
        let y = x.dot(&beta) + &alpha;
        let data = RegressionData::new(x.clone(), y).unwrap();
        let value = objective(&data, beta.view(), alpha.view(), 5.0).unwrap();
        assert_abs_diff_eq!(value, 5.0 / 4.0 * 4.0, epsilon = 1e-14);

        let data = RegressionData::new(x, array![1.0, 2.0, 4.0, 8.0]).unwrap();
        let value = objective(&data, beta.view(), Array1::zeros(4).view(), 123.0).unwrap();
        // residual [-1, 0, 2, 6]
        assert_abs_diff_eq!(value, 41.0f64.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn objective_hand_evaluated() {
        // residual = y - x b - a = [0.5, -1.5, 0.0, 0.0]; ||.||_2 = sqrt(2.5); ||a||_1 = 4.5
        let x = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let beta = array![1.0, 0.5];
        let alpha = array![2.0, 0.0, -2.5, 0.0];
        let y = array![3.5, 0.0, -0.5, 2.5];
        let data = RegressionData::new(x, y).unwrap();
        let value = objective(&data, beta.view(), alpha.view(), 0.8).unwrap();
        let expected = 2.5f64.sqrt() / 2.0 + 0.8 / 4.0 * 4.5;
        assert_abs_diff_eq!(value, expected, epsilon = 1e-12);
    }

    #[test]
    fn objective_dimension_mismatch() {
        let data = line_data();
        let err = objective(&data, array![1.0].view(), Array1::zeros(6).view(), 1.0).unwrap_err();
        assert!(matches!(err, RobustError::DimensionMismatch(_)));
    }

    #[test]
    fn noiseless_data_is_flagged_degenerate() {
        let x = array![[1.0, 0.2], [1.0, -0.4], [1.0, 1.3], [1.0, 2.0], [1.0, -1.0]];
        let beta = array![0.5, -2.0];
        let data = RegressionData::new(x.clone(), x.dot(&beta)).unwrap();
        let result = fit(&data, &FitConfig::new(3.0)).unwrap();
        assert_abs_diff_eq!(result.beta_hat[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(result.beta_hat[1], -2.0, epsilon = 1e-10);
        assert!(result.alpha_hat.iter().all(|&a| a == 0.0));
        assert!(result.converged);
        assert!(result.is_degenerate());
        assert!(result.sigma_hat < 1e-12);
    }

    #[test]
    fn huge_penalty_gives_ols() {
        let data = line_data();
        let result = fit(&data, &FitConfig::new(1e6)).unwrap();
        let ols = QrFactor::new(data.x()).unwrap().solve(data.y()).unwrap();
        assert!(result.outlier_indices.is_empty());
        for (a, b) in result.beta_hat.iter().zip(ols.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn flags_gross_outlier() {
        let data = line_data();
        let config = FitConfig::new(1.5).with_max_iters(5000).with_rel_tol(1e-14);
        let result = fit(&data, &config).unwrap();
        assert!(result.converged);
        assert_eq!(result.outlier_indices, vec![4]);
        assert!(result.alpha_hat[4] > 15.0);
        for w in result.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn init_policies_reach_same_minimizer() {
        let data = line_data();
        let base = FitConfig::new(1.5).with_max_iters(10_000).with_rel_tol(1e-15);
        let a = fit(&data, &base).unwrap();
        let b = fit(
            &data,
            &base.clone().with_init_policy(InitPolicy::OlsResidualAlpha),
        )
        .unwrap();
        for (u, v) in a.beta_hat.iter().zip(b.beta_hat.iter()) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-7);
        }
        assert_abs_diff_eq!(a.final_objective(), b.final_objective(), epsilon = 1e-12);
    }

    #[test]
    fn joint_scale_halves_the_penalty() {
        let data = line_data();
        let base = FitConfig::new(3.0).with_max_iters(10_000).with_rel_tol(1e-15);
        let joint = fit(
            &data,
            &base.clone().with_penalty_scale(PenaltyScale::JointObjective),
        )
        .unwrap();
        let half = fit(&data, &FitConfig { lambda: 1.5, ..base }).unwrap();
        assert_eq!(joint.lambda_effective, 1.5);
        assert_eq!(joint.beta_hat, half.beta_hat);
        assert_eq!(joint.alpha_hat, half.alpha_hat);
    }

    #[test]
    fn sigma_tracks_residual_norm_each_sweep() {
        let data = line_data();
        let config = FitConfig::new(1.5);
        let mut seen = 0;
        fit_observed(&data, &config, |state| {
            let r = &data.y() - &data.x().dot(&state.beta) - &state.alpha;
            assert_abs_diff_eq!(state.sigma, norm2(r.view()), epsilon = 1e-12);
            seen += 1;
        })
        .unwrap();
        assert!(seen >= 1);
    }

    #[test]
    fn rejects_bad_config_and_rank_deficiency() {
        let data = line_data();
        assert!(matches!(
            fit(&data, &FitConfig::new(-1.0)),
            Err(RobustError::InvalidConfig(_))
        ));
        assert!(matches!(
            fit(&data, &FitConfig::new(1.0).with_max_iters(0)),
            Err(RobustError::InvalidConfig(_))
        ));
        assert!(matches!(
            fit(&data, &FitConfig::new(1.0).with_rel_tol(0.0)),
            Err(RobustError::InvalidConfig(_))
        ));
        let x = Array2::from_shape_fn((5, 2), |(i, j)| (i as f64) * (j as f64 + 1.0));
        let collinear = RegressionData::new(x, array![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(
            fit(&collinear, &FitConfig::new(1.0)),
            Err(RobustError::RankDeficient { .. })
        ));
    }

    #[test]
    fn works_in_f32() {
        let x = array![
            [1.0f32, -1.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [1.0, 3.0],
            [1.0, 4.0]
        ];
        let y = array![-1.1f32, 1.2, 2.9, 5.2, 30.0, 9.1];
        let data = RegressionData::new(x, y).unwrap();
        let result = fit(
            &data,
            &FitConfig::new(1.5f32).with_max_iters(2000).with_rel_tol(1e-7),
        )
        .unwrap();
        assert_eq!(result.outlier_indices, vec![4]);
    }
}
