//! Penalty level selection.
//!
//! The penalty must dominate `S = 2 sqrt(n) ||M_X e||_inf / ||M_X e||_2` with
//! probability close to one. Closed-form rules bound `S` from the tails of the
//! noise; the Monte-Carlo calibrator estimates a quantile of `S` directly for
//! the design at hand. `S` does not depend on the noise scale, so unit-variance
//! draws suffice.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RobustError};
use crate::linalg::QrFactor;
use crate::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `2 c sqrt(2 ln n)`, valid for any `c > 1` under Gaussian noise.
    Gaussian,
    /// `c sqrt(ln n)`.
    Subgaussian,
    /// `c ln n`.
    Subexponential,
    /// Empirical quantile of `S` under simulated noise.
    MonteCarlo,
    Fixed,
}

/// Noise law simulated by the Monte-Carlo calibrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    #[default]
    Gaussian,
    Laplace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRule<F> {
    pub kind: PenaltyKind,
    pub c: F,
    /// Quantile level for `MonteCarlo`.
    pub level: F,
    /// Number of simulated noise vectors for `MonteCarlo`.
    pub draws: usize,
    pub fixed_value: F,
    pub noise: NoiseDistribution,
}

impl<F: Float> PenaltyRule<F> {
    pub const DEFAULT_GAUSSIAN_C: f64 = 1.005;
    pub const DEFAULT_LEVEL: f64 = 0.95;
    pub const DEFAULT_DRAWS: usize = 1000;
    pub const MIN_DRAWS: usize = 100;

    fn with_kind(kind: PenaltyKind, c: F) -> Self {
        Self {
            kind,
            c,
            level: F::cast(Self::DEFAULT_LEVEL),
            draws: Self::DEFAULT_DRAWS,
            fixed_value: F::zero(),
            noise: NoiseDistribution::Gaussian,
        }
    }

    /// Gaussian rule with `c = 1.005`, i.e. `lambda = 2.01 sqrt(2 ln n)`.
    pub fn gaussian() -> Self {
        Self::with_kind(PenaltyKind::Gaussian, F::cast(Self::DEFAULT_GAUSSIAN_C))
    }

    pub fn gaussian_with_c(c: F) -> Self {
        Self::with_kind(PenaltyKind::Gaussian, c)
    }

    pub fn subgaussian(c: F) -> Self {
        Self::with_kind(PenaltyKind::Subgaussian, c)
    }

    pub fn subexponential(c: F) -> Self {
        Self::with_kind(PenaltyKind::Subexponential, c)
    }

    pub fn fixed(value: F) -> Self {
        let mut rule = Self::with_kind(PenaltyKind::Fixed, F::one());
        rule.fixed_value = value;
        rule
    }

    pub fn monte_carlo(level: F, draws: usize) -> Self {
        let mut rule = Self::with_kind(PenaltyKind::MonteCarlo, F::one());
        rule.level = level;
        rule.draws = draws;
        rule
    }

    pub fn with_noise(mut self, noise: NoiseDistribution) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PenaltyKind::Gaussian if !(self.c > F::one()) => Err(RobustError::InvalidRule(format!(
                "gaussian rule needs c > 1, got {}",
                self.c
            ))),
            PenaltyKind::Subgaussian | PenaltyKind::Subexponential if !(self.c > F::zero()) => Err(
                RobustError::InvalidRule(format!("c must be positive, got {}", self.c)),
            ),
            PenaltyKind::Fixed if !(self.fixed_value >= F::zero()) || !self.fixed_value.is_finite() => {
                Err(RobustError::InvalidRule(format!(
                    "fixed penalty must be finite and nonnegative, got {}",
                    self.fixed_value
                )))
            }
            PenaltyKind::MonteCarlo if !(self.level > F::zero() && self.level < F::one()) => Err(
                RobustError::InvalidRule(format!("level must lie in (0, 1), got {}", self.level)),
            ),
            PenaltyKind::MonteCarlo if self.draws < Self::MIN_DRAWS => Err(RobustError::InvalidRule(
                format!("need at least {} draws, got {}", Self::MIN_DRAWS, self.draws),
            )),
            _ => Ok(()),
        }
    }
}

/// Penalty from a closed-form rule for sample size `n` (natural logarithms).
pub fn lambda_closed_form<F: Float>(rule: &PenaltyRule<F>, n: usize) -> Result<F> {
    rule.validate()?;
    if rule.kind == PenaltyKind::Fixed {
        return Ok(rule.fixed_value);
    }
    if rule.kind == PenaltyKind::MonteCarlo {
        return Err(RobustError::InvalidRule(
            "monte_carlo rules need a design; use calibrate_lambda_monte_carlo".into(),
        ));
    }
    if n < 2 {
        return Err(RobustError::DomainError(format!(
            "closed-form penalties need n >= 2, got {n}"
        )));
    }
    let log_n = F::cast(n as f64).ln();
    Ok(match rule.kind {
        PenaltyKind::Gaussian => F::cast(2.0) * rule.c * (F::cast(2.0) * log_n).sqrt(),
        PenaltyKind::Subgaussian => rule.c * log_n.sqrt(),
        PenaltyKind::Subexponential => rule.c * log_n,
        PenaltyKind::Fixed | PenaltyKind::MonteCarlo => unreachable!(),
    })
}

/// `2 sqrt(n) ||v||_inf / ||v||_2` for a residual vector `v = M_X e`; NaN when `v = 0`.
pub fn score_ratio<F: Float>(residual: ArrayView1<'_, F>) -> F {
    let sup = residual.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    let n = F::cast(residual.len() as f64);
    let scaled_sq: F = residual.iter().map(|&v| (v / sup) * (v / sup)).sum();
    F::cast(2.0) * (n / scaled_sq).sqrt()
}

/// Noise vector number `draw` of the stream seeded by `seed`.
///
/// Each draw owns its own ChaCha stream, so any subset of draws can be
/// regenerated independently of the others.
pub fn noise_draw<F: Float>(n: usize, noise: NoiseDistribution, seed: u64, draw: usize) -> Array1<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw as u64);
    match noise {
        NoiseDistribution::Gaussian => {
            Array1::from_shape_fn(n, |_| F::cast(rng.sample::<f64, _>(StandardNormal)))
        }
        NoiseDistribution::Laplace => Array1::from_shape_fn(n, |_| {
            let u: f64 = rng.gen_range(-0.5..0.5);
            F::cast(-u.signum() * (1.0 - 2.0 * u.abs()).ln())
        }),
    }
}

/// Simulated values of `S` for the design `x`, one per draw, in draw order.
pub fn monte_carlo_scores<F: Float>(
    x: ArrayView2<'_, F>,
    rule: &PenaltyRule<F>,
    rng_seed: u64,
) -> Result<Vec<F>> {
    if rule.kind != PenaltyKind::MonteCarlo {
        return Err(RobustError::InvalidRule(format!(
            "expected a monte_carlo rule, got {:?}",
            rule.kind
        )));
    }
    rule.validate()?;
    let qr = QrFactor::new(x)?;
    (0..rule.draws)
        .map(|d| {
            let eps = noise_draw::<F>(x.nrows(), rule.noise, rng_seed, d);
            Ok(score_ratio(qr.residual(eps.view())?.view()))
        })
        .collect()
}

/// Empirical `level`-quantile of `S`: the `ceil(level * draws)`-th order statistic.
pub fn calibrate_lambda_monte_carlo<F: Float>(
    x: ArrayView2<'_, F>,
    rule: &PenaltyRule<F>,
    rng_seed: u64,
) -> Result<F> {
    let mut scores = monte_carlo_scores(x, rule, rng_seed)?;
    if let Some(d) = scores.iter().position(|s| !s.is_finite()) {
        return Err(RobustError::NonFinite(format!(
            "score of draw {d} (noise lies in the column space)"
        )));
    }
    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    Ok(order_statistic(&scores, rule.level))
}

fn order_statistic<F: Float>(sorted: &[F], level: F) -> F {
    let rank = (level.as_f64() * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Penalty for any rule: closed form, or calibrated on `x` for `MonteCarlo`.
pub fn select_lambda<F: Float>(rule: &PenaltyRule<F>, x: ArrayView2<'_, F>, rng_seed: u64) -> Result<F> {
    match rule.kind {
        PenaltyKind::MonteCarlo => calibrate_lambda_monte_carlo(x, rule, rng_seed),
        _ => lambda_closed_form(rule, x.nrows()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn closed_forms() {
        let lam: f64 = lambda_closed_form(&PenaltyRule::gaussian(), 100).unwrap();
        // 2.01 * sqrt(2 ln 100) = 6.10005706012828833...
        assert_abs_diff_eq!(lam, 6.100057060128288, epsilon = 1e-12);
        assert_eq!(lambda_closed_form(&PenaltyRule::fixed(3.7), 10).unwrap(), 3.7);
        let lam: f64 = lambda_closed_form(&PenaltyRule::subexponential(1.0), 7).unwrap();
        assert_abs_diff_eq!(lam, 1.945910149055313, epsilon = 1e-14);
        let lam: f64 = lambda_closed_form(&PenaltyRule::subgaussian(2.0), 7).unwrap();
        assert_abs_diff_eq!(lam, 2.0 * 1.945910149055313f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn closed_form_errors() {
        let mc = PenaltyRule::<f64>::monte_carlo(0.95, 1000);
        assert!(matches!(
            lambda_closed_form(&mc, 100),
            Err(RobustError::InvalidRule(_))
        ));
        assert!(matches!(
            lambda_closed_form(&PenaltyRule::<f64>::gaussian(), 1),
            Err(RobustError::DomainError(_))
        ));
        assert!(matches!(
            lambda_closed_form(&PenaltyRule::gaussian_with_c(1.0), 100),
            Err(RobustError::InvalidRule(_))
        ));
        assert!(matches!(
            lambda_closed_form(&PenaltyRule::subgaussian(0.0), 100),
            Err(RobustError::InvalidRule(_))
        ));
    }

    #[test]
    fn monte_carlo_rule_validation() {
        let x = Array2::<f64>::ones((5, 1));
        for rule in [
            PenaltyRule::monte_carlo(1.0, 1000),
            PenaltyRule::monte_carlo(0.0, 1000),
            PenaltyRule::monte_carlo(0.9, 99),
        ] {
            assert!(matches!(
                calibrate_lambda_monte_carlo(x.view(), &rule, 1),
                Err(RobustError::InvalidRule(_))
            ));
        }
        assert!(matches!(
            calibrate_lambda_monte_carlo(x.view(), &PenaltyRule::gaussian(), 1),
            Err(RobustError::InvalidRule(_))
        ));
    }

    #[test]
    fn two_point_intercept_design_is_exactly_two() {
        let x = array![[1.0], [1.0]];
        let rule = PenaltyRule::monte_carlo(0.95, 200);
        let scores = monte_carlo_scores(x.view(), &rule, 3).unwrap();
        assert!(scores.iter().all(|s: &f64| (s - 2.0).abs() < 1e-12));
        let lam = calibrate_lambda_monte_carlo(x.view(), &rule, 3).unwrap();
        assert_abs_diff_eq!(lam, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_design() {
        let x = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        let rule = PenaltyRule::monte_carlo(0.95, 100);
        assert!(matches!(
            calibrate_lambda_monte_carlo(x.view(), &rule, 0),
            Err(RobustError::RankDeficient { .. })
        ));
    }

    #[test]
    fn order_statistic_is_inclusive_ceiling() {
        let sorted: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(order_statistic(&sorted, 0.95), 10.0);
        assert_eq!(order_statistic(&sorted, 0.9), 9.0);
        assert_eq!(order_statistic(&sorted, 0.91), 10.0);
        assert_eq!(order_statistic(&sorted, 0.01), 1.0);
    }

    #[test]
    fn draws_are_reproducible_and_distinct() {
        let a = noise_draw::<f64>(20, NoiseDistribution::Gaussian, 9, 4);
        let b = noise_draw::<f64>(20, NoiseDistribution::Gaussian, 9, 4);
        let c = noise_draw::<f64>(20, NoiseDistribution::Gaussian, 9, 5);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let l = noise_draw::<f64>(20_000, NoiseDistribution::Laplace, 9, 0);
        let var = l.mapv(|v| v * v).mean().unwrap();
        assert!((var - 2.0).abs() < 0.1, "Laplace(1) variance is 2, got {var}");
    }
}
