//! Contaminated-regression data generator and Monte-Carlo studies comparing
//! the robust estimator with naive OLS.
//!
//! Design: an intercept and one standard normal regressor `x2`. Observations
//! with `x2 >= q` where `P(x2 >= q) = p` are shifted by `outlier_scale * x2`,
//! so the realized number of outliers is Binomial(n, p).

use std::io::Write;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::RegressionData;
use crate::error::{Result, RobustError};
use crate::inference::{confidence_intervals, normal_quantile, ols_inference};
use crate::solver::{fit, FitConfig};
use crate::Float;

pub const COVERAGE_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig<F> {
    pub n: usize,
    /// Contamination probability in `[0, 0.5)`.
    pub p: f64,
    pub outlier_scale: F,
    pub seed: u64,
    /// Intercept and slope.
    pub beta_true: [F; 2],
}

impl<F: Float> DgpConfig<F> {
    pub fn new(n: usize, p: f64, seed: u64) -> Self {
        Self {
            n,
            p,
            outlier_scale: F::cast(5.0),
            seed,
            beta_true: [F::zero(), F::zero()],
        }
    }

    pub fn with_outlier_scale(mut self, scale: F) -> Self {
        self.outlier_scale = scale;
        self
    }

    pub fn with_beta(mut self, beta: [F; 2]) -> Self {
        self.beta_true = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(RobustError::InvalidConfig(format!(
                "n must be at least 3, got {}",
                self.n
            )));
        }
        if !(0.0..0.5).contains(&self.p) {
            return Err(RobustError::InvalidConfig(format!(
                "contamination p must lie in [0, 0.5), got {}",
                self.p
            )));
        }
        if !self.outlier_scale.is_finite() || self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(RobustError::InvalidConfig("non-finite DGP parameter".into()));
        }
        Ok(())
    }

    /// Contamination cutoff `q` with `P(N(0,1) >= q) = p`; `+inf` when `p = 0`.
    pub fn cutoff(&self) -> f64 {
        if self.p == 0.0 {
            f64::INFINITY
        } else {
            normal_quantile(1.0 - self.p)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSample<F> {
    pub data: RegressionData<F>,
    pub alpha_true: Array1<F>,
    pub beta_true: Array1<F>,
}

/// Draws one sample. The regressor is drawn first, then the noise, both from a
/// ChaCha8 stream seeded with `config.seed`.
pub fn generate<F: Float>(config: &DgpConfig<F>) -> Result<SimulatedSample<F>> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x2: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let q = config.cutoff();

    let x = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { F::one() } else { F::cast(x2[i]) });
    let alpha = Array1::from_shape_fn(n, |i| {
        if x2[i] >= q {
            config.outlier_scale * F::cast(x2[i])
        } else {
            F::zero()
        }
    });
    let beta = Array1::from(config.beta_true.to_vec());
    let y = x.dot(&beta) + &alpha + Array1::from_shape_fn(n, |i| F::cast(eps[i]));
    Ok(SimulatedSample {
        data: RegressionData::new(x, y)?,
        alpha_true: alpha,
        beta_true: beta,
    })
}

/// Seed of replication `r` under master seed `seed` (SplitMix64 finalizer).
pub fn replication_seed(seed: u64, replication: usize) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(replication as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub robust_beta: Vec<f64>,
    pub ols_beta: Vec<f64>,
    pub robust_covers: Vec<bool>,
    pub ols_covers: Vec<bool>,
    pub true_outliers: usize,
    pub flagged_outliers: usize,
    /// `||alpha_hat - alpha||_1 / n`.
    pub alpha_l1_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    /// Signed mean of `beta_hat_j - beta_j`.
    pub bias: f64,
    /// Variance of `beta_hat_j` across replications, divisor R.
    pub variance: f64,
    pub mse: f64,
    pub coverage: f64,
}

impl CoefficientSummary {
    fn from_draws(errors: &[f64], covers: &[bool]) -> Self {
        let r = errors.len() as f64;
        let bias = errors.iter().sum::<f64>() / r;
        let variance = errors.iter().map(|e| (e - bias).powi(2)).sum::<f64>() / r;
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / r;
        let coverage = covers.iter().filter(|&&c| c).count() as f64 / r;
        Self {
            bias,
            variance,
            mse,
            coverage,
        }
    }

    /// Monte-Carlo standard error of the bias.
    pub fn bias_std_error(&self, replications: usize) -> f64 {
        (self.variance / replications as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub coefficients: Vec<CoefficientSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub n: usize,
    pub p: f64,
    pub outlier_scale: f64,
    pub beta_true: [f64; 2],
    pub lambda: f64,
    pub lambda_effective: f64,
    pub seed: u64,
    pub replications: usize,
    /// Replications dropped because a fit failed.
    pub failures: usize,
    pub robust: EstimatorSummary,
    pub naive_ols: EstimatorSummary,
    pub mean_iterations: f64,
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

impl StudyReport {
    /// Writes the four-row bias / variance / MSE / coverage table with columns
    /// `value,p,n,robust_b1,ols_b1,robust_b2,ols_b2`. Bias is reported in
    /// absolute value.
    pub fn write_table_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| RobustError::Io(format!("cannot write table: {e}"));
        w.write_record(["value", "p", "n", "robust_b1", "ols_b1", "robust_b2", "ols_b2"])
            .map_err(io)?;
        type Cell = fn(&CoefficientSummary) -> f64;
        let rows: [(&str, Cell); 4] = [
            ("bias", |c| c.bias.abs()),
            ("variance", |c| c.variance),
            ("MSE", |c| c.mse),
            ("coverage", |c| c.coverage),
        ];
        for (name, value) in rows {
            let mut record = vec![name.to_string(), self.p.to_string(), self.n.to_string()];
            for j in 0..2 {
                record.push(format!("{}", value(&self.robust.coefficients[j])));
                record.push(format!("{}", value(&self.naive_ols.coefficients[j])));
            }
            w.write_record(&record).map_err(io)?;
        }
        w.flush()
            .map_err(|e| RobustError::Io(format!("cannot write table: {e}")))
    }

    /// One CSV row per replication.
    pub fn write_records_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| RobustError::Io(format!("cannot write records: {e}"));
        w.write_record([
            "replication",
            "seed",
            "robust_b1",
            "robust_b2",
            "ols_b1",
            "ols_b2",
            "robust_cover_b1",
            "robust_cover_b2",
            "ols_cover_b1",
            "ols_cover_b2",
            "true_outliers",
            "flagged_outliers",
            "alpha_l1_error",
            "iterations",
            "converged",
        ])
        .map_err(io)?;
        for r in &self.records {
            w.write_record(&[
                r.replication.to_string(),
                r.seed.to_string(),
                r.robust_beta[0].to_string(),
                r.robust_beta[1].to_string(),
                r.ols_beta[0].to_string(),
                r.ols_beta[1].to_string(),
                r.robust_covers[0].to_string(),
                r.robust_covers[1].to_string(),
                r.ols_covers[0].to_string(),
                r.ols_covers[1].to_string(),
                r.true_outliers.to_string(),
                r.flagged_outliers.to_string(),
                r.alpha_l1_error.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| RobustError::Io(format!("cannot write records: {e}")))
    }
}

fn run_replication<F: Float>(
    dgp: &DgpConfig<F>,
    fitcfg: &FitConfig<F>,
    replication: usize,
    seed: u64,
) -> Result<ReplicationRecord> {
    let sample = generate(&DgpConfig { seed, ..dgp.clone() })?;
    let data = &sample.data;
    let level = F::cast(COVERAGE_LEVEL);

    let robust = fit(data, fitcfg)?;
    let robust_ci = confidence_intervals(data, &robust, level)?;
    let ols = ols_inference(data, level)?;

    let covers = |intervals: &[crate::inference::Interval<F>]| -> Vec<bool> {
        intervals
            .iter()
            .zip(sample.beta_true.iter())
            .map(|(iv, &b)| iv.contains(b))
            .collect()
    };
    let alpha_l1_error = (&robust.alpha_hat - &sample.alpha_true)
        .mapv(|v| v.abs())
        .sum()
        .as_f64()
        / data.n() as f64;

    Ok(ReplicationRecord {
        replication,
        seed,
        robust_beta: robust.beta_hat.iter().map(|b| b.as_f64()).collect(),
        ols_beta: ols.beta_hat.iter().map(|b| b.as_f64()).collect(),
        robust_covers: covers(&robust_ci.intervals),
        ols_covers: covers(&ols.intervals),
        true_outliers: sample.alpha_true.iter().filter(|a| **a != F::zero()).count(),
        flagged_outliers: robust.outlier_indices.len(),
        alpha_l1_error,
        iterations: robust.iterations_used,
        converged: robust.converged,
    })
}

/// Runs `replications` independent replications; replication `r` uses seed
/// [`replication_seed`]`(seed, r)`. Replications whose fit fails with
/// `RankDeficient` are excluded and counted in `failures`; other errors abort.
pub fn run_study<F: Float>(
    dgp: &DgpConfig<F>,
    fitcfg: &FitConfig<F>,
    replications: usize,
    seed: u64,
) -> Result<StudyReport> {
    dgp.validate()?;
    fitcfg.validate()?;
    if replications < 2 {
        return Err(RobustError::InvalidConfig(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    let start = Instant::now();
    let mut records = Vec::with_capacity(replications);
    let mut failures = 0;
    for r in 0..replications {
        match run_replication(dgp, fitcfg, r, replication_seed(seed, r)) {
            Ok(record) => records.push(record),
            Err(RobustError::RankDeficient { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if records.len() < 2 {
        return Err(RobustError::RankDeficient { rank: 0, columns: 2 });
    }

    let beta_true = [dgp.beta_true[0].as_f64(), dgp.beta_true[1].as_f64()];
    let summarize = |beta: fn(&ReplicationRecord) -> &Vec<f64>,
                     covers: fn(&ReplicationRecord) -> &Vec<bool>| {
        EstimatorSummary {
            coefficients: (0..2)
                .map(|j| {
                    let errors: Vec<f64> = records.iter().map(|r| beta(r)[j] - beta_true[j]).collect();
                    let cov: Vec<bool> = records.iter().map(|r| covers(r)[j]).collect();
                    CoefficientSummary::from_draws(&errors, &cov)
                })
                .collect(),
        }
    };
    let robust = summarize(|r| &r.robust_beta, |r| &r.robust_covers);
    let naive_ols = summarize(|r| &r.ols_beta, |r| &r.ols_covers);
    let mean_iterations = records.iter().map(|r| r.iterations as f64).sum::<f64>() / records.len() as f64;

    Ok(StudyReport {
        n: dgp.n,
        p: dgp.p,
        outlier_scale: dgp.outlier_scale.as_f64(),
        beta_true,
        lambda: fitcfg.lambda.as_f64(),
        lambda_effective: fitcfg.effective_lambda().as_f64(),
        seed,
        replications: records.len(),
        failures,
        robust,
        naive_ols,
        mean_iterations,
        runtime_seconds: start.elapsed().as_secs_f64(),
        records,
    })
}
