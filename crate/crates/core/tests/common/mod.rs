#![allow(dead_code)]

//! Test-only oracles. Nothing here calls into the solver's QR path: the
//! projector is formed explicitly from a nalgebra inverse of `X'X`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use roblasso::{FitResult, RegressionData};

pub fn to_na(x: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[[i, j]])
}

/// `X^+ z` from nalgebra's SVD.
pub fn pinv_solve(x: &Array2<f64>, z: &Array1<f64>) -> Vec<f64> {
    let svd = to_na(x).svd(true, true);
    let pinv = svd.pseudo_inverse(1e-14).expect("pseudo-inverse");
    let zv = DVector::from_iterator(z.len(), z.iter().cloned());
    (pinv * zv).iter().cloned().collect()
}

/// `M_X = I - X (X'X)^-1 X'` formed explicitly.
pub fn residual_maker(x: &Array2<f64>) -> DMatrix<f64> {
    let xa = to_na(x);
    let gram_inv = (xa.transpose() * &xa).try_inverse().expect("invertible gram");
    DMatrix::identity(x.nrows(), x.nrows()) - &xa * gram_inv * xa.transpose()
}

pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub objective: f64,
}

fn concentrated_value(m: &DMatrix<f64>, y: &DVector<f64>, alpha: &DVector<f64>, lambda: f64) -> f64 {
    let n = y.len() as f64;
    (m * (y - alpha)).norm() / n.sqrt() + lambda / n * alpha.iter().map(|a| a.abs()).sum::<f64>()
}

/// Minimizes `||M_X (y - a)||_2 / sqrt(n) + (lambda/n) ||a||_1` by cyclic exact
/// coordinate minimization (each one-dimensional subproblem solved on its
/// subgradient by bisection), stopping once a sweep changes the objective by
/// less than `1e-15`.
pub fn coordinate_oracle(x: &Array2<f64>, y: &Array1<f64>, lambda: f64, start: &[f64]) -> OracleSolution {
    let n = y.len();
    let nf = n as f64;
    let m = residual_maker(x);
    let yv = DVector::from_iterator(n, y.iter().cloned());
    let mut alpha = DVector::from_iterator(n, start.iter().cloned());
    let mut u = &m * (&yv - &alpha);
    let pen = lambda / nf;
    let mut value = concentrated_value(&m, &yv, &alpha, lambda);

    for _sweep in 0..2_000_000 {
        for i in 0..n {
            let mii = m[(i, i)];
            if mii <= 1e-14 {
                continue;
            }
            let uu = u.norm_squared();
            let ui = u[i];
            let ai = alpha[i];
            // smooth part as a function of the new value a: q(d) with d = a - ai
            let smooth_grad = |a: f64| {
                let d = a - ai;
                let q = (uu - 2.0 * d * ui + d * d * mii).max(0.0);
                (-ui + d * mii) / (nf.sqrt() * q.sqrt())
            };
            let g0 = smooth_grad(0.0);
            let new_a = if g0.abs() <= pen {
                0.0
            } else {
                // root of smooth_grad(a) + pen * sign(a) on the side opposite to g0
                let s = -g0.signum();
                let f = |a: f64| smooth_grad(a) + pen * s;
                let (mut lo, mut hi) = (0.0f64, s);
                while f(hi) * s < 0.0 {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) * s < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let d = new_a - ai;
            if d != 0.0 {
                alpha[i] = new_a;
                u -= m.column(i) * d;
            }
        }
        u = &m * (&yv - &alpha);
        let next = concentrated_value(&m, &yv, &alpha, lambda);
        let change = value - next;
        value = next;
        if change.abs() < 1e-15 {
            break;
        }
    }

    let z = Array1::from_iter((0..n).map(|i| y[i] - alpha[i]));
    OracleSolution {
        beta: pinv_solve(x, &z),
        alpha: alpha.iter().cloned().collect(),
        objective: value,
    }
}

/// Largest violation of the optimality conditions at `(beta_hat, alpha_hat)`:
/// `r_i - a_i = sign(a_i) t` on the support, `|r_i| <= t` off it, where
/// `r = y - X beta_hat` and `t = lambda ||r - a||_2 / sqrt(n)`; plus the
/// normal equations `X'(r - a) = 0`.
pub fn kkt_violation(data: &RegressionData<f64>, fit: &FitResult<f64>) -> f64 {
    let x = data.x();
    let r = &data.y() - &x.dot(&fit.beta_hat);
    let e = &r - &fit.alpha_hat;
    let sigma = e.mapv(|v| v * v).sum().sqrt();
    let t = fit.lambda_effective * sigma / (data.n() as f64).sqrt();
    let mut worst: f64 = 0.0;
    for (ri, ai) in r.iter().zip(fit.alpha_hat.iter()) {
        let v = if *ai != 0.0 {
            (ri - ai - ai.signum() * t).abs()
        } else {
            (ri.abs() - t).max(0.0)
        };
        worst = worst.max(v);
    }
    let normal = x.t().dot(&e);
    worst.max(normal.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Small contaminated instance with an intercept, `K - 1` normal regressors
/// and a handful of gross shifts.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, outliers: usize) -> RegressionData<f64> {
    let x = Array2::from_shape_fn((n, k), |(_, j)| {
        if j == 0 {
            1.0
        } else {
            rng.sample::<f64, _>(StandardNormal)
        }
    });
    let beta = Array1::from_shape_fn(k, |_| rng.gen_range(-2.0..2.0));
    let mut y = x.dot(&beta) + Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
    for _ in 0..outliers {
        let i = rng.gen_range(0..n);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        y[i] += sign * rng.gen_range(4.0..10.0);
    }
    RegressionData::new(x, y).expect("valid instance")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
}
