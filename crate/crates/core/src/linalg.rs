//! Householder QR least squares.
//!
//! The design is factored once as `X = QR` and reused for every least-squares
//! solve and every application of the residual maker `M_X = I - X(X'X)^-1 X'`.
//! Neither `X'X` nor the n-by-n projector is ever formed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Result, RobustError};
use crate::Float;

/// Thin QR factorization of a full-column-rank design.
#[derive(Debug, Clone)]
pub struct QrFactor<F> {
    n: usize,
    k: usize,
    /// Householder vector of reflection `j`, acting on entries `j..n`.
    reflectors: Vec<Vec<F>>,
    /// `2 / v'v` for each reflector, zero for an identity reflection.
    betas: Vec<F>,
    r: Array2<F>,
    singular_values: Vec<F>,
}

impl<F: Float> QrFactor<F> {
    /// Factors `x`, failing with `RankDeficient` when the numerical rank is below
    /// the column count. Singular values below
    /// `eps * max(n, K) * largest singular value` count as zero.
    pub fn new(x: ArrayView2<'_, F>) -> Result<Self> {
        let (n, k) = x.dim();
        if k == 0 || n < k {
            return Err(RobustError::DimensionMismatch(format!(
                "least squares needs n >= K >= 1, got {n} x {k}"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RobustError::NonFinite("design matrix".into()));
        }

        let mut cols: Vec<Vec<F>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let mut reflectors = Vec::with_capacity(k);
        let mut betas = Vec::with_capacity(k);
        let mut r = Array2::zeros((k, k));

        for j in 0..k {
            let v: Vec<F> = cols[j][j..].to_vec();
            let norm = v.iter().map(|&a| a * a).sum::<F>().sqrt();
            let mut v = v;
            let alpha = if v[0] >= F::zero() { -norm } else { norm };
            v[0] = v[0] - alpha;
            let vtv: F = v.iter().map(|&a| a * a).sum();
            let beta = if vtv > F::zero() {
                F::cast(2.0) / vtv
            } else {
                F::zero()
            };
            r[[j, j]] = if beta > F::zero() { alpha } else { cols[j][j] };
            for col in cols.iter_mut().skip(j + 1) {
                let tail = &mut col[j..];
                let s = beta * dot(&v, tail);
                for (t, &vi) in tail.iter_mut().zip(&v) {
                    *t = *t - s * vi;
                }
            }
            for l in j + 1..k {
                r[[j, l]] = cols[l][j];
            }
            reflectors.push(v);
            betas.push(beta);
        }

        let singular_values = singular_values(&r);
        let largest = singular_values.iter().cloned().fold(F::zero(), F::max);
        let tol = F::epsilon() * F::cast(n.max(k) as f64) * largest;
        let rank = singular_values.iter().filter(|&&s| s > tol).count();
        if rank < k {
            return Err(RobustError::RankDeficient { rank, columns: k });
        }

        Ok(Self {
            n,
            k,
            reflectors,
            betas,
            r,
            singular_values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.k
    }

    /// Upper-triangular factor `R`.
    pub fn r(&self) -> &Array2<F> {
        &self.r
    }

    /// Singular values of the design, in decreasing order.
    pub fn singular_values(&self) -> &[F] {
        &self.singular_values
    }

    /// Overwrites `z` with `Q'z`.
    fn apply_qt(&self, z: &mut [F]) {
        for (j, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate() {
            let tail = &mut z[j..];
            let s = beta * dot(v, tail);
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t = *t - s * vi;
            }
        }
    }

    /// Overwrites `w` with `Qw`.
    fn apply_q(&self, w: &mut [F]) {
        for (j, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate().rev() {
            let tail = &mut w[j..];
            let s = beta * dot(v, tail);
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t = *t - s * vi;
            }
        }
    }

    fn back_substitute(&self, rhs: &[F]) -> Array1<F> {
        let k = self.k;
        let mut b = Array1::zeros(k);
        for i in (0..k).rev() {
            let mut acc = rhs[i];
            for l in i + 1..k {
                acc = acc - self.r[[i, l]] * b[l];
            }
            b[i] = acc / self.r[[i, i]];
        }
        b
    }

    /// Minimizer of `||z - X b||_2` over `b`.
    pub fn solve(&self, z: ArrayView1<'_, F>) -> Result<Array1<F>> {
        self.check_len(z.len())?;
        let mut w = z.to_vec();
        self.apply_qt(&mut w);
        Ok(self.back_substitute(&w[..self.k]))
    }

    /// `M_X z`, the residual of the least-squares projection of `z`.
    pub fn residual(&self, z: ArrayView1<'_, F>) -> Result<Array1<F>> {
        self.check_len(z.len())?;
        let mut w = z.to_vec();
        self.apply_qt(&mut w);
        w[..self.k].iter_mut().for_each(|v| *v = F::zero());
        self.apply_q(&mut w);
        Ok(Array1::from(w))
    }

    /// `(X'X)^-1 = R^-1 R^-T`.
    pub fn gram_inverse(&self) -> Array2<F> {
        let k = self.k;
        let mut r_inv = Array2::zeros((k, k));
        for c in 0..k {
            let mut e = vec![F::zero(); k];
            e[c] = F::one();
            let col = self.back_substitute(&e);
            r_inv.column_mut(c).assign(&col);
        }
        r_inv.dot(&r_inv.t())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(RobustError::DimensionMismatch(format!(
                "vector of length {len} for a design with {} rows",
                self.n
            )));
        }
        Ok(())
    }
}

/// Least-squares coefficients of `z` on the columns of `x`, via Householder QR.
pub fn least_squares<F: Float>(x: ArrayView2<'_, F>, z: ArrayView1<'_, F>) -> Result<Array1<F>> {
    QrFactor::new(x)?.solve(z)
}

fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&u, &v)| acc + u * v)
}

/// Singular values of a small square matrix by one-sided Jacobi rotations.
fn singular_values<F: Float>(a: &Array2<F>) -> Vec<F> {
    let k = a.ncols();
    let mut cols: Vec<Vec<F>> = a.columns().into_iter().map(|c| c.to_vec()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == F::zero() || gamma.abs() <= F::epsilon() * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (F::cast(2.0) * gamma);
                let t = zeta.sign_or_one() / (zeta.abs() + (F::one() + zeta * zeta).sqrt());
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (u, v) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (up, vq) = (*u, *v);
                    *u = c * up - s * vq;
                    *v = s * up + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<F> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    sv
}

trait SignOrOne {
    fn sign_or_one(self) -> Self;
}

impl<F: Float> SignOrOne for F {
    fn sign_or_one(self) -> Self {
        if self < F::zero() {
            -F::one()
        } else {
            F::one()
        }
    }
}
