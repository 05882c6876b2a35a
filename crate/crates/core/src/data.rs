//! Observed regression data `(X, y)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Result, RobustError};
use crate::Float;

/// Design matrix `x` (n observations by K regressors) and response `y`.
///
/// Construction goes through [`RegressionData::new`], which enforces
/// `n > K >= 1`, matching lengths and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData<F> {
    x: Array2<F>,
    y: Array1<F>,
}

impl<F: Float> RegressionData<F> {
    pub fn new(x: Array2<F>, y: Array1<F>) -> Result<Self> {
        Self { x, y }.validate()
    }

    /// Checks the data invariants, returning the data unchanged when they hold.
    pub fn validate(self) -> Result<Self> {
        let (n, k) = self.x.dim();
        if n != self.y.len() {
            return Err(RobustError::DimensionMismatch(format!(
                "x has {} rows but y has length {}",
                n,
                self.y.len()
            )));
        }
        if k == 0 {
            return Err(RobustError::DimensionMismatch(
                "x must have at least one column".into(),
            ));
        }
        if n <= k {
            return Err(RobustError::DimensionMismatch(format!(
                "need more observations than regressors, got n = {n}, K = {k}"
            )));
        }
        if let Some(((i, j), _)) = self.x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(RobustError::NonFinite(format!("x[{i}, {j}]")));
        }
        if let Some((i, _)) = self.y.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(RobustError::NonFinite(format!("y[{i}]")));
        }
        Ok(self)
    }

    pub fn x(&self) -> ArrayView2<'_, F> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, F> {
        self.y.view()
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of regressors.
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn into_parts(self) -> (Array2<F>, Array1<F>) {
        (self.x, self.y)
    }

    /// Reorders observations so that row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n() {
            return Err(RobustError::DimensionMismatch(format!(
                "permutation of length {} for {} observations",
                order.len(),
                self.n()
            )));
        }
        let x = self.x.select(ndarray::Axis(0), order);
        let y = self.y.select(ndarray::Axis(0), order);
        Self::new(x, y)
    }
}
