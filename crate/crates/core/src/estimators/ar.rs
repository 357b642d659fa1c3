use nalgebra::{DMatrix, DVector};

use crate::error::{contract, Error, Result};

/// Ridge least-squares fit of AR(d) coefficients from running sufficient
/// statistics, so a refit costs `O(d³)` whatever the history length.
///
/// Minimizes `Σ_t (y_t − ⟨φ, x_t⟩)² + λ‖φ‖²` with `x_t = (y_{t−1}, …, y_{t−d})`.
#[derive(Debug, Clone)]
pub struct ArEstimator {
    order: usize,
    lambda: f64,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    n: usize,
    coef: Vec<f64>,
}

impl ArEstimator {
    pub fn new(order: usize, lambda: f64) -> Result<Self> {
        if order == 0 {
            return Err(contract("AR order must be >= 1"));
        }
        if !(lambda >= 0.0) {
            return Err(contract(format!("ridge penalty must be >= 0, got {lambda}")));
        }
        Ok(Self {
            order,
            lambda,
            gram: DMatrix::zeros(order, order),
            xty: DVector::zeros(order),
            n: 0,
            coef: vec![0.0; order],
        })
    }

    /// Fixed coefficients; [`ArEstimator::push`] still accumulates but nothing is refit
    /// unless [`ArEstimator::fit`] is called.
    pub fn with_coefficients(coef: Vec<f64>, lambda: f64) -> Result<Self> {
        let mut est = Self::new(coef.len(), lambda)?;
        est.coef = coef;
        Ok(est)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    /// Add one regression row: lags `x` (most recent first) and response `y`.
    pub fn push(&mut self, x: &[f64], y: f64) {
        assert_eq!(x.len(), self.order, "lag vector length mismatch");
        for i in 0..self.order {
            self.xty[i] += x[i] * y;
            for j in 0..self.order {
                self.gram[(i, j)] += x[i] * x[j];
            }
        }
        self.n += 1;
    }

    /// Solve the normal equations `(XᵀX + λI) φ = Xᵀy`.
    pub fn fit(&mut self) -> Result<&[f64]> {
        let mut a = self.gram.clone();
        for i in 0..self.order {
            a[(i, i)] += self.lambda;
        }
        let scale = (0..self.order).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        let chol = a.cholesky().ok_or(Error::SingularDesign)?;
        let l = chol.l_dirty();
        let min_pivot = (0..self.order).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if !(scale > 0.0) || min_pivot <= 1e-13 * scale {
            return Err(Error::SingularDesign);
        }
        let sol = chol.solve(&self.xty);
        self.coef = sol.iter().copied().collect();
        Ok(&self.coef)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.coef.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Ridge AR(d) fit over a full history.
pub fn ar_fit(history: &[f64], order: usize, lambda: f64) -> Result<Vec<f64>> {
    if history.len() <= order {
        return Err(contract(format!("history of length {} too short for order {order}", history.len())));
    }
    let mut est = ArEstimator::new(order, lambda)?;
    for t in order..history.len() {
        let lags: Vec<f64> = (1..=order).map(|k| history[t - k]).collect();
        est.push(&lags, history[t]);
    }
    est.fit()?;
    Ok(est.coef)
}
