/// Nadaraya–Watson estimates of the conditional mean and spread with a
/// Gaussian kernel and bandwidth `h = h0 · n^(−1/(2+d))`, `n` being the
/// number of stored points.
#[derive(Debug, Clone)]
pub struct KernelRegressor {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    pub h0: f64,
    pub sigma_min: f64,
}

impl KernelRegressor {
    pub const DEFAULT_SIGMA_MIN: f64 = 1e-3;

    pub fn new(dim: usize) -> Self {
        Self::with_params(dim, 1.0, Self::DEFAULT_SIGMA_MIN)
    }

    pub fn with_params(dim: usize, h0: f64, sigma_min: f64) -> Self {
        assert!(dim >= 1 && h0 > 0.0 && sigma_min > 0.0);
        Self { dim, xs: Vec::new(), ys: Vec::new(), h0, sigma_min }
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        assert_eq!(x.len(), self.dim, "covariate dimension mismatch");
        self.xs.extend_from_slice(x);
        self.ys.push(y);
    }

    pub fn bandwidth(&self) -> f64 {
        let n = self.len().max(1) as f64;
        self.h0 * n.powf(-1.0 / (2.0 + self.dim as f64))
    }

    /// `(μ̂(x), σ̂(x))`. Falls back to the global mean of stored outcomes
    /// (0 when empty) and `σ̂ = 1` when no stored point gets positive weight.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        if self.is_empty() {
            return (0.0, 1.0);
        }
        let h = self.bandwidth();
        let inv = 1.0 / (2.0 * h * h);
        let weights: Vec<f64> = self
            .xs
            .chunks_exact(self.dim)
            .map(|xi| {
                let d2: f64 = xi.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 * inv).exp()
            })
            .collect();
        let wsum: f64 = weights.iter().sum();
        if !(wsum > 0.0) {
            let mean = self.ys.iter().sum::<f64>() / self.len() as f64;
            return (mean, 1.0);
        }
        let mu = weights.iter().zip(&self.ys).map(|(w, y)| w * y).sum::<f64>() / wsum;
        let var = weights.iter().zip(&self.ys).map(|(w, y)| w * (y - mu) * (y - mu)).sum::<f64>() / wsum;
        (mu, var.max(self.sigma_min * self.sigma_min).sqrt())
    }
}
