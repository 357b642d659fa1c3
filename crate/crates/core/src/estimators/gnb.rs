use crate::error::{contract, Error, Result};

/// Incremental Gaussian naive Bayes with per-class Welford moments.
///
/// Priors are class frequencies. Per-feature variances use the unbiased
/// sample variance, floored at `var_floor`; a class with a single
/// observation reports the floor.
#[derive(Debug, Clone)]
pub struct GaussianNb {
    dim: usize,
    counts: Vec<u64>,
    means: Vec<Vec<f64>>,
    m2: Vec<Vec<f64>>,
    var_floor: f64,
}

impl GaussianNb {
    pub const DEFAULT_VAR_FLOOR: f64 = 1e-6;

    pub fn new(n_classes: usize, dim: usize) -> Self {
        Self::with_floor(n_classes, dim, Self::DEFAULT_VAR_FLOOR)
    }

    pub fn with_floor(n_classes: usize, dim: usize, var_floor: f64) -> Self {
        assert!(n_classes >= 1 && dim >= 1 && var_floor > 0.0);
        Self {
            dim,
            counts: vec![0; n_classes],
            means: vec![vec![0.0; dim]; n_classes],
            m2: vec![vec![0.0; dim]; n_classes],
            var_floor,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, class: usize) -> u64 {
        self.counts[class]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self, class: usize) -> &[f64] {
        &self.means[class]
    }

    /// Unbiased sample variance without the floor; `None` below two observations.
    pub fn raw_variance(&self, class: usize, feature: usize) -> Option<f64> {
        let n = self.counts[class];
        (n >= 2).then(|| self.m2[class][feature] / (n - 1) as f64)
    }

    pub fn variance(&self, class: usize, feature: usize) -> f64 {
        self.raw_variance(class, feature).map_or(self.var_floor, |v| v.max(self.var_floor))
    }

    pub fn update(&mut self, x: &[f64], label: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(contract(format!("expected {} features, got {}", self.dim, x.len())));
        }
        if label >= self.n_classes() {
            return Err(contract(format!("label {label} out of range")));
        }
        self.counts[label] += 1;
        let n = self.counts[label] as f64;
        let (mean, m2) = (&mut self.means[label], &mut self.m2[label]);
        for i in 0..self.dim {
            let delta = x[i] - mean[i];
            mean[i] += delta / n;
            m2[i] += delta * (x[i] - mean[i]);
        }
        Ok(())
    }

    pub fn priors(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.n_classes()];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Bayes posterior over classes at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(contract(format!("expected {} features, got {}", self.dim, x.len())));
        }
        if let Some(k) = self.counts.iter().position(|&c| c == 0) {
            return Err(Error::UntrainedClass(k));
        }
        let total = self.total() as f64;
        let mut logp: Vec<f64> = (0..self.n_classes())
            .map(|k| {
                let mut lp = (self.counts[k] as f64 / total).ln();
                for i in 0..self.dim {
                    let v = self.variance(k, i);
                    let d = x[i] - self.means[k][i];
                    lp -= 0.5 * (std::f64::consts::TAU * v).ln() + d * d / (2.0 * v);
                }
                lp
            })
            .collect();
        let top = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for lp in logp.iter_mut() {
            *lp = (*lp - top).exp();
            z += *lp;
        }
        logp.iter_mut().for_each(|p| *p /= z);
        Ok(logp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_insert_uses_floor() {
        let mut m = GaussianNb::new(2, 2);
        m.update(&[1.0, 2.0], 0).unwrap();
        assert_eq!(m.count(0), 1);
        assert_eq!(m.mean(0), &[1.0, 2.0]);
        assert_eq!(m.variance(0, 0), GaussianNb::DEFAULT_VAR_FLOOR);
        assert_eq!(m.variance(0, 1), GaussianNb::DEFAULT_VAR_FLOOR);
    }

    #[test]
    fn two_point_moments() {
        let mut m = GaussianNb::new(2, 1);
        m.update(&[0.0], 1).unwrap();
        m.update(&[2.0], 1).unwrap();
        assert_eq!(m.mean(1), &[1.0]);
        assert_eq!(m.raw_variance(1, 0), Some(2.0));
        assert_eq!(m.priors(), vec![0.0, 1.0]);
        assert_eq!(m.posterior(&[1.0]), Err(Error::UntrainedClass(0)));
    }

    #[test]
    fn contract_errors() {
        let mut m = GaussianNb::new(2, 2);
        assert!(m.update(&[1.0], 0).is_err());
        assert!(m.update(&[1.0, 1.0], 2).is_err());
    }

    fn symmetric(p0: f64, n: usize) -> GaussianNb {
        // class means ±1, identical spread, priors p0 / 1 − p0
        let mut m = GaussianNb::new(2, 1);
        let n0 = (p0 * n as f64).round() as usize;
        for i in 0..n0 {
            m.update(&[-1.0 + if i % 2 == 0 { 0.5 } else { -0.5 }], 0).unwrap();
        }
        for i in 0..(n - n0) {
            m.update(&[1.0 + if i % 2 == 0 { 0.5 } else { -0.5 }], 1).unwrap();
        }
        m
    }

    #[test]
    fn symmetric_midpoint() {
        let m = symmetric(0.5, 100);
        let p = m.posterior(&[0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn priors_when_likelihoods_cancel() {
        // identical class-conditional moments, priors 0.8 / 0.2
        let mut m = GaussianNb::new(2, 1);
        for i in 0..80 {
            m.update(&[(i % 2) as f64], 0).unwrap();
        }
        for i in 0..20 {
            m.update(&[(i % 2) as f64], 1).unwrap();
        }
        // variances differ slightly through the n−1 denominator; compare to brute force
        let p = m.posterior(&[0.3]).unwrap();
        let dens = |k: usize| {
            let v = m.variance(k, 0);
            let d = 0.3 - m.mean(k)[0];
            m.priors()[k] * (-(d * d) / (2.0 * v)).exp() / (std::f64::consts::TAU * v).sqrt()
        };
        let brute = dens(0) / (dens(0) + dens(1));
        assert!((p[0] - brute).abs() < 1e-12);
        assert!((p[0] - 0.8).abs() < 1e-2);
    }

    #[test]
    fn tiny_variance_concentrates() {
        let mut m = GaussianNb::with_floor(2, 2, 1e-8);
        for _ in 0..5 {
            m.update(&[0.0, 0.0], 0).unwrap();
            m.update(&[0.01, 0.01], 1).unwrap();
        }
        // brute-force density ratio: both classes sit at the floor variance
        let v = 1e-8;
        let ratio = (-(2.0 * 0.01f64.powi(2)) / (2.0 * v)).exp();
        let brute = 1.0 / (1.0 + ratio);
        let p = m.posterior(&[0.0, 0.0]).unwrap();
        assert!((p[0] - brute).abs() < 1e-12);
        assert!(1.0 - p[0] < 1e-6);
    }

    proptest! {
        #[test]
        fn posterior_is_a_distribution(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0usize..3), 6..60),
            x in (-8.0f64..8.0, -8.0f64..8.0),
        ) {
            let mut m = GaussianNb::new(3, 2);
            for (k, (a, b, _)) in pts.iter().take(3).enumerate() {
                m.update(&[*a, *b], k).unwrap();
            }
            for (a, b, k) in &pts[3..] {
                m.update(&[*a, *b], *k).unwrap();
            }
            let p = m.posterior(&[x.0, x.1]).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((m.priors().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..3 { for i in 0..2 { prop_assert!(m.variance(k, i) >= GaussianNb::DEFAULT_VAR_FLOOR); } }
        }
    }
}
