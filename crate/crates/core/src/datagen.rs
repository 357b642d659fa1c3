//! Reproducible synthetic streams.
//!
//! All randomness flows through a [`ChaCha8Rng`] seeded from a `u64`, so the
//! same seed reproduces the same stream bit for bit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{contract, Error, Result};
use crate::policy::{Decision, Policy};
use crate::rules::PredictionSet;

/// One labeled example. Class labels are stored as `0.0, 1.0, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Two-component mixture `Y ~ Bernoulli(p1)`, `X | Y = k ~ N(mean_k, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub p1: f64,
    pub mean0: Vec<f64>,
    pub mean1: Vec<f64>,
}

impl GaussianMixture {
    /// Null `N((0,0), I)` with probability 0.8, alternative `N((3,3), I)`.
    pub fn testing() -> Self {
        Self { p1: 0.2, mean0: vec![0.0, 0.0], mean1: vec![3.0, 3.0] }
    }

    /// Balanced classes at `(0,0)` and `(1,1)`.
    pub fn classification() -> Self {
        Self { p1: 0.5, mean0: vec![0.0, 0.0], mean1: vec![1.0, 1.0] }
    }

    pub fn dim(&self) -> usize {
        self.mean0.len()
    }

    /// `P(Y = 1 | X = x)`.
    pub fn posterior1(&self, x: &[f64]) -> f64 {
        if self.p1 <= 0.0 {
            return 0.0;
        }
        if self.p1 >= 1.0 {
            return 1.0;
        }
        let sq = |m: &[f64]| x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        // log-odds of class 1 against class 0
        let log_odds = (self.p1 / (1.0 - self.p1)).ln() + 0.5 * (sq(&self.mean0) - sq(&self.mean1));
        1.0 / (1.0 + (-log_odds).exp())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Sample {
        let label = rng.random::<f64>() < self.p1;
        let mean = if label { &self.mean1 } else { &self.mean0 };
        let x = mean.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect();
        Sample { x, y: if label { 1.0 } else { 0.0 } }
    }
}

/// `Y = μ(X) + σ(X)·ξ` with `X ~ U[0,1]^d`, `ξ ~ N(0,1)`,
/// `μ(x) = intercept + ⟨coef, x⟩` and `σ(x) = sigma0 + sigma_slope·x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub sigma0: f64,
    pub sigma_slope: f64,
}

impl Default for RegressionModel {
    /// `μ(x) = 2x₁`, `σ ≡ 1` on `[0,1]²`.
    fn default() -> Self {
        Self { coef: vec![2.0, 0.0], intercept: 0.0, sigma0: 1.0, sigma_slope: 0.0 }
    }
}

impl RegressionModel {
    pub fn dim(&self) -> usize {
        self.coef.len()
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn sd(&self, x: &[f64]) -> f64 {
        self.sigma0 + self.sigma_slope * x[0]
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Sample {
        let x: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        let y = self.mean(&x) + self.sd(&x) * rng.sample::<f64, _>(StandardNormal);
        Sample { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamSpec {
    RegressionIid(RegressionModel),
    ClassifMixture(GaussianMixture),
    TestingMixture(GaussianMixture),
    /// Centered AR(d) with unit-variance Gaussian innovations, started from
    /// zero and run for `burn_in` steps before the first emitted value.
    ArProcess { phi: Vec<f64>, burn_in: usize },
    /// Covariates from the inner stream, outcomes picked by an adversary that
    /// makes every nontrivial emitted set wrong.
    AdversarialAlwaysErr(Box<StreamSpec>),
}

impl StreamSpec {
    pub const DEFAULT_BURN_IN: usize = 1000;

    pub fn ar(phi: Vec<f64>) -> Self {
        StreamSpec::ArProcess { phi, burn_in: Self::DEFAULT_BURN_IN }
    }

    pub fn is_adversarial(&self) -> bool {
        matches!(self, StreamSpec::AdversarialAlwaysErr(_))
    }

    /// One fresh iid draw; `None` for the AR process, whose draws depend on the past.
    pub fn draw_iid(&self, rng: &mut ChaCha8Rng) -> Option<Sample> {
        match self {
            StreamSpec::RegressionIid(m) => Some(m.draw(rng)),
            StreamSpec::ClassifMixture(m) | StreamSpec::TestingMixture(m) => Some(m.draw(rng)),
            StreamSpec::ArProcess { .. } => None,
            StreamSpec::AdversarialAlwaysErr(inner) => inner.draw_iid(rng),
        }
    }
}

/// Smallest modulus among the roots of `1 − Σ φ_k z^k`, via the companion matrix.
pub fn min_root_modulus(phi: &[f64]) -> f64 {
    let d = phi.len();
    if d == 0 {
        return f64::INFINITY;
    }
    let mut comp = DMatrix::<f64>::zeros(d, d);
    for (k, p) in phi.iter().enumerate() {
        comp[(0, k)] = *p;
    }
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    let rho = comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if rho == 0.0 {
        f64::INFINITY
    } else {
        1.0 / rho
    }
}

/// A live stream: spec, generator state and, for AR, the lag buffer.
#[derive(Debug, Clone)]
pub struct Stream {
    spec: StreamSpec,
    rng: ChaCha8Rng,
    /// Most recent value first.
    lags: Vec<f64>,
}

impl Stream {
    pub fn new(spec: StreamSpec, seed: u64) -> Result<Self> {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stream = Self { spec, rng, lags: Vec::new() };
        if let StreamSpec::ArProcess { phi, burn_in } = stream.base().clone() {
            if phi.is_empty() {
                return Err(contract("AR coefficient vector is empty"));
            }
            let m = min_root_modulus(&phi);
            if m <= 1.0 + 1e-6 {
                return Err(Error::Nonstationary(m));
            }
            stream.lags = vec![0.0; phi.len()];
            for _ in 0..burn_in {
                stream.advance_ar(&phi);
            }
        }
        Ok(stream)
    }

    pub fn spec(&self) -> &StreamSpec {
        &self.spec
    }

    fn base(&self) -> &StreamSpec {
        match &self.spec {
            StreamSpec::AdversarialAlwaysErr(inner) => inner,
            s => s,
        }
    }

    fn advance_ar(&mut self, phi: &[f64]) -> Sample {
        let x = self.lags.clone();
        let z: f64 = self.rng.sample(StandardNormal);
        let y = phi.iter().zip(&x).map(|(p, v)| p * v).sum::<f64>() + z;
        self.lags.rotate_right(1);
        self.lags[0] = y;
        Sample { x, y }
    }

    /// Next draw from the base model. For an adversarial spec the outcome is
    /// the natural one; the adversary overrides it once the emitted set is known.
    pub fn next_sample(&mut self) -> Sample {
        match self.base().clone() {
            StreamSpec::ArProcess { phi, .. } => self.advance_ar(&phi),
            spec => spec.draw_iid(&mut self.rng).expect("iid spec"),
        }
    }

    /// `n` labeled pairs available before time 1: iid draws, or the next
    /// `n` consecutive observations of the AR process.
    pub fn holdout(&mut self, n: usize) -> Vec<Sample> {
        (0..n).map(|_| self.next_sample()).collect()
    }

    /// Current lag vector of the AR process (empty for iid streams).
    pub fn lags(&self) -> &[f64] {
        &self.lags
    }
}

impl Iterator for Stream {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        Some(self.next_sample())
    }
}

/// Outcome that falls outside `set` whenever the set leaves something out.
/// Full and empty sets keep the natural outcome (error 0 and 1 by convention).
pub fn adversarial_outcome(set: &PredictionSet, natural: f64, n_labels: Option<usize>) -> f64 {
    match set {
        PredictionSet::Empty | PredictionSet::Full => natural,
        PredictionSet::Point(m) => m + 1.0,
        PredictionSet::Interval { hi, .. } => hi + 1.0,
        PredictionSet::Ray { lo } if lo.is_finite() => lo - 1.0,
        PredictionSet::Ray { .. } => natural,
        PredictionSet::Labels(ls) => {
            let k = n_labels.unwrap_or(ls.iter().max().map_or(1, |m| m + 2));
            (0..k).find(|l| ls.binary_search(l).is_err()).map_or(natural, |l| l as f64)
        }
    }
}

/// Draw the next covariate, let `policy` decide at `q`, then pick the outcome adversarially.
pub fn adversarial_next(stream: &mut Stream, policy: &dyn Policy, q: f64) -> (Sample, Decision) {
    let mut sample = stream.next_sample();
    let decision = policy.decide(&sample.x, q);
    sample.y = adversarial_outcome(&decision.set, sample.y, policy.label_count());
    (sample, decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::coverage_error;

    #[test]
    fn same_seed_same_stream() {
        for spec in [
            StreamSpec::TestingMixture(GaussianMixture::testing()),
            StreamSpec::RegressionIid(RegressionModel::default()),
            StreamSpec::ar(vec![0.5, -0.2]),
        ] {
            let a: Vec<Sample> = Stream::new(spec.clone(), 9).unwrap().take(200).collect();
            let b: Vec<Sample> = Stream::new(spec.clone(), 9).unwrap().take(200).collect();
            let c: Vec<Sample> = Stream::new(spec, 10).unwrap().take(200).collect();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn testing_mixture_moments() {
        let s = Stream::new(StreamSpec::TestingMixture(GaussianMixture::testing()), 1).unwrap();
        let draws: Vec<Sample> = s.take(100_000).collect();
        let alt: Vec<&Sample> = draws.iter().filter(|d| d.y == 1.0).collect();
        let freq = alt.len() as f64 / draws.len() as f64;
        assert!((freq - 0.2).abs() < 0.01, "freq {freq}");
        for i in 0..2 {
            let m = alt.iter().map(|d| d.x[i]).sum::<f64>() / alt.len() as f64;
            assert!((m - 3.0).abs() < 0.05, "mean {m}");
        }
    }

    #[test]
    fn degenerate_ar_is_white_noise() {
        let s = Stream::new(StreamSpec::ar(vec![0.0]), 3).unwrap();
        let ys: Vec<f64> = s.take(50_000).map(|d| d.y).collect();
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let lag1 = ys.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.03 && lag1.abs() < 0.03);
    }

    #[test]
    fn ar1_stationary_variance() {
        let s = Stream::new(StreamSpec::ar(vec![0.5]), 5).unwrap();
        let ys: Vec<f64> = s.take(100_000).map(|d| d.y).collect();
        let var = ys.iter().map(|y| y * y).sum::<f64>() / ys.len() as f64;
        assert!((var - 4.0 / 3.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn ar_covariates_are_lags() {
        let mut s = Stream::new(StreamSpec::ar(vec![0.4, 0.2]), 2).unwrap();
        let a = s.next_sample();
        let b = s.next_sample();
        assert_eq!(b.x, vec![a.y, a.x[0]]);
    }

    #[test]
    fn nonstationary_rejected() {
        assert!(matches!(Stream::new(StreamSpec::ar(vec![1.0]), 0), Err(Error::Nonstationary(_))));
        assert!(matches!(Stream::new(StreamSpec::ar(vec![0.5, 0.6]), 0), Err(Error::Nonstationary(_))));
        assert!(Stream::new(StreamSpec::ar(vec![0.4, 0.2]), 0).is_ok());
        assert!((min_root_modulus(&[0.5]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn holdout_sizes() {
        let mut s = Stream::new(StreamSpec::TestingMixture(GaussianMixture::testing()), 4).unwrap();
        assert!(s.holdout(0).is_empty());
        let h = s.holdout(100);
        assert_eq!(h.len(), 100);
        let ones = h.iter().filter(|d| d.y == 1.0).count();
        assert!(ones > 5 && ones < 40);
        let mut c = Stream::new(StreamSpec::ClassifMixture(GaussianMixture::classification()), 4).unwrap();
        assert_eq!(c.holdout(10).len(), 10);
    }

    #[test]
    fn adversary_misses_every_nontrivial_set() {
        let iv = PredictionSet::Interval { lo: 1.0, hi: 2.0 };
        assert_eq!(adversarial_outcome(&iv, 1.5, None), 3.0);
        assert_eq!(adversarial_outcome(&PredictionSet::Full, 0.7, None), 0.7);
        assert_eq!(adversarial_outcome(&PredictionSet::singleton(0), 0.0, Some(2)), 1.0);
        assert_eq!(adversarial_outcome(&PredictionSet::singleton(1), 1.0, Some(2)), 0.0);
        assert_eq!(adversarial_outcome(&PredictionSet::labels(vec![0, 1]), 1.0, Some(2)), 1.0);
        for set in [iv, PredictionSet::Point(0.3), PredictionSet::Ray { lo: 2.0 }, PredictionSet::singleton(1)] {
            assert_eq!(coverage_error(adversarial_outcome(&set, 1.0, Some(2)), &set), 1.0);
        }
    }

    #[test]
    fn mixture_posterior_midpoint() {
        let m = GaussianMixture::testing();
        assert!((m.posterior1(&[1.5, 1.5]) - 0.2).abs() < 1e-12);
        let degenerate = GaussianMixture { p1: 0.0, ..m };
        assert_eq!(degenerate.posterior1(&[3.0, 3.0]), 0.0);
    }
}
