//! Selection rules, prediction-set rules and error functions.
//!
//! A threshold-sequence procedure is fully described by a selection rule
//! `S_t(x, q)`, a prediction-set rule `C_t(x, q)` and an error function
//! `err(y, C)`. The rules here are plain values; any fitted quantity they
//! need (a mean, a posterior, a test statistic) is passed in by the caller.

use crate::error::{contract, Result};
use crate::normal;

/// A prediction set, kept as a tagged union so containment and size are exact.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionSet {
    Empty,
    /// The whole outcome space.
    Full,
    Point(f64),
    /// Closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Finite set of class labels, sorted and deduplicated.
    Labels(Vec<usize>),
    /// Ray `[lo, +∞)`.
    Ray { lo: f64 },
}

impl PredictionSet {
    pub fn labels(mut labels: Vec<usize>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        PredictionSet::Labels(labels)
    }

    pub fn singleton(label: usize) -> Self {
        PredictionSet::Labels(vec![label])
    }

    /// Outcomes are real numbers; labels are matched when `y` is exactly the label value.
    pub fn contains(&self, y: f64) -> bool {
        match self {
            PredictionSet::Empty => false,
            PredictionSet::Full => true,
            PredictionSet::Point(m) => y == *m,
            PredictionSet::Interval { lo, hi } => *lo <= y && y <= *hi,
            PredictionSet::Labels(ls) => {
                y >= 0.0 && y.fract() == 0.0 && ls.binary_search(&(y as usize)).is_ok()
            }
            PredictionSet::Ray { lo } => y >= *lo,
        }
    }

    /// Lebesgue length for real-valued sets, label count for label sets.
    pub fn size(&self) -> f64 {
        match self {
            PredictionSet::Empty | PredictionSet::Point(_) => 0.0,
            PredictionSet::Full | PredictionSet::Ray { .. } => f64::INFINITY,
            PredictionSet::Interval { lo, hi } => hi - lo,
            PredictionSet::Labels(ls) => ls.len() as f64,
        }
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self, PredictionSet::Labels(ls) if ls.len() == 1) || matches!(self, PredictionSet::Point(_))
    }
}

/// `err(y, C)` with the conventions `err(y, Full) = 0` and `err(y, ∅) = 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ErrorFunction {
    /// `1{y ∉ C}`.
    #[default]
    Coverage,
    /// `Σ_k w_k 1{y = k, k ∉ C}` for nonnegative weights summing to one.
    WeightedClassification(Vec<f64>),
}

impl ErrorFunction {
    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(contract("class weights must be nonnegative and nonempty"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(contract(format!("class weights must sum to 1, got {total}")));
        }
        Ok(ErrorFunction::WeightedClassification(weights))
    }

    pub fn uniform(n_classes: usize) -> Self {
        ErrorFunction::WeightedClassification(vec![1.0 / n_classes as f64; n_classes])
    }

    pub fn eval(&self, y: f64, set: &PredictionSet) -> f64 {
        match set {
            PredictionSet::Empty => return 1.0,
            PredictionSet::Full => return 0.0,
            _ => {}
        }
        let missed = !set.contains(y);
        match self {
            ErrorFunction::Coverage => f64::from(missed as u8),
            ErrorFunction::WeightedClassification(w) => {
                if !missed || y < 0.0 {
                    return 0.0;
                }
                w.get(y as usize).copied().unwrap_or(0.0)
            }
        }
    }
}

/// Coverage error `1{y ∉ C}`.
pub fn coverage_error(y: f64, set: &PredictionSet) -> f64 {
    ErrorFunction::Coverage.eval(y, set)
}

/// Testing error with `C ≡ {1}`: a false discovery when the null holds.
pub fn testing_error(y: u8) -> Result<f64> {
    match y {
        0 => Ok(1.0),
        1 => Ok(0.0),
        _ => Err(contract(format!("testing outcome must be 0 or 1, got {y}"))),
    }
}

/// Axis-aligned box of covariates; `lo[i] > hi[i]` on any axis makes it empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(contract("region bounds must have equal length"));
        }
        Ok(Self { lo, hi })
    }

    pub fn empty() -> Self {
        Self { lo: vec![1.0], hi: vec![0.0] }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .enumerate()
            .all(|(i, (lo, hi))| x.get(i).is_some_and(|v| lo <= v && v <= hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRule {
    AllSelect,
    /// X-oriented: select covariates falling in a fixed region.
    RegionSelect(Region),
    /// X-oriented, adaptive: `1{μ̂_t(x) ≥ y0}`.
    AdaptiveMean { y0: f64 },
    /// `1{W_t(x) > q}`; always selects when `q < 0`.
    Informative,
}

impl SelectionRule {
    /// `stat` is `W_t(x)` for [`SelectionRule::Informative`], `μ̂_t(x)` for
    /// [`SelectionRule::AdaptiveMean`], and ignored otherwise.
    pub fn select(&self, x: &[f64], q: f64, stat: f64) -> bool {
        match self {
            SelectionRule::AllSelect => true,
            SelectionRule::RegionSelect(region) => region.contains(x),
            SelectionRule::AdaptiveMean { y0 } => stat >= *y0,
            SelectionRule::Informative => q < 0.0 || stat > q,
        }
    }

    pub fn is_informative(&self) -> bool {
        matches!(self, SelectionRule::Informative)
    }
}

/// The fitted quantity a prediction rule needs at a given covariate.
#[derive(Debug, Clone, Copy)]
pub enum PointEstimate<'a> {
    Regression { mu: f64, sigma: f64 },
    Posterior(&'a [f64]),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionRule {
    /// `{y : V(x, y) ≤ q}` for the rescaled residual score.
    SublevelInterval,
    /// `{argmax posterior}`.
    ArgminSingleton,
    /// `C ≡ {1}` (testing).
    FixedAlternative,
    /// `[μ̂ + Φ⁻¹(1 − q), ∞)`.
    LowerBoundRay,
}

impl PredictionRule {
    pub fn emit(&self, est: PointEstimate<'_>, q: f64, bound: f64) -> Result<PredictionSet> {
        match (self, est) {
            (PredictionRule::SublevelInterval, PointEstimate::Regression { mu, sigma }) => {
                regression_interval(mu, sigma, q, bound)
            }
            (PredictionRule::ArgminSingleton, PointEstimate::Posterior(p)) => {
                classify_point(p).map(PredictionSet::singleton)
            }
            (PredictionRule::FixedAlternative, _) => Ok(PredictionSet::singleton(1)),
            (PredictionRule::LowerBoundRay, PointEstimate::Regression { mu, .. }) => Ok(lower_bound_ray(mu, q)),
            (rule, est) => Err(contract(format!("{rule:?} cannot use estimate {est:?}"))),
        }
    }
}

/// Sublevel set of the rescaled residual score:
/// `[μ̂ ± σ̂·Φ⁻¹((q + B) / 2B)]` for `q ∈ (0, B)`, `{μ̂}` for `q ≤ 0`, everything for `q ≥ B`.
pub fn regression_interval(mu_hat: f64, sigma_hat: f64, q: f64, bound: f64) -> Result<PredictionSet> {
    if !(sigma_hat > 0.0) {
        return Err(contract(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    Ok(if q <= 0.0 {
        PredictionSet::Point(mu_hat)
    } else if q >= bound {
        PredictionSet::Full
    } else {
        let half = sigma_hat * normal::quantile((q + bound) / (2.0 * bound));
        PredictionSet::Interval { lo: mu_hat - half, hi: mu_hat + half }
    })
}

/// Label with the largest posterior (smallest `1 − posterior`); ties go to the smallest label.
pub fn classify_point(posteriors: &[f64]) -> Result<usize> {
    if posteriors.is_empty() {
        return Err(contract("posterior vector is empty"));
    }
    let mut best = 0;
    for (k, p) in posteriors.iter().enumerate().skip(1) {
        if *p > posteriors[best] {
            best = k;
        }
    }
    Ok(best)
}

/// `[μ̂ + Φ⁻¹(1 − q), ∞)` on the unit score scale. The family shrinks to the
/// empty set as `q ↓ 0`, which is what is emitted for `q ≤ 0`.
pub fn lower_bound_ray(mu_hat: f64, q: f64) -> PredictionSet {
    if q <= 0.0 {
        PredictionSet::Empty
    } else if q >= 1.0 {
        PredictionSet::Full
    } else {
        PredictionSet::Ray { lo: mu_hat + normal::quantile(1.0 - q) }
    }
}
