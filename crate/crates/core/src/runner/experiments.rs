//! The shipped experiments and their wirings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{GaussianMixture, RegressionModel, Sample, StreamSpec};
use crate::error::{Error, Result};
use crate::estimators::{ArEstimator, GaussianNb, KernelRegressor};
use crate::normal;
use crate::oracle::{solve_q0, BenchmarkFn, DEFAULT_SOLVER_TOL};
use crate::policy::{Decision, Policy};
use crate::rules::{
    classify_point, lower_bound_ray, regression_interval, ErrorFunction, PredictionSet, Region, SelectionRule,
};

use super::config::{Augment, Defaults, ErrorKind, Resolved, SelectionKind, StatisticMode};
use super::wiring::{Experiment, Feed, Wiring};

const Q0_MC_N: usize = 100_000;
const Q0_SEED: u64 = 0x5EED_0F0F;
/// Kernel predictions cost O(n) each, so their IER snapshots use fewer draws.
const KERNEL_MC_N: usize = 2_000;

/// `q⁰` of an informative benchmark from draws of `W(X)`; `None` outside the admissible levels.
fn informative_q0(spec: &StreamSpec, w: impl Fn(&Sample) -> f64, b_star: Option<f64>, alpha: f64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(Q0_SEED);
    let bench = BenchmarkFn::informative_from_sampler(
        || w(&spec.draw_iid(&mut rng).expect("iid spec")),
        Q0_MC_N,
        b_star,
    )
    .ok()?;
    solve_q0(alpha, &bench, DEFAULT_SOLVER_TOL).ok()
}

fn untrained_gnb(n_classes: usize, dim: usize, holdout: &[Sample]) -> Result<GaussianNb> {
    let mut gnb = GaussianNb::new(n_classes, dim);
    for s in holdout {
        gnb.update(&s.x, s.y as usize)?;
    }
    Ok(gnb)
}

fn kernel_from(cfg: &Resolved, dim: usize, holdout: &[Sample]) -> KernelRegressor {
    let mut k = KernelRegressor::with_params(dim, cfg.cfg.bandwidth, KernelRegressor::DEFAULT_SIGMA_MIN);
    for s in holdout {
        k.push(&s.x, s.y);
    }
    k
}

/// Largest value of `μ(x)` over the unit cube.
fn sup_mean(model: &RegressionModel) -> f64 {
    model.intercept + model.coef.iter().map(|c| c.max(0.0)).sum::<f64>()
}

// ---------------------------------------------------------------- testing

pub struct Testing;

pub struct TestingWiring {
    mixture: GaussianMixture,
    gnb: Option<GaussianNb>,
    feed: Feed,
}

impl TestingWiring {
    /// `W(x) = 1 − lfdr(x)`. An untrained class gives `lfdr = 1`, so nothing is rejected on it.
    fn w(&self, x: &[f64]) -> f64 {
        match &self.gnb {
            None => self.mixture.posterior1(x),
            Some(g) => g.posterior(x).map_or(0.0, |p| p[1]),
        }
    }
}

impl Policy for TestingWiring {
    fn decide(&self, x: &[f64], q: f64) -> Decision {
        Decision { selected: SelectionRule::Informative.select(x, q, self.w(x)), set: PredictionSet::singleton(1) }
    }

    fn label_count(&self) -> Option<usize> {
        Some(2)
    }
}

impl Wiring for TestingWiring {
    fn observe(&mut self, x: &[f64], y: f64, selected: bool) -> Result<()> {
        if self.feed.route(x, y, selected) {
            if let Some(g) = &mut self.gnb {
                g.update(x, y as usize)?;
            }
        }
        Ok(())
    }

    fn fold_pending(&mut self) -> Result<()> {
        for s in self.feed.drain() {
            if let Some(g) = &mut self.gnb {
                g.update(&s.x, s.y as usize)?;
            }
        }
        Ok(())
    }

    fn informative(&self) -> bool {
        true
    }
}

impl Experiment for Testing {
    fn name(&self) -> &'static str {
        "testing"
    }

    fn about(&self) -> &'static str {
        "online conformal testing with an estimated lfdr on a two-group Gaussian mixture"
    }

    fn defaults(&self) -> Defaults {
        Defaults { q1: 0.5, c: 1.0, holdout: 100, augment: Augment::Unselected, ..Defaults::default() }
    }

    fn stream_spec(&self, _cfg: &Resolved) -> Result<StreamSpec> {
        Ok(StreamSpec::TestingMixture(GaussianMixture::testing()))
    }

    fn build(&self, cfg: &Resolved, holdout: &[Sample]) -> Result<Box<dyn Wiring>> {
        let mixture = GaussianMixture::testing();
        let gnb = match cfg.cfg.mode {
            StatisticMode::Oracle => None,
            _ => Some(untrained_gnb(2, mixture.dim(), holdout)?),
        };
        Ok(Box::new(TestingWiring { mixture, gnb, feed: Feed::new(cfg) }))
    }

    fn target_q0(&self, cfg: &Resolved) -> Option<f64> {
        let m = GaussianMixture::testing();
        let spec = StreamSpec::TestingMixture(m.clone());
        informative_q0(&spec, |s| m.posterior1(&s.x), Some(1.0), cfg.cfg.alpha)
    }
}

// ---------------------------------------------------------------- classify

pub struct Classify;

pub struct ClassifyWiring {
    mixture: GaussianMixture,
    gnb: Option<GaussianNb>,
    feed: Feed,
    error: ErrorFunction,
}

impl ClassifyWiring {
    /// Class probabilities; uniform while some class has no training data.
    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        match &self.gnb {
            None => {
                let p1 = self.mixture.posterior1(x);
                vec![1.0 - p1, p1]
            }
            Some(g) => g.posterior(x).unwrap_or_else(|_| vec![0.5; 2]),
        }
    }
}

impl Policy for ClassifyWiring {
    fn decide(&self, x: &[f64], q: f64) -> Decision {
        let post = self.posterior(x);
        let label = classify_point(&post).expect("two classes");
        Decision {
            selected: SelectionRule::Informative.select(x, q, post[label]),
            set: PredictionSet::singleton(label),
        }
    }

    fn error(&self, y: f64, set: &PredictionSet) -> f64 {
        self.error.eval(y, set)
    }

    fn label_count(&self) -> Option<usize> {
        Some(2)
    }
}

impl Wiring for ClassifyWiring {
    fn observe(&mut self, x: &[f64], y: f64, selected: bool) -> Result<()> {
        if self.feed.route(x, y, selected) {
            if let Some(g) = &mut self.gnb {
                g.update(x, y as usize)?;
            }
        }
        Ok(())
    }

    fn fold_pending(&mut self) -> Result<()> {
        for s in self.feed.drain() {
            if let Some(g) = &mut self.gnb {
                g.update(&s.x, s.y as usize)?;
            }
        }
        Ok(())
    }

    fn informative(&self) -> bool {
        true
    }

    /// Labels whose score `1 − π̂(x, y)` is at most `q`.
    fn aci_set(&self, x: &[f64], q: f64) -> Option<PredictionSet> {
        Some(if q < 0.0 {
            PredictionSet::Empty
        } else if q >= 1.0 {
            PredictionSet::Full
        } else {
            let post = self.posterior(x);
            PredictionSet::labels((0..post.len()).filter(|&k| 1.0 - post[k] <= q).collect())
        })
    }

    fn aci_selected(&self, set: &PredictionSet) -> bool {
        set.is_singleton()
    }
}

impl Experiment for Classify {
    fn name(&self) -> &'static str {
        "classify"
    }

    fn about(&self) -> &'static str {
        "selective binary classification with Gaussian naive Bayes posteriors"
    }

    fn defaults(&self) -> Defaults {
        Defaults { q1: 0.8, c: 0.5, holdout: 10, augment: Augment::All, ..Defaults::default() }
    }

    fn stream_spec(&self, _cfg: &Resolved) -> Result<StreamSpec> {
        Ok(StreamSpec::ClassifMixture(GaussianMixture::classification()))
    }

    fn build(&self, cfg: &Resolved, holdout: &[Sample]) -> Result<Box<dyn Wiring>> {
        let mixture = GaussianMixture::classification();
        let gnb = match cfg.cfg.mode {
            StatisticMode::Oracle => None,
            _ => Some(untrained_gnb(2, mixture.dim(), holdout)?),
        };
        let error = match cfg.cfg.error {
            ErrorKind::Coverage => ErrorFunction::Coverage,
            ErrorKind::Weighted if cfg.cfg.weights.is_empty() => ErrorFunction::uniform(2),
            ErrorKind::Weighted => ErrorFunction::weighted(cfg.cfg.weights.clone())
                .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        };
        if let ErrorFunction::WeightedClassification(w) = &error {
            if w.len() != 2 {
                return Err(Error::InvalidConfig(format!("expected 2 class weights, got {}", w.len())));
            }
        }
        Ok(Box::new(ClassifyWiring { mixture, gnb, feed: Feed::new(cfg), error }))
    }

    fn target_q0(&self, cfg: &Resolved) -> Option<f64> {
        let m = GaussianMixture::classification();
        let spec = StreamSpec::ClassifMixture(m.clone());
        let w = |s: &Sample| {
            let p = m.posterior1(&s.x);
            p.max(1.0 - p)
        };
        informative_q0(&spec, w, Some(1.0), cfg.cfg.alpha)
    }
}

// ---------------------------------------------------------------- mean estimates

/// `(μ̂(x), σ̂(x))` from the true model or a kernel smoother.
enum MeanSource {
    Oracle(RegressionModel),
    Kernel(KernelRegressor),
}

impl MeanSource {
    fn new(cfg: &Resolved, model: &RegressionModel, holdout: &[Sample]) -> Self {
        match cfg.cfg.mode {
            StatisticMode::Oracle => MeanSource::Oracle(model.clone()),
            _ => MeanSource::Kernel(kernel_from(cfg, model.dim(), holdout)),
        }
    }

    fn estimate(&self, x: &[f64]) -> (f64, f64) {
        match self {
            MeanSource::Oracle(m) => (m.mean(x), m.sd(x)),
            MeanSource::Kernel(k) => k.predict(x),
        }
    }

    fn learn(&mut self, x: &[f64], y: f64) {
        if let MeanSource::Kernel(k) = self {
            k.push(x, y);
        }
    }
}

fn regression_model(_cfg: &Resolved) -> RegressionModel {
    RegressionModel::default()
}

// ---------------------------------------------------------------- regress

pub struct Regress;

pub struct RegressWiring {
    mean: MeanSource,
    selection: SelectionRule,
    feed: Feed,
}

impl Policy for RegressWiring {
    fn decide(&self, x: &[f64], q: f64) -> Decision {
        let (mu, sigma) = self.mean.estimate(x);
        Decision {
            selected: self.selection.select(x, q, mu),
            set: regression_interval(mu, sigma, q, 1.0).expect("positive sigma"),
        }
    }
}

impl Wiring for RegressWiring {
    fn observe(&mut self, x: &[f64], y: f64, selected: bool) -> Result<()> {
        if self.feed.route(x, y, selected) {
            self.mean.learn(x, y);
        }
        Ok(())
    }

    fn fold_pending(&mut self) -> Result<()> {
        for s in self.feed.drain() {
            self.mean.learn(&s.x, s.y);
        }
        Ok(())
    }

    fn informative(&self) -> bool {
        false
    }

    fn aci_set(&self, x: &[f64], q: f64) -> Option<PredictionSet> {
        Some(if q < 0.0 { PredictionSet::Empty } else { self.decide(x, q).set })
    }
}

impl Experiment for Regress {
    fn name(&self) -> &'static str {
        "regress"
    }

    fn about(&self) -> &'static str {
        "iid regression with covariate-driven selection and rescaled-residual intervals"
    }

    fn defaults(&self) -> Defaults {
        Defaults { mc_n: KERNEL_MC_N, ..Defaults::default() }
    }

    fn stream_spec(&self, cfg: &Resolved) -> Result<StreamSpec> {
        Ok(StreamSpec::RegressionIid(regression_model(cfg)))
    }

    fn build(&self, cfg: &Resolved, holdout: &[Sample]) -> Result<Box<dyn Wiring>> {
        let model = regression_model(cfg);
        let selection = match cfg.cfg.selection {
            SelectionKind::All => SelectionRule::AllSelect,
            SelectionKind::Region => SelectionRule::RegionSelect(
                Region::new(cfg.cfg.region_lo.clone(), cfg.cfg.region_hi.clone())
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
            ),
            SelectionKind::AdaptiveMean => SelectionRule::AdaptiveMean { y0: cfg.cfg.y0 },
        };
        Ok(Box::new(RegressWiring {
            mean: MeanSource::new(cfg, &model, holdout),
            selection,
            feed: Feed::new(cfg),
        }))
    }

    fn target_q0(&self, cfg: &Resolved) -> Option<f64> {
        Some(1.0 - cfg.cfg.alpha)
    }
}

// ---------------------------------------------------------------- select_predict

pub struct SelectPredict;

pub struct SelectPredictWiring {
    mean: MeanSource,
    y0: f64,
    feed: Feed,
}

impl Policy for SelectPredictWiring {
    /// `W(x) = 1 − Φ(y₀ − μ̂(x))`; the claim is `Y > y₀`.
    fn decide(&self, x: &[f64], q: f64) -> Decision {
        let (mu, _) = self.mean.estimate(x);
        let w = normal::sf(self.y0 - mu);
        Decision { selected: SelectionRule::Informative.select(x, q, w), set: PredictionSet::Ray { lo: self.y0 } }
    }

    /// A false discovery is `Y ≤ y₀`.
    fn error(&self, y: f64, set: &PredictionSet) -> f64 {
        match set {
            PredictionSet::Full => 0.0,
            PredictionSet::Empty => 1.0,
            _ => f64::from(u8::from(y <= self.y0)),
        }
    }
}

impl Wiring for SelectPredictWiring {
    fn observe(&mut self, x: &[f64], y: f64, selected: bool) -> Result<()> {
        if self.feed.route(x, y, selected) {
            self.mean.learn(x, y);
        }
        Ok(())
    }

    fn fold_pending(&mut self) -> Result<()> {
        for s in self.feed.drain() {
            self.mean.learn(&s.x, s.y);
        }
        Ok(())
    }

    fn informative(&self) -> bool {
        true
    }
}

impl Experiment for SelectPredict {
    fn name(&self) -> &'static str {
        "select_predict"
    }

    fn about(&self) -> &'static str {
        "selection by prediction: discover outcomes above y0 with a testing-style recursion"
    }

    fn defaults(&self) -> Defaults {
        Defaults { augment: Augment::Unselected, mc_n: KERNEL_MC_N, ..Defaults::default() }
    }

    fn stream_spec(&self, cfg: &Resolved) -> Result<StreamSpec> {
        Ok(StreamSpec::RegressionIid(regression_model(cfg)))
    }

    fn build(&self, cfg: &Resolved, holdout: &[Sample]) -> Result<Box<dyn Wiring>> {
        let model = regression_model(cfg);
        Ok(Box::new(SelectPredictWiring {
            mean: MeanSource::new(cfg, &model, holdout),
            y0: cfg.cfg.y0,
            feed: Feed::new(cfg),
        }))
    }

    fn target_q0(&self, cfg: &Resolved) -> Option<f64> {
        let model = regression_model(cfg);
        let y0 = cfg.cfg.y0;
        let spec = StreamSpec::RegressionIid(model.clone());
        let b_star = normal::sf(y0 - sup_mean(&model));
        informative_q0(&spec, |s| normal::sf(y0 - model.mean(&s.x)), Some(b_star), cfg.cfg.alpha)
    }
}

// ---------------------------------------------------------------- predict_lb

pub struct PredictLb;

pub struct PredictLbWiring {
    mean: MeanSource,
    y0: f64,
    feed: Feed,
}

impl Policy for PredictLbWiring {
    fn decide(&self, x: &[f64], q: f64) -> Decision {
        let (mu, _) = self.mean.estimate(x);
        Decision { selected: mu + normal::quantile(1.0 - q) > self.y0, set: lower_bound_ray(mu, q) }
    }
}

impl Wiring for PredictLbWiring {
    fn observe(&mut self, x: &[f64], y: f64, selected: bool) -> Result<()> {
        if self.feed.route(x, y, selected) {
            self.mean.learn(x, y);
        }
        Ok(())
    }

    fn fold_pending(&mut self) -> Result<()> {
        for s in self.feed.drain() {
            self.mean.learn(&s.x, s.y);
        }
        Ok(())
    }

    fn informative(&self) -> bool {
        true
    }

    /// False-discovery indicator `1{Y ≤ y₀}` on selected steps.
    fn side_indicator(&self, y: f64, decision: &Decision) -> Option<f64> {
        decision.selected.then(|| f64::from(u8::from(y <= self.y0)))
    }
}

impl Experiment for PredictLb {
    fn name(&self) -> &'static str {
        "predict_lb"
    }

    fn about(&self) -> &'static str {
        "selective regression with a predictive lower bound above y0"
    }

    fn defaults(&self) -> Defaults {
        Defaults { mc_n: KERNEL_MC_N, ..Defaults::default() }
    }

    fn stream_spec(&self, cfg: &Resolved) -> Result<StreamSpec> {
        Ok(StreamSpec::RegressionIid(regression_model(cfg)))
    }

    fn build(&self, cfg: &Resolved, holdout: &[Sample]) -> Result<Box<dyn Wiring>> {
        let model = regression_model(cfg);
        Ok(Box::new(PredictLbWiring {
            mean: MeanSource::new(cfg, &model, holdout),
            y0: cfg.cfg.y0,
            feed: Feed::new(cfg),
        }))
    }

    /// Conditional on selection the ray misses with probability `1 − q` under
    /// the true mean, so `q⁰ = 1 − α` while that level still selects anything.
    fn target_q0(&self, cfg: &Resolved) -> Option<f64> {
        let model = regression_model(cfg);
        let b_star = normal::sf(cfg.cfg.y0 - sup_mean(&model));
        let q0 = 1.0 - cfg.cfg.alpha;
        (q0 < b_star).then_some(q0)
    }
}

// ---------------------------------------------------------------- ar

pub struct Ar;

pub struct ArWiring {
    est: ArEstimator,
    mode: StatisticMode,
    refit: usize,
    since_fit: usize,
    pending: Vec<Sample>,
}

impl Policy for ArWiring {
    fn decide(&self, x: &[f64], q: f64) -> Decision {
        let mu = self.est.predict(x);
        Decision { selected: true, set: regression_interval(mu, 1.0, q, 1.0).expect("unit sigma") }
    }
}

impl ArWiring {
    /// A singular design keeps the previous coefficients.
    fn refit(&mut self) {
        let _ = self.est.fit();
        self.since_fit = 0;
    }
}

impl Wiring for ArWiring {
    fn observe(&mut self, x: &[f64], y: f64, _selected: bool) -> Result<()> {
        match self.mode {
            StatisticMode::Oracle => {}
            StatisticMode::Fixed => self.pending.push(Sample { x: x.to_vec(), y }),
            StatisticMode::Adaptive => {
                self.est.push(x, y);
                self.since_fit += 1;
                if self.since_fit >= self.refit {
                    self.refit();
                }
            }
        }
        Ok(())
    }

    fn fold_pending(&mut self) -> Result<()> {
        if self.mode == StatisticMode::Oracle {
            return Ok(());
        }
        for s in std::mem::take(&mut self.pending) {
            self.est.push(&s.x, s.y);
        }
        self.refit();
        Ok(())
    }

    fn informative(&self) -> bool {
        false
    }

    fn aci_set(&self, x: &[f64], q: f64) -> Option<PredictionSet> {
        Some(if q < 0.0 { PredictionSet::Empty } else { self.decide(x, q).set })
    }
}

impl Experiment for Ar {
    fn name(&self) -> &'static str {
        "ar"
    }

    fn about(&self) -> &'static str {
        "AR(d) forecasting intervals with a ridge-refit linear predictor and no selection"
    }

    fn stream_spec(&self, cfg: &Resolved) -> Result<StreamSpec> {
        Ok(StreamSpec::ar(cfg.cfg.ar_phi.clone()))
    }

    fn build(&self, cfg: &Resolved, holdout: &[Sample]) -> Result<Box<dyn Wiring>> {
        let c = &cfg.cfg;
        let est = match c.mode {
            StatisticMode::Oracle => ArEstimator::with_coefficients(c.ar_phi.clone(), c.ar_lambda)?,
            _ => {
                let mut est = ArEstimator::new(c.ar_phi.len(), c.ar_lambda)?;
                for s in holdout {
                    est.push(&s.x, s.y);
                }
                let _ = est.fit();
                est
            }
        };
        Ok(Box::new(ArWiring { est, mode: c.mode, refit: c.ar_refit, since_fit: 0, pending: Vec::new() }))
    }

    fn target_q0(&self, cfg: &Resolved) -> Option<f64> {
        Some(1.0 - cfg.cfg.alpha)
    }
}

/// Every shipped experiment, in registry order.
pub fn builtin() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(Testing),
        Box::new(Classify),
        Box::new(Regress),
        Box::new(SelectPredict),
        Box::new(PredictLb),
        Box::new(Ar),
    ]
}
