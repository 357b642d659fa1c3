//! The two traits every experiment implements.

use crate::datagen::{Sample, StreamSpec};
use crate::error::Result;
use crate::policy::{Decision, Policy};
use crate::rules::PredictionSet;

use super::config::{Augment, Defaults, Resolved, StatisticMode};

/// A [`Policy`] that can also learn from revealed outcomes.
///
/// The driver calls [`Policy::decide`] before [`Wiring::observe`] within each
/// step, so the rule at time `t` only ever sees pairs with index `< t`.
pub trait Wiring: Policy {
    /// Reveal `(x, y)` after the decision at this step.
    fn observe(&mut self, x: &[f64], y: f64, selected: bool) -> Result<()>;

    /// Move every pair held back from training into the training set.
    fn fold_pending(&mut self) -> Result<()>;

    /// Whether selection depends on the threshold (`1{W(x) > q}`).
    fn informative(&self) -> bool;

    /// Unselective sublevel set for the decaying-ACI baseline; `None` when
    /// the experiment has no baseline.
    fn aci_set(&self, _x: &[f64], _q: f64) -> Option<PredictionSet> {
        None
    }

    /// Post-hoc selection applied to baseline sets.
    fn aci_selected(&self, _set: &PredictionSet) -> bool {
        true
    }

    /// Secondary per-step indicator recorded next to the trace.
    fn side_indicator(&self, _y: f64, _decision: &Decision) -> Option<f64> {
        None
    }
}

/// A named experiment: a data source plus a way to build its wiring.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn about(&self) -> &'static str;

    fn defaults(&self) -> Defaults {
        Defaults::default()
    }

    fn stream_spec(&self, cfg: &Resolved) -> Result<StreamSpec>;

    fn build(&self, cfg: &Resolved, holdout: &[Sample]) -> Result<Box<dyn Wiring>>;

    /// The limit `q⁰` the threshold should settle at, when it exists.
    fn target_q0(&self, _cfg: &Resolved) -> Option<f64> {
        None
    }
}

/// Routes revealed pairs to the estimator according to mode and augmentation.
#[derive(Debug, Clone)]
pub(crate) struct Feed {
    mode: StatisticMode,
    augment: Augment,
    pending: Vec<Sample>,
}

impl Feed {
    pub(crate) fn new(cfg: &Resolved) -> Self {
        Self { mode: cfg.cfg.mode, augment: cfg.augment, pending: Vec::new() }
    }

    /// `true` when the pair should be used for training right away.
    pub(crate) fn route(&mut self, x: &[f64], y: f64, selected: bool) -> bool {
        match self.mode {
            StatisticMode::Oracle => false,
            StatisticMode::Adaptive if self.augment == Augment::All || !selected => true,
            _ => {
                self.pending.push(Sample { x: x.to_vec(), y });
                false
            }
        }
    }

    pub(crate) fn drain(&mut self) -> Vec<Sample> {
        std::mem::take(&mut self.pending)
    }
}
