//! The frozen decision surface of a threshold-sequence procedure.

use crate::rules::PredictionSet;

/// What the procedure does with one covariate at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub selected: bool,
    pub set: PredictionSet,
}

/// Selection and prediction-set rules evaluated with estimators frozen at
/// the current time. Implementations must not mutate anything in
/// [`Policy::decide`], so Monte-Carlo functionals of a snapshot are well defined.
pub trait Policy: Send + Sync {
    /// `(S_t(x, q), C_t(x, q))`.
    fn decide(&self, x: &[f64], q: f64) -> Decision;

    /// `err(y, C)`; coverage error unless overridden.
    fn error(&self, y: f64, set: &PredictionSet) -> f64 {
        crate::rules::coverage_error(y, set)
    }

    /// Size of the label space for classification-type outcomes.
    fn label_count(&self) -> Option<usize> {
        None
    }

    /// Score upper bound `B`.
    fn bound(&self) -> f64 {
        1.0
    }
}
