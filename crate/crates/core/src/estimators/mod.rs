//! Plug-in estimators refreshed from past data only.
//!
//! Every estimator here is updated after the outcome at time `t` is revealed
//! and queried before the next one, so whatever it returns at time `t` only
//! depends on observations with index `< t`.

mod ar;
mod gnb;
mod kernel;

pub use ar::{ar_fit, ArEstimator};
pub use gnb::GaussianNb;
pub use kernel::KernelRegressor;

use crate::normal;

/// Rescaled residual score `2B·Φ(|y − μ̂| / σ̂) − B`, valued in `[0, B)`.
pub fn adaptive_residual_score(mu_hat: f64, sigma_hat: f64, y: f64, bound: f64) -> f64 {
    debug_assert!(sigma_hat > 0.0);
    2.0 * bound * normal::cdf((y - mu_hat).abs() / sigma_hat) - bound
}
