//! The selection-gated threshold recursion.
//!
//! At every time `t` the procedure holds a threshold `q_t`. When the current
//! example is selected, the decision made at `q_t` is scored and
//!
//! ```text
//! q_{t+1} = q_t + γ_{J(t)} · (react(err_t, q_t) − α)
//! react(e, q) = e   if q ≥ 0
//!             = 1   if q < 0
//! ```
//!
//! where `J(t)` is one plus the number of selections strictly before `t`.
//! Unselected steps leave both `q` and `J` untouched, so the step size only
//! decays with the number of selections.
//!
//! For a positive nonincreasing schedule the threshold never leaves
//! `[−α·γ₁, B + (1 − α)·γ₁]`, whatever the data.

use crate::error::{contract, Result};

/// Power-law step sizes `γ_j = c · j^(−β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub c: f64,
    pub beta: f64,
}

impl StepSchedule {
    pub const DEFAULT_BETA: f64 = 0.75;

    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(contract(format!("step scale c must be positive, got {c}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(contract(format!("step exponent beta must lie in (0,1), got {beta}")));
        }
        Ok(Self { c, beta })
    }

    /// `γ_j`. Index 0 is rejected.
    pub fn gamma(&self, j: u64) -> Result<f64> {
        if j == 0 {
            return Err(contract("step index j must be >= 1"));
        }
        Ok(self.gamma_unchecked(j))
    }

    #[inline]
    pub(crate) fn gamma_unchecked(&self, j: u64) -> f64 {
        if j == 1 {
            self.c
        } else {
            self.c * (j as f64).powf(-self.beta)
        }
    }

    /// `max_{j ≤ upto} γ_j`; equals `γ₁` since the schedule is nonincreasing.
    pub fn max_gamma(&self, upto: u64) -> f64 {
        debug_assert!(upto >= 1);
        self.c
    }
}

/// Update signal: the realized error when `q ≥ 0`, forced to 1 when `q < 0`.
pub fn react(err_value: f64, q: f64) -> Result<f64> {
    check_err(err_value)?;
    Ok(if q >= 0.0 { err_value } else { 1.0 })
}

fn check_err(err_value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&err_value) {
        Ok(())
    } else {
        Err(contract(format!("error value must lie in [0,1], got {err_value}")))
    }
}

/// `J(t) = 1 + Σ_{i<t} S_i` for the selections made before `t`.
pub fn selection_count(selections: &[bool]) -> u64 {
    1 + selections.iter().filter(|&&s| s).count() as u64
}

/// Threshold state of the recursion. Value-semantic: [`SciState::step`]
/// returns the successor and leaves `self` untouched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SciState {
    /// Threshold used at time `t`.
    pub q: f64,
    /// `J(t)`.
    pub j: u64,
    /// Current time index, starting at 1.
    pub t: u64,
    pub alpha: f64,
    /// Upper bound `B` of the score range.
    pub bound: f64,
    pub schedule: StepSchedule,
}

impl SciState {
    pub fn new(q1: f64, alpha: f64, bound: f64, schedule: StepSchedule) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(contract(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(contract(format!("score bound must be positive, got {bound}")));
        }
        if !(q1 >= 0.0 && q1 < bound) {
            return Err(contract(format!("q1 must lie in [0, B), got {q1}")));
        }
        Ok(Self { q: q1, j: 1, t: 1, alpha, bound, schedule })
    }

    /// Starting state with `q₁ = B / 2`.
    pub fn with_midpoint(alpha: f64, bound: f64, schedule: StepSchedule) -> Result<Self> {
        Self::new(0.5 * bound, alpha, bound, schedule)
    }

    /// Step size `γ_{J(t)}` that a selection at the current time would use.
    pub fn current_gamma(&self) -> f64 {
        self.schedule.gamma_unchecked(self.j)
    }

    /// One step of the recursion. `err_value` is ignored when `selected` is false.
    pub fn step(&self, selected: bool, err_value: f64) -> Result<Self> {
        let mut next = *self;
        next.t += 1;
        if selected {
            let signal = react(err_value, self.q)?;
            next.q = self.q + self.current_gamma() * (signal - self.alpha);
            next.j += 1;
        }
        Ok(next)
    }

    /// Range the threshold is guaranteed to stay in for any data sequence.
    pub fn threshold_bounds(&self) -> (f64, f64) {
        let g = self.schedule.max_gamma(self.j);
        (-self.alpha * g, self.bound + (1.0 - self.alpha) * g)
    }

    pub fn within_bounds(&self, tol: f64) -> bool {
        let (lo, hi) = self.threshold_bounds();
        self.q >= lo - tol && self.q <= hi + tol
    }
}
