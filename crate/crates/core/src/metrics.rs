//! Running error metrics and the adversarial FCP bound.

use crate::error::{Error, Result};
use crate::sci::StepSchedule;

/// One time step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub selected: bool,
    /// Realized error; `None` when not selected.
    pub err: Option<f64>,
    /// Threshold used at `t`.
    pub q: f64,
    /// `J(t)` within the current restart segment.
    pub j: u64,
    /// FCP up to and including `t`, within the current restart segment.
    pub fcp: f64,
    /// `α + (B + γ₁) / (J(t)·γ_{J(t)})`.
    pub bound: f64,
    pub ier: Option<f64>,
    pub power: Option<f64>,
}

/// `Σ err_k S_k / max(1, Σ S_k)` over the whole trace.
pub fn fcp(trace: &[TraceRecord]) -> f64 {
    let (num, den) = trace
        .iter()
        .filter(|r| r.selected)
        .fold((0.0, 0u64), |(n, d), r| (n + r.err.unwrap_or(0.0), d + 1));
    num / den.max(1) as f64
}

/// FCP from parallel selection and error slices.
pub fn fcp_from(selected: &[bool], errors: &[f64]) -> f64 {
    let (num, den) = selected
        .iter()
        .zip(errors)
        .filter(|(s, _)| **s)
        .fold((0.0, 0u64), |(n, d), (_, e)| (n + e, d + 1));
    num / den.max(1) as f64
}

/// Adversarial FCP bound for a nonincreasing schedule: `α + (B + γ₁)/(J·γ_J)`.
pub fn fcp_bound(j: u64, schedule: &StepSchedule, bound: f64, alpha: f64) -> f64 {
    let j = j.max(1);
    alpha + (bound + schedule.c) / (j as f64 * schedule.gamma_unchecked(j))
}

/// General form for any positive step sequence:
/// `α + (B + max_{j≤J} γ_j)/J · (1/γ₁ + Σ_{j=2}^{J} |1/γ_j − 1/γ_{j−1}|)`.
pub fn fcp_bound_general(j: u64, gamma: impl Fn(u64) -> f64, bound: f64, alpha: f64) -> f64 {
    let j = j.max(1);
    let mut max_g = gamma(1);
    let mut variation = 1.0 / gamma(1);
    let mut prev = gamma(1);
    for k in 2..=j {
        let g = gamma(k);
        max_g = max_g.max(g);
        variation += (1.0 / g - 1.0 / prev).abs();
        prev = g;
    }
    alpha + (bound + max_g) / j as f64 * variation
}

/// Aggregates of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub final_fcp: f64,
    pub final_q: f64,
    pub selection_rate: f64,
    /// Mean of the logged IER estimates, if any were logged.
    pub mean_ier: Option<f64>,
    /// First `t` after which `|q − q⁰| ≤ band` holds for the rest of the trace.
    pub t_converge: Option<u64>,
}

pub fn summarize(trace: &[TraceRecord], q0: Option<f64>, band: f64) -> Result<Summary> {
    let last = trace.last().ok_or(Error::EmptyTrace)?;
    let n_sel = trace.iter().filter(|r| r.selected).count();
    let iers: Vec<f64> = trace.iter().filter_map(|r| r.ier).collect();
    let t_converge = q0.and_then(|q0| {
        let tail = trace.iter().rev().take_while(|r| (r.q - q0).abs() <= band).count();
        (tail > 0).then(|| trace[trace.len() - tail].t)
    });
    Ok(Summary {
        final_fcp: fcp(trace),
        final_q: last.q,
        selection_rate: n_sel as f64 / trace.len() as f64,
        mean_ier: (!iers.is_empty()).then(|| iers.iter().sum::<f64>() / iers.len() as f64),
        t_converge,
    })
}
