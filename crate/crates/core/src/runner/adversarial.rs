//! Always-err stress runs of every registered experiment.

use std::fmt::Write as _;

use crate::error::Result;

use super::config::{AdversaryMode, ExperimentConfig};
use super::driver::run_with;
use super::registry::Registry;

/// Outcome of the adversarial runs of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialRow {
    pub experiment: String,
    pub runs: usize,
    pub steps: usize,
    pub range_violations: usize,
    pub fcp_violations: usize,
    /// `(seed, t)` of the first violation found.
    pub first_violation: Option<(u64, u64)>,
    /// Smallest `bound − fcp` over all steps.
    pub min_slack: f64,
    pub max_final_fcp: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialReport {
    pub rows: Vec<AdversarialRow>,
}

impl AdversarialReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.range_violations == 0 && r.fcp_violations == 0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "experiment,runs,steps,range_violations,fcp_violations,first_violation_seed,first_violation_t,min_slack,max_final_fcp,restarts\n",
        );
        for r in &self.rows {
            let (vs, vt) = r.first_violation.map_or((String::new(), String::new()), |(s, t)| (s.to_string(), t.to_string()));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.experiment,
                r.runs,
                r.steps,
                r.range_violations,
                r.fcp_violations,
                vs,
                vt,
                super::output::fmt_num(r.min_slack),
                super::output::fmt_num(r.max_final_fcp),
                r.restarts
            );
        }
        s
    }
}

/// Run `cfg.reps` always-err replications of `cfg.horizon` steps against every
/// experiment in `registry` and collect bound violations.
pub fn run_adversarial_suite(registry: &Registry, cfg: &ExperimentConfig) -> Result<AdversarialReport> {
    let mut rows = Vec::new();
    for name in registry.names() {
        let exp_cfg = ExperimentConfig {
            experiment: name.to_string(),
            adversary: if cfg.adversary == AdversaryMode::Off { AdversaryMode::AlwaysErr } else { cfg.adversary },
            ier_stride: 0,
            baseline: false,
            ..cfg.clone()
        };
        let set = run_with(registry, &exp_cfg)?;
        let mut row = AdversarialRow {
            experiment: name.to_string(),
            runs: set.runs.len(),
            steps: 0,
            range_violations: 0,
            fcp_violations: 0,
            first_violation: None,
            min_slack: f64::INFINITY,
            max_final_fcp: 0.0,
            restarts: 0,
        };
        for run in &set.runs {
            let c = &run.checks;
            row.steps += c.steps;
            row.range_violations += c.range_violations.len();
            row.fcp_violations += c.fcp_violations.len();
            if row.first_violation.is_none() {
                row.first_violation = c.range_violations.iter().chain(&c.fcp_violations).min().map(|&t| (run.seed, t));
            }
            row.min_slack = row.min_slack.min(c.min_slack);
            row.max_final_fcp = row.max_final_fcp.max(run.summary.final_fcp);
            row.restarts += run.restarts.len();
        }
        rows.push(row);
    }
    Ok(AdversarialReport { rows })
}
