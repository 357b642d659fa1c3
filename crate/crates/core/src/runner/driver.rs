//! The online loop: decide, reveal, update, log.

use rayon::prelude::*;

use crate::datagen::{adversarial_outcome, Stream, StreamSpec};
use crate::error::{Error, Result};
use crate::metrics::{fcp_bound, summarize, Summary, TraceRecord};
use crate::oracle::estimate_snapshot;
use crate::rules::PredictionSet;
use crate::sci::SciState;

use super::config::{AdversaryMode, ExperimentConfig, Resolved};
use super::registry::Registry;
use super::wiring::{Experiment, Wiring};

/// Slack allowed when checking the threshold and FCP bounds.
pub const BOUND_TOL: f64 = 1e-12;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep`: `splitmix64(master + rep·φ)`, φ the 64-bit golden ratio.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    splitmix64(master.wrapping_add((rep as u64).wrapping_mul(GOLDEN)))
}

/// Seed of the Monte-Carlo snapshot logged at time `t`.
fn snapshot_seed(rep_seed: u64, t: u64) -> u64 {
    splitmix64(rep_seed ^ t.wrapping_mul(GOLDEN))
}

/// Per-step checks of the threshold range and the FCP bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundChecks {
    pub steps: usize,
    /// Times at which the threshold left its guaranteed range.
    pub range_violations: Vec<u64>,
    /// Times at which the segment FCP exceeded its bound.
    pub fcp_violations: Vec<u64>,
    /// Smallest `bound − fcp` seen.
    pub min_slack: f64,
}

impl Default for BoundChecks {
    fn default() -> Self {
        Self { steps: 0, range_violations: Vec::new(), fcp_violations: Vec::new(), min_slack: f64::INFINITY }
    }
}

impl BoundChecks {
    pub fn clean(&self) -> bool {
        self.range_violations.is_empty() && self.fcp_violations.is_empty()
    }
}

/// One replication.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rep: usize,
    pub seed: u64,
    pub trace: Vec<TraceRecord>,
    /// Experiment-specific indicator per step (see [`Wiring::side_indicator`]).
    pub side: Vec<Option<f64>>,
    /// Decaying-ACI trace on the same stream, when requested.
    pub baseline: Option<Vec<TraceRecord>>,
    /// Times at which a restart took effect.
    pub restarts: Vec<u64>,
    pub checks: BoundChecks,
    pub summary: Summary,
}

/// All replications of one config.
#[derive(Debug, Clone)]
pub struct RunSet {
    pub resolved: Resolved,
    pub q0: Option<f64>,
    pub runs: Vec<RunOutput>,
}

/// Row of the summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub rep: usize,
    pub seed: u64,
    pub final_fcp: f64,
    pub final_q: f64,
    pub selection_rate: f64,
    pub restarts: usize,
    pub t_converge: Option<u64>,
}

impl RunSet {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.runs
            .iter()
            .map(|r| SummaryRow {
                rep: r.rep,
                seed: r.seed,
                final_fcp: r.summary.final_fcp,
                final_q: r.summary.final_q,
                selection_rate: r.summary.selection_rate,
                restarts: r.restarts.len(),
                t_converge: r.summary.t_converge,
            })
            .collect()
    }
}

/// Stream to draw Monte-Carlo snapshots from: the natural iid model, if any.
fn snapshot_spec(spec: &StreamSpec) -> Option<StreamSpec> {
    match spec {
        StreamSpec::ArProcess { .. } => None,
        StreamSpec::AdversarialAlwaysErr(inner) => snapshot_spec(inner),
        s => Some(s.clone()),
    }
}

fn open_stream(exp: &dyn Experiment, cfg: &Resolved, seed: u64) -> Result<(Stream, Box<dyn Wiring>)> {
    let mut spec = exp.stream_spec(cfg)?;
    if cfg.cfg.adversary != AdversaryMode::Off {
        spec = StreamSpec::AdversarialAlwaysErr(Box::new(spec));
    }
    let mut stream = Stream::new(spec, seed)?;
    let holdout = stream.holdout(cfg.holdout);
    let wiring = exp.build(cfg, &holdout)?;
    Ok((stream, wiring))
}

/// Run the selective recursion for one replication.
pub fn run_replication(exp: &dyn Experiment, cfg: &Resolved, rep: usize, q0: Option<f64>) -> Result<RunOutput> {
    let c = &cfg.cfg;
    let seed = replication_seed(c.seed, rep);
    let (mut stream, mut wiring) = open_stream(exp, cfg, seed)?;
    let mc_spec = snapshot_spec(stream.spec());
    let mut adversary = c.adversary != AdversaryMode::Off;

    let mut state = SciState::new(cfg.q1, c.alpha, cfg.bound, cfg.schedule)?;
    let mut trace = Vec::with_capacity(c.horizon);
    let mut side = Vec::with_capacity(c.horizon);
    let mut restarts = Vec::new();
    let mut checks = BoundChecks::default();
    // counts within the current restart segment
    let (mut seg_sel, mut seg_err, mut frozen_for) = (0u64, 0.0f64, 0usize);

    for t in 1..=c.horizon as u64 {
        debug_assert_eq!(state.t, t, "decision at t must use the state built from steps before t");
        let mut sample = stream.next_sample();
        let decision = wiring.decide(&sample.x, state.q);
        if adversary {
            sample.y = adversarial_outcome(&decision.set, sample.y, wiring.label_count());
        }
        let err = decision.selected.then(|| wiring.error(sample.y, &decision.set));

        let (ier, power) = match &mc_spec {
            Some(spec) if c.ier_stride > 0 && t % c.ier_stride as u64 == 0 => {
                let est = estimate_snapshot(spec, wiring.as_ref(), state.q, cfg.mc_n, snapshot_seed(seed, t))?;
                ((est.ier.n > 0).then_some(est.ier.value), Some(est.power.value))
            }
            _ => (None, None),
        };

        if let Some(e) = err {
            seg_sel += 1;
            seg_err += e;
        }
        let fcp = seg_err / seg_sel.max(1) as f64;
        let bound = fcp_bound(seg_sel.max(1), &cfg.schedule, cfg.bound, c.alpha);
        checks.steps += 1;
        checks.min_slack = checks.min_slack.min(bound - fcp);
        if fcp > bound + BOUND_TOL {
            checks.fcp_violations.push(t);
        }
        trace.push(TraceRecord { t, selected: decision.selected, err, q: state.q, j: state.j, fcp, bound, ier, power });
        side.push(wiring.side_indicator(sample.y, &decision));

        let q_used = state.q;
        state = state.step(decision.selected, err.unwrap_or(0.0))?;
        if !state.within_bounds(BOUND_TOL) {
            debug_assert!(false, "threshold {} left {:?} at t={t}", state.q, state.threshold_bounds());
            checks.range_violations.push(t);
        }
        wiring.observe(&sample.x, sample.y, decision.selected)?;

        if wiring.informative() && c.restart_after > 0 {
            frozen_for = if q_used >= cfg.bound { frozen_for + 1 } else { 0 };
            if frozen_for >= c.restart_after {
                wiring.fold_pending()?;
                state = SciState { t: t + 1, ..SciState::new(cfg.restart_q1, c.alpha, cfg.bound, cfg.schedule)? };
                restarts.push(t + 1);
                (seg_sel, seg_err, frozen_for) = (0, 0.0, 0);
                if c.adversary == AdversaryMode::UntilRestart {
                    adversary = false;
                }
            }
        }
    }

    let baseline = if c.baseline { Some(run_baseline(exp, cfg, seed)?) } else { None };
    let summary = summarize(&trace, q0, c.band)?;
    Ok(RunOutput { rep, seed, trace, side, baseline, restarts, checks, summary })
}

/// Decaying-step ACI on the same stream: updates at every step, selection applied post hoc.
pub fn run_baseline(exp: &dyn Experiment, cfg: &Resolved, seed: u64) -> Result<Vec<TraceRecord>> {
    let c = &cfg.cfg;
    let plain = Resolved { cfg: ExperimentConfig { adversary: AdversaryMode::Off, ..c.clone() }, ..cfg.clone() };
    let (mut stream, mut wiring) = open_stream(exp, &plain, seed)?;
    let mut q = cfg.q1;
    let (mut n_sel, mut n_err) = (0u64, 0.0f64);
    let mut trace = Vec::with_capacity(c.horizon);
    for t in 1..=c.horizon as u64 {
        let sample = stream.next_sample();
        let set: PredictionSet = wiring
            .aci_set(&sample.x, q)
            .ok_or_else(|| Error::InvalidConfig(format!("experiment `{}` has no baseline", exp.name())))?;
        let selected = wiring.aci_selected(&set);
        let e = wiring.error(sample.y, &set);
        if selected {
            n_sel += 1;
            n_err += e;
        }
        trace.push(TraceRecord {
            t,
            selected,
            err: selected.then_some(e),
            q,
            j: t,
            fcp: n_err / n_sel.max(1) as f64,
            bound: f64::NAN,
            ier: None,
            power: None,
        });
        q += cfg.schedule.gamma_unchecked(t) * (e - c.alpha);
        wiring.observe(&sample.x, sample.y, selected)?;
    }
    Ok(trace)
}

/// Run every replication of `cfg` with an explicit registry.
pub fn run_with(registry: &Registry, cfg: &ExperimentConfig) -> Result<RunSet> {
    let exp = registry.get(&cfg.experiment)?;
    let resolved = cfg.resolve(&exp.defaults())?;
    let q0 = exp.target_q0(&resolved);
    let runs = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_replication(exp, &resolved, rep, q0))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunSet { resolved, q0, runs })
}

/// Run every replication of `cfg` with the built-in experiments.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSet> {
    run_with(&Registry::builtin(), cfg)
}

fn run_named(name: &str, cfg: &ExperimentConfig) -> Result<RunOutput> {
    let registry = Registry::builtin();
    let exp = registry.get(name)?;
    let resolved = ExperimentConfig { experiment: name.into(), ..cfg.clone() }.resolve(&exp.defaults())?;
    let q0 = exp.target_q0(&resolved);
    run_replication(exp, &resolved, 0, q0)
}

/// First replication of the testing experiment.
pub fn run_testing(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_named("testing", cfg)
}

pub fn run_classify(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_named("classify", cfg)
}

pub fn run_regress(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_named("regress", cfg)
}

pub fn run_select_predict(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_named("select_predict", cfg)
}

pub fn run_predict_lb(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_named("predict_lb", cfg)
}

pub fn run_ar(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_named("ar", cfg)
}
