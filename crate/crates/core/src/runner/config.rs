//! Experiment configuration and its flat `key=value` text form.
//!
//! The same keys are used by the config file, the command line (as
//! `--key value`) and the `config.txt` echo written next to the outputs.
//! Values that depend on the experiment (`q1`, `c`, `holdout`, `augment`)
//! stay unset until [`ExperimentConfig::resolve`] fills them from the
//! experiment's defaults.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sci::StepSchedule;

/// Where the adaptive statistic comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticMode {
    /// Refit from every pair the algorithm feeds back.
    Adaptive,
    /// Fit once on the holdout set.
    Fixed,
    /// True model quantities.
    Oracle,
}

/// Which online pairs are appended to the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Augment {
    All,
    Unselected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionKind {
    All,
    Region,
    AdaptiveMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryMode {
    Off,
    /// Every nontrivial emitted set is wrong.
    AlwaysErr,
    /// Always-err until the first restart, natural outcomes afterwards.
    UntilRestart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Coverage,
    Weighted,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($ty),
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $($ty::$variant => $text,)+ })
            }
        }
    };
}

keyword_enum!(StatisticMode { Adaptive => "adaptive", Fixed => "fixed", Oracle => "oracle" });
keyword_enum!(Augment { All => "all", Unselected => "unselected" });
keyword_enum!(SelectionKind { All => "all", Region => "region", AdaptiveMean => "adaptive-mean" });
keyword_enum!(AdversaryMode { Off => "off", AlwaysErr => "always-err", UntilRestart => "until-restart" });
keyword_enum!(ErrorKind { Coverage => "coverage", Weighted => "weighted" });

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub alpha: f64,
    pub q1: Option<f64>,
    pub c: Option<f64>,
    pub beta: f64,
    pub horizon: usize,
    pub holdout: Option<usize>,
    pub mode: StatisticMode,
    /// Also run the decaying-step ACI baseline with post-hoc selection.
    pub baseline: bool,
    pub seed: u64,
    pub reps: usize,
    /// Log IER and power every this many steps; 0 disables.
    pub ier_stride: usize,
    /// Monte-Carlo draws per IER/power estimate.
    pub mc_n: Option<usize>,
    /// Restart after this many consecutive steps with `q ≥ B`; 0 disables.
    pub restart_after: usize,
    pub restart_q1: Option<f64>,
    pub augment: Option<Augment>,
    pub adversary: AdversaryMode,
    pub selection: SelectionKind,
    pub region_lo: Vec<f64>,
    pub region_hi: Vec<f64>,
    pub y0: f64,
    pub ar_phi: Vec<f64>,
    pub ar_lambda: f64,
    pub ar_refit: usize,
    /// Kernel bandwidth scale `h0`.
    pub bandwidth: f64,
    pub error: ErrorKind,
    /// Class weights of the weighted error; uniform when empty.
    pub weights: Vec<f64>,
    /// Band around `q⁰` used for time-to-convergence.
    pub band: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "testing".into(),
            alpha: 0.1,
            q1: None,
            c: None,
            beta: StepSchedule::DEFAULT_BETA,
            horizon: 3000,
            holdout: None,
            mode: StatisticMode::Adaptive,
            baseline: false,
            seed: 0,
            reps: 1,
            ier_stride: 50,
            mc_n: None,
            restart_after: 200,
            restart_q1: None,
            augment: None,
            adversary: AdversaryMode::Off,
            selection: SelectionKind::All,
            region_lo: vec![0.0, 0.0],
            region_hi: vec![0.5, 1.0],
            y0: 0.5,
            ar_phi: vec![0.5],
            ar_lambda: 1e-6,
            ar_refit: 1,
            bandwidth: 1.0,
            error: ErrorKind::Coverage,
            weights: Vec::new(),
            band: 0.05,
            out: None,
        }
    }
}

/// Every key accepted by [`ExperimentConfig::set`], in echo order.
pub const KEYS: &[&str] = &[
    "experiment", "alpha", "q1", "c", "beta", "horizon", "holdout", "mode", "baseline", "seed", "reps",
    "ier-stride", "mc-n", "restart-after", "restart-q1", "augment", "adversary", "selection", "region-lo",
    "region-hi", "y0", "ar-phi", "ar-lambda", "ar-refit", "bandwidth", "error", "weights", "band", "out",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "auto" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        v => Err(Error::InvalidConfig(format!("bad boolean `{v}` for `{key}`"))),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl ExperimentConfig {
    /// Set one key. Underscores and dashes are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let k = key.as_str();
        match k {
            "experiment" => self.experiment = value.trim().to_string(),
            "alpha" => self.alpha = parse(k, value)?,
            "q1" => self.q1 = parse_opt(k, value)?,
            "c" => self.c = parse_opt(k, value)?,
            "beta" => self.beta = parse(k, value)?,
            "horizon" => self.horizon = parse(k, value)?,
            "holdout" => self.holdout = parse_opt(k, value)?,
            "mode" => self.mode = value.parse()?,
            "baseline" => self.baseline = parse_bool(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "reps" => self.reps = parse(k, value)?,
            "ier-stride" => self.ier_stride = parse(k, value)?,
            "mc-n" => self.mc_n = parse_opt(k, value)?,
            "restart-after" => self.restart_after = parse(k, value)?,
            "restart-q1" => self.restart_q1 = parse_opt(k, value)?,
            "augment" => self.augment = parse_opt(k, value)?,
            "adversary" => self.adversary = value.parse()?,
            "selection" => self.selection = value.parse()?,
            "region-lo" => self.region_lo = parse_list(k, value)?,
            "region-hi" => self.region_hi = parse_list(k, value)?,
            "y0" => self.y0 = parse(k, value)?,
            "ar-phi" => self.ar_phi = parse_list(k, value)?,
            "ar-lambda" => self.ar_lambda = parse(k, value)?,
            "ar-refit" => self.ar_refit = parse(k, value)?,
            "bandwidth" => self.bandwidth = parse(k, value)?,
            "error" => self.error = value.parse()?,
            "weights" => self.weights = parse_list(k, value)?,
            "band" => self.band = parse(k, value)?,
            "out" => {
                self.out = match value.trim() {
                    "" | "none" => None,
                    v => Some(PathBuf::from(v)),
                }
            }
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Apply a `key=value` text: one key per line, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// The config as `key=value` lines, readable by [`ExperimentConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("experiment", self.experiment.clone());
        kv("alpha", self.alpha.to_string());
        kv("q1", opt(&self.q1));
        kv("c", opt(&self.c));
        kv("beta", self.beta.to_string());
        kv("horizon", self.horizon.to_string());
        kv("holdout", opt(&self.holdout));
        kv("mode", self.mode.to_string());
        kv("baseline", self.baseline.to_string());
        kv("seed", self.seed.to_string());
        kv("reps", self.reps.to_string());
        kv("ier-stride", self.ier_stride.to_string());
        kv("mc-n", opt(&self.mc_n));
        kv("restart-after", self.restart_after.to_string());
        kv("restart-q1", opt(&self.restart_q1));
        kv("augment", opt(&self.augment));
        kv("adversary", self.adversary.to_string());
        kv("selection", self.selection.to_string());
        kv("region-lo", join(&self.region_lo));
        kv("region-hi", join(&self.region_hi));
        kv("y0", self.y0.to_string());
        kv("ar-phi", join(&self.ar_phi));
        kv("ar-lambda", self.ar_lambda.to_string());
        kv("ar-refit", self.ar_refit.to_string());
        kv("bandwidth", self.bandwidth.to_string());
        kv("error", self.error.to_string());
        kv("weights", join(&self.weights));
        kv("band", self.band.to_string());
        kv("out", self.out.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string()));
        s
    }

    /// Fill experiment-dependent values and check the invariants.
    pub fn resolve(&self, defaults: &Defaults) -> Result<Resolved> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.reps == 0 {
            return bad("reps must be >= 1".into());
        }
        if self.ar_refit == 0 {
            return bad("ar-refit must be >= 1".into());
        }
        if !(self.band >= 0.0) {
            return bad("band must be >= 0".into());
        }
        let mc_n = self.mc_n.unwrap_or(defaults.mc_n);
        if self.ier_stride > 0 && mc_n < crate::oracle::MIN_MC_N {
            return bad(format!("mc-n must be >= {}", crate::oracle::MIN_MC_N));
        }
        let bound = 1.0;
        let q1 = self.q1.unwrap_or(defaults.q1);
        if !(0.0..bound).contains(&q1) {
            return bad(format!("q1 must lie in [0, B), got {q1}"));
        }
        let restart_q1 = self.restart_q1.unwrap_or(q1);
        if !(0.0..bound).contains(&restart_q1) {
            return bad(format!("restart-q1 must lie in [0, B), got {restart_q1}"));
        }
        let schedule = StepSchedule::new(self.c.unwrap_or(defaults.c), self.beta)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Resolved {
            cfg: self.clone(),
            q1,
            restart_q1,
            schedule,
            holdout: self.holdout.unwrap_or(defaults.holdout),
            augment: self.augment.unwrap_or(defaults.augment),
            mc_n,
            bound,
        })
    }
}

/// Per-experiment defaults for the keys left on `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub q1: f64,
    pub c: f64,
    pub holdout: usize,
    pub augment: Augment,
    pub mc_n: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Self { q1: 0.5, c: 1.0, holdout: 50, augment: Augment::All, mc_n: crate::oracle::DEFAULT_MC_N }
    }
}

/// A config with every experiment-dependent value decided.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub cfg: ExperimentConfig,
    pub q1: f64,
    pub restart_q1: f64,
    pub schedule: StepSchedule,
    pub holdout: usize,
    pub augment: Augment,
    pub mc_n: usize,
    /// Score bound `B`; every shipped wiring works on the unit scale.
    pub bound: f64,
}
