//! `selcon`: run one experiment (or the adversarial suite) and write CSV traces.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use selcon::runner::output::{summary_csv, write_run_set};
use selcon::runner::{run_adversarial_suite, run_with, ExperimentConfig, Registry};

#[derive(Debug, Parser)]
#[command(name = "selcon", version, about = "Online selective conformal inference experiments")]
struct Cli {
    /// Experiment name, `adversarial` for the stress suite, or `list`.
    experiment: String,

    /// Flat key=value config file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    q1: Option<String>,
    /// Step-size scale: γ_j = c·j^(−β).
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    holdout: Option<String>,
    /// adaptive | fixed | oracle
    #[arg(long)]
    mode: Option<String>,
    /// Also run decaying-step ACI with post-hoc selection on the same stream.
    #[arg(long)]
    baseline: bool,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Log IER and power every k steps (0 turns logging off).
    #[arg(long)]
    ier_stride: Option<String>,
    #[arg(long)]
    mc_n: Option<String>,
    /// all | unselected
    #[arg(long)]
    augment: Option<String>,
    /// off | always-err | until-restart
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    restart_after: Option<String>,
    #[arg(long)]
    restart_q1: Option<String>,
    /// all | region | adaptive-mean (regress only)
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    y0: Option<String>,
    /// Comma-separated AR coefficients.
    #[arg(long)]
    ar_phi: Option<String>,
    #[arg(long)]
    ar_lambda: Option<String>,
    #[arg(long)]
    ar_refit: Option<String>,
    #[arg(long)]
    bandwidth: Option<String>,
    /// coverage | weighted (classify only)
    #[arg(long)]
    error: Option<String>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    band: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = [
            ("alpha", &self.alpha),
            ("q1", &self.q1),
            ("c", &self.c),
            ("beta", &self.beta),
            ("horizon", &self.horizon),
            ("holdout", &self.holdout),
            ("mode", &self.mode),
            ("seed", &self.seed),
            ("reps", &self.reps),
            ("ier-stride", &self.ier_stride),
            ("mc-n", &self.mc_n),
            ("augment", &self.augment),
            ("adversary", &self.adversary),
            ("restart-after", &self.restart_after),
            ("restart-q1", &self.restart_q1),
            ("selection", &self.selection),
            ("y0", &self.y0),
            ("ar-phi", &self.ar_phi),
            ("ar-lambda", &self.ar_lambda),
            ("ar-refit", &self.ar_refit),
            ("bandwidth", &self.bandwidth),
            ("error", &self.error),
            ("weights", &self.weights),
            ("band", &self.band),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if self.baseline {
            v.push(("baseline", "true".into()));
        }
        if let Some(out) = &self.out {
            v.push(("out", out.display().to_string()));
        }
        v
    }

    fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in {}", path.display()))?;
        }
        cfg.experiment = self.experiment.clone();
        for (k, v) in self.overrides() {
            cfg.set(k, &v).with_context(|| format!("--{k}"))?;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv}: expected KEY=VALUE"))?;
            cfg.set(k, v).with_context(|| format!("--set {kv}"))?;
        }
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let registry = Registry::builtin();
    if cli.experiment == "list" {
        for e in registry.iter() {
            println!("{:<15} {}", e.name(), e.about());
        }
        println!("{:<15} always-err stress run of every experiment above", "adversarial");
        return Ok(true);
    }
    let cfg = cli.effective_config()?;

    if cfg.experiment == "adversarial" {
        let report = run_adversarial_suite(&registry, &cfg)?;
        let csv = report.to_csv();
        if let Some(dir) = &cfg.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("config.txt"), cfg.to_text())?;
            fs::write(dir.join("adversarial.csv"), &csv)?;
        }
        print!("{csv}");
        if !report.passed() {
            eprintln!("bound violations found");
        }
        return Ok(report.passed());
    }

    if registry.get(&cfg.experiment).is_err() {
        bail!("unknown experiment `{}` (try `selcon list`)", cfg.experiment);
    }
    let set = run_with(&registry, &cfg)?;
    if let Some(dir) = &cfg.out {
        write_run_set(dir, &set).with_context(|| format!("writing {}", dir.display()))?;
    }
    print!("{}", summary_csv(&set.summary_rows()));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
