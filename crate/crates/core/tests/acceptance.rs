//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! with the measured numbers, then asserts.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selcon::datagen::{GaussianMixture, RegressionModel, Stream, StreamSpec};
use selcon::estimators::{adaptive_residual_score, ar_fit};
use selcon::metrics::fcp_bound_general;
use selcon::oracle::{estimate_ier, estimate_power, solve_q0, BenchmarkFn, DEFAULT_SOLVER_TOL};
use selcon::policy::Policy;
use selcon::rules::{regression_interval, PredictionSet};
use selcon::runner::experiments::{Classify, PredictLb, SelectPredict, Testing};
use selcon::runner::{run, run_adversarial_suite, Experiment, ExperimentConfig, Registry, RunSet};
use selcon::sci::StepSchedule;

/// Test power of the oracle testing policy at q⁰ for α = 0.1, computed
/// independently by numerical integration of the two-group mixture.
const ORACLE_TESTING_POWER: f64 = 0.19798602337291643;
const ORACLE_TESTING_Q0: f64 = 0.09577626858071575;

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
}

fn cfg(experiment: &str, kv: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig { experiment: experiment.into(), ier_stride: 0, ..Default::default() };
    for (k, v) in kv {
        c.set(k, v).unwrap();
    }
    c
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn range_clean(set: &RunSet) -> bool {
    set.runs.iter().all(|r| r.checks.range_violations.is_empty())
}

#[test]
fn criterion_01_adversarial_fcp_bound() {
    let registry = Registry::builtin();
    let base = cfg("adversarial", &[("reps", "100"), ("horizon", "1000")]);
    let (report1, elapsed) = timed(|| run_adversarial_suite(&registry, &base).unwrap());
    let steps: usize = report1.rows.iter().map(|r| r.steps).sum();
    let violations: usize = report1.rows.iter().map(|r| r.fcp_violations + r.range_violations).sum();
    let min_slack = report1.rows.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min);

    // a near-constant step sequence, checked against the general form of the bound
    let mut flat = base.clone();
    flat.set("beta", "0.01").unwrap();
    let mut flat_violations = 0usize;
    for name in registry.names() {
        let set = run(&ExperimentConfig { experiment: name.into(), adversary: selcon::runner::AdversaryMode::AlwaysErr, ..flat.clone() })
            .unwrap();
        let s = set.resolved.schedule;
        for r in &set.runs {
            let mut n = 0u64;
            for rec in &r.trace {
                if set.resolved.cfg.restart_after > 0 && r.restarts.contains(&rec.t) {
                    n = 0;
                }
                n += u64::from(rec.selected);
                let general = fcp_bound_general(n.max(1), |j| s.gamma(j).unwrap(), 1.0, set.resolved.cfg.alpha);
                if rec.fcp > general + 1e-12 {
                    flat_violations += 1;
                }
            }
        }
    }

    // the same bound with J(t) = 1 + selections before t, as logged in the trace
    let mut literal = 0usize;
    let mut literal_steps = 0usize;
    for name in registry.names() {
        let mut c = base.clone();
        c.experiment = name.into();
        c.adversary = selcon::runner::AdversaryMode::AlwaysErr;
        let set = run(&c).unwrap();
        let s = set.resolved.schedule;
        for r in &set.runs {
            for rec in &r.trace {
                literal_steps += 1;
                let g = s.gamma(rec.j).unwrap();
                if rec.fcp > c.alpha + (1.0 + s.gamma(1).unwrap()) / (rec.j as f64 * g) + 1e-12 {
                    literal += 1;
                }
            }
        }
    }

    let pass = report1.passed() && violations == 0 && flat_violations == 0 && elapsed < Duration::from_secs(10);
    report(
        1,
        pass,
        format!(
            "{} wirings x 100 seeds x 1000 steps = {steps} steps, {violations} violations, min slack {min_slack:.4}; \
             beta=0.01 general-form violations {flat_violations}; \
             with trace J(t): {literal}/{literal_steps} steps above; {:.2}s (limit 10s)",
            report1.rows.len(),
            elapsed.as_secs_f64()
        ),
    );
    print!("{}", report1.to_csv());
    assert!(pass);
}

#[test]
fn criterion_02_threshold_bounds() {
    // the driver asserts the range on every step of every run (debug builds) and
    // counts violations; sweep every wiring, mode and a spread of levels here
    let registry = Registry::builtin();
    let mut runs = 0usize;
    let mut clean = true;
    for name in registry.names() {
        for mode in ["adaptive", "fixed", "oracle"] {
            for (alpha, c) in [("0.05", "1"), ("0.3", "2.5"), ("0.8", "0.2")] {
                for adversary in ["off", "always-err"] {
                    let set = run(&cfg(
                        name,
                        &[("mode", mode), ("alpha", alpha), ("c", c), ("adversary", adversary), ("horizon", "400"), ("reps", "2")],
                    ))
                    .unwrap();
                    runs += set.runs.len();
                    clean &= range_clean(&set);
                    let g1 = set.resolved.schedule.gamma(1).unwrap();
                    let a = set.resolved.cfg.alpha;
                    let (lo, hi) = (-a * g1, 1.0 + (1.0 - a) * g1);
                    clean &= set.runs.iter().flat_map(|r| &r.trace).all(|rec| lo <= rec.q && rec.q <= hi);
                }
            }
        }
    }
    report(2, clean, format!("{runs} runs across all wirings/modes/levels, q within [-a*g1, B+(1-a)*g1] at every step, no tolerance"));
    assert!(clean);
}

#[test]
fn criterion_03_regression_oracle_convergence() {
    let c = cfg("regress", &[("mode", "oracle"), ("alpha", "0.1"), ("beta", "0.75"), ("c", "1"), ("horizon", "20000"), ("reps", "50")]);
    let (set, elapsed) = timed(|| run(&c).unwrap());
    let hits = set.runs.iter().filter(|r| (r.summary.final_q - 0.9).abs() <= 0.05).count();
    let pass = hits >= 45 && elapsed < Duration::from_secs(30) && range_clean(&set);
    report(3, pass, format!("|q_T - 0.9| <= 0.05 in {hits}/50 seeds (need 45); {:.2}s (limit 30s)", elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_04_testing_experiment() {
    let start = Instant::now();
    // reference power of the oracle policy at q⁰, by Monte Carlo
    let oracle_cfg = cfg("testing", &[("mode", "oracle")]).resolve(&Testing.defaults()).unwrap();
    let oracle_policy = Testing.build(&oracle_cfg, &[]).unwrap();
    let q0 = Testing.target_q0(&oracle_cfg).unwrap();
    let spec = StreamSpec::TestingMixture(GaussianMixture::testing());
    let reference = estimate_power(&spec, oracle_policy.as_ref(), q0, 400_000, 11).unwrap();

    let common = [("horizon", "3000"), ("reps", "50"), ("ier-stride", "3000"), ("mc-n", "100000")];
    let with = |mode: &'static str| {
        let mut kv = common.to_vec();
        kv.push(("mode", mode));
        run(&cfg("testing", &kv)).unwrap()
    };
    let oracle = with("oracle");
    let adaptive = with("adaptive");
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let fdp = mean(oracle.runs.iter().map(|r| r.summary.final_fcp).collect());
    let power_at_t = |set: &RunSet| mean(set.runs.iter().map(|r| r.trace.last().unwrap().power.unwrap()).collect());
    let adaptive_power = power_at_t(&adaptive);
    let oracle_power = power_at_t(&oracle);
    let elapsed = start.elapsed();

    let q0_ok = (q0 - ORACLE_TESTING_Q0).abs() < 5e-3;
    let ref_ok = (reference.value - ORACLE_TESTING_POWER).abs() <= 3.0 * reference.se;
    let pass = (0.05..=0.12).contains(&fdp)
        && (adaptive_power - reference.value).abs() <= 0.05
        && q0_ok
        && ref_ok
        && elapsed < Duration::from_secs(120);
    report(
        4,
        pass,
        format!(
            "oracle mean final FDP {fdp:.4} (need [0.05, 0.12]); power at T: adaptive {adaptive_power:.4}, \
             oracle {oracle_power:.4}, reference {:.4} +- {:.4} (independent value {ORACLE_TESTING_POWER:.4}), \
             q0 {q0:.5}; {:.1}s (limit 120s)",
            reference.value,
            reference.se,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_naive_selection_failure() {
    let c = cfg("classify", &[("alpha", "0.1"), ("horizon", "2000"), ("reps", "50"), ("baseline", "true")]);
    let (set, elapsed) = timed(|| run(&c).unwrap());
    let n = set.runs.len() as f64;
    let naive = set.runs.iter().map(|r| r.baseline.as_ref().unwrap().last().unwrap().fcp).sum::<f64>() / n;
    let sci_ok = set.runs.iter().all(|r| {
        let last = r.trace.last().unwrap();
        last.fcp <= last.bound
    });
    let sci = set.runs.iter().map(|r| r.summary.final_fcp).sum::<f64>() / n;

    // same comparison with the true posteriors, for context only
    let mut oc = c.clone();
    oc.set("mode", "oracle").unwrap();
    let oset = run(&oc).unwrap();
    let naive_oracle = oset.runs.iter().map(|r| r.baseline.as_ref().unwrap().last().unwrap().fcp).sum::<f64>() / n;

    let pass = naive > 0.15 && sci_ok && elapsed < Duration::from_secs(60);
    report(
        5,
        pass,
        format!(
            "naive ACI mean FCP {naive:.4} (need > 0.15); OnlineSCI mean FCP {sci:.4}, within bound on all streams: {sci_ok}; \
             with true posteriors naive ACI gives {naive_oracle:.4}; {:.2}s (limit 60s)",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_q0_solver() {
    let mut ok = true;
    let mut detail = String::new();
    for a in [0.05, 0.1, 0.2, 0.5] {
        let q = solve_q0(a, &BenchmarkFn::RegressionNormal, DEFAULT_SOLVER_TOL).unwrap();
        ok &= (q - (1.0 - a)).abs() <= 1e-6;
        detail += &format!("reg a={a}: {q:.7}; ");
    }
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bench = BenchmarkFn::informative((0..n).map(|_| rng.random::<f64>()).collect(), Some(1.0)).unwrap();
    for a in [0.05, 0.1, 0.2, 0.4] {
        let q = solve_q0(a, &bench, DEFAULT_SOLVER_TOL).unwrap();
        let target = 1.0 - 2.0 * a;
        // q⁰ = 1 − 2Π⁰; the conditional mean over n(1−q) uniforms has sd (1−q)/√12
        let se = 2.0 * (1.0 - target) / 12f64.sqrt() / (n as f64 * (1.0 - target)).sqrt();
        ok &= (q - target).abs() <= 3.0 * se;
        detail += &format!("unif a={a}: {q:.5} vs {target:.2} (3se {:.5}); ", 3.0 * se);
    }
    report(6, ok, detail);
    assert!(ok);
}

#[test]
fn criterion_07_reduction_equivalence() {
    let registry = Registry::builtin();
    let mut ok = true;
    let mut detail = String::new();
    for (name, mode) in [("regress", "adaptive"), ("regress", "oracle"), ("ar", "adaptive")] {
        let c = cfg(name, &[("mode", mode), ("horizon", "10000"), ("baseline", "true")]);
        let set = run_with_registry(&registry, &c);
        let run = &set.runs[0];
        let base = run.baseline.as_ref().unwrap();
        let same = run.trace.iter().zip(base).all(|(a, b)| a.q.to_bits() == b.q.to_bits())
            && run.trace.len() == 10_000
            && base.len() == 10_000;
        ok &= same;
        detail += &format!("{name}/{mode}: bitwise equal {same}; ");
    }
    report(7, ok, detail);
    assert!(ok);
}

fn run_with_registry(registry: &Registry, c: &ExperimentConfig) -> RunSet {
    selcon::runner::run_with(registry, c).unwrap()
}

#[test]
fn criterion_08_restart() {
    let restart_after = 200u64;
    let mut ok = true;
    let mut detail = String::new();
    for name in ["testing", "classify", "select_predict", "predict_lb"] {
        // with γ₁(1 − α) = 0.27 and q1' = 0.5 one ordinary error after the restart cannot re-freeze
        let c = cfg(name, &[("mode", "oracle"), ("c", "0.3"), ("restart-q1", "0.5"), ("horizon", "3000"), ("adversary", "until-restart"), ("reps", "20")]);
        let set = run(&c).unwrap();
        for r in &set.runs {
            let first_frozen = r.trace.iter().find(|rec| rec.q >= 1.0).map(|rec| rec.t);
            let one = r.restarts.len() == 1;
            let timely = match (first_frozen, r.restarts.first()) {
                (Some(f), Some(&t)) => t - f == restart_after,
                _ => false,
            };
            let post = r.restarts.first().map_or(false, |&t| {
                r.trace[(t - 1) as usize..].iter().all(|rec| rec.fcp <= rec.bound + 1e-12)
                    && r.trace[(t - 1) as usize].j == 1
            });
            ok &= one && timely && post && r.checks.clean();
            if !(one && timely && post && r.checks.clean()) {
                println!("  {name} rep {}: one {one} timely {timely} post {post} clean {} restarts {:?} frozen {first_frozen:?}", r.rep, r.checks.clean(), r.restarts);
            }
        }
        let total: usize = set.runs.iter().map(|r| r.restarts.len()).sum();
        let mut natural = c.clone();
        natural.set("c", "1").unwrap();
        let refreeze: usize = run(&natural).unwrap().runs.iter().map(|r| r.restarts.len().saturating_sub(1)).sum();
        detail += &format!("{name}: {total} restarts over 20 runs (with c=1: {refreeze} later natural re-freezes); ");
    }
    report(8, ok, format!("one restart exactly R=200 steps after freezing, clean segment after: {detail}"));
    assert!(ok);
}

#[test]
fn criterion_09_ar_convergence() {
    let start = Instant::now();
    let c = cfg("ar", &[("ar-phi", "0.5"), ("alpha", "0.1"), ("horizon", "20000"), ("reps", "50")]);
    let set = run(&c).unwrap();
    let hits = set.runs.iter().filter(|r| (r.summary.final_q - 0.9).abs() <= 0.07).count();

    let mut stream = Stream::new(StreamSpec::ar(vec![0.5]), 9).unwrap();
    let history: Vec<f64> = stream.by_ref().take(100_000).map(|s| s.y).collect();
    let phi = ar_fit(&history, 1, 1e-6).unwrap()[0];
    let elapsed = start.elapsed();

    let pass = hits >= 40 && (phi - 0.5).abs() <= 0.02 && elapsed < Duration::from_secs(60) && range_clean(&set);
    report(
        9,
        pass,
        format!("|q_T - 0.9| <= 0.07 in {hits}/50 seeds (need 40); phi_hat {phi:.4} on 1e5 points; {:.2}s (limit 60s)", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn criterion_10_monotonicity() {
    let mut ok = true;
    let mut detail = String::new();

    // Π estimates of the oracle testing policy, nonincreasing in q up to 3 SE
    let oc = cfg("testing", &[("mode", "oracle")]).resolve(&Testing.defaults()).unwrap();
    let policy = Testing.build(&oc, &[]).unwrap();
    let spec = StreamSpec::TestingMixture(GaussianMixture::testing());
    let grid: Vec<f64> = (0..10).map(|i| 0.05 + 0.09 * i as f64).collect();
    let est: Vec<_> = grid.iter().enumerate().map(|(i, &q)| estimate_ier(&spec, policy.as_ref(), q, 100_000, 100 + i as u64).unwrap()).collect();
    let pi_ok = est.windows(2).all(|w| w[1].value <= w[0].value + 3.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt());
    ok &= pi_ok;
    detail += &format!("testing Pi nonincreasing {pi_ok}; ");

    // regression benchmark via the informative solver path agrees in direction too
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let bench = BenchmarkFn::informative((0..50_000).map(|_| rng.random::<f64>().powi(2)).collect(), None).unwrap();
    let bench_ok = (0..100).map(|i| bench.eval(i as f64 / 100.0)).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0] + 1e-12);
    ok &= bench_ok;
    detail += &format!("informative benchmark nonincreasing {bench_ok}; ");

    // informative selection monotone in q for every informative wiring
    let qs: Vec<f64> = (-2..=22).map(|i| i as f64 * 0.05).collect();
    let mut sel_ok = true;
    let wirings: Vec<(Box<dyn Policy>, StreamSpec)> = vec![
        (policy, spec.clone()),
        (
            Classify.build(&cfg("classify", &[("mode", "oracle")]).resolve(&Classify.defaults()).unwrap(), &[]).unwrap(),
            StreamSpec::ClassifMixture(GaussianMixture::classification()),
        ),
        (
            SelectPredict.build(&cfg("select_predict", &[("mode", "oracle")]).resolve(&SelectPredict.defaults()).unwrap(), &[]).unwrap(),
            StreamSpec::RegressionIid(RegressionModel::default()),
        ),
        (
            PredictLb.build(&cfg("predict_lb", &[("mode", "oracle")]).resolve(&PredictLb.defaults()).unwrap(), &[]).unwrap(),
            StreamSpec::RegressionIid(RegressionModel::default()),
        ),
    ];
    for (w, spec) in &wirings {
        for s in Stream::new(spec.clone(), 4).unwrap().take(2000) {
            let sel: Vec<bool> = qs.iter().map(|&q| w.decide(&s.x, q).selected).collect();
            // once deselected, never selected again at a larger q
            sel_ok &= sel.windows(2).all(|p| p[0] || !p[1]);
        }
    }
    ok &= sel_ok;
    detail += &format!("informative selection monotone {sel_ok}; ");

    // interval length nondecreasing in q, score/interval round trip
    let mut len_ok = true;
    let mut trip_ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..2000 {
        let mu = rng.random_range(-5.0..5.0);
        let sigma = rng.random_range(0.05..3.0);
        let bound = rng.random_range(0.5..3.0);
        let mut prev = 0.0;
        for i in 0..=40 {
            let q = bound * i as f64 / 40.0;
            let len = regression_interval(mu, sigma, q, bound).unwrap().size();
            len_ok &= len >= prev;
            prev = len;
        }
        let q = rng.random_range(0.01..0.99) * bound;
        if let PredictionSet::Interval { lo, hi } = regression_interval(mu, sigma, q, bound).unwrap() {
            trip_ok &= (adaptive_residual_score(mu, sigma, lo, bound) - q).abs() <= 1e-9;
            trip_ok &= (adaptive_residual_score(mu, sigma, hi, bound) - q).abs() <= 1e-9;
        } else {
            trip_ok = false;
        }
    }
    ok &= len_ok && trip_ok;
    detail += &format!("interval length nondecreasing {len_ok}; score/interval round trip {trip_ok}");

    report(10, ok, detail);
    assert!(ok);
}

#[test]
fn step_schedule_reference() {
    // γ_j = c j^(−β) with the shipped default β
    let s = StepSchedule::new(1.0, StepSchedule::DEFAULT_BETA).unwrap();
    assert_eq!(s.gamma(16).unwrap(), 0.125);
}
