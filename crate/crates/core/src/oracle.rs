//! Benchmark functions and Monte-Carlo functionals against a known model.
//!
//! The benchmark `Π⁰(q)` is the limiting error rate among selected examples
//! at threshold `q`; its `α`-crossing `q⁰_α` is where the recursion is
//! expected to settle. Two families are provided:
//!
//! * regression with standard normal noise: `Π⁰(q) = 2Φ̄(Φ̄⁻¹((1 − q)/2))`,
//!   which collapses to `1 − q`;
//! * informative selection `1{W(X) > q}`: `Π⁰(q) = 1 − E[W | W > q]`, with
//!   `Π⁰(q) = 1 − B*` when nothing exceeds `q`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{GaussianMixture, StreamSpec};
use crate::error::{contract, Error, Result};
use crate::normal;
use crate::policy::Policy;

/// Smallest Monte-Carlo size accepted by the estimators below.
pub const MIN_MC_N: usize = 1_000;
pub const DEFAULT_MC_N: usize = 100_000;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-6;

/// `Π⁰(q)` for the rescaled-residual interval under standard normal noise, `B = 1`.
pub fn pi0_regression(q: f64) -> f64 {
    let q = q.clamp(0.0, 1.0);
    // Φ̄⁻¹(p) = Φ⁻¹(1 − p)
    let z = normal::quantile(1.0 - (1.0 - q) / 2.0);
    2.0 * normal::sf(z)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkFn {
    RegressionNormal,
    /// Empirical law of the limiting statistic `W(X)`.
    Informative {
        /// Sorted ascending.
        w: Vec<f64>,
        /// `suffix[i] = Σ_{k ≥ i} w[k]`.
        suffix: Vec<f64>,
        b_star: f64,
    },
}

impl BenchmarkFn {
    /// Benchmark from draws of `W(X)`. `b_star` defaults to the sample maximum.
    pub fn informative(mut w: Vec<f64>, b_star: Option<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|v| !v.is_finite()) {
            return Err(contract("W sample must be nonempty and finite"));
        }
        w.sort_by(f64::total_cmp);
        let mut suffix = vec![0.0; w.len() + 1];
        for i in (0..w.len()).rev() {
            suffix[i] = suffix[i + 1] + w[i];
        }
        suffix.pop();
        let b_star = b_star.unwrap_or(*w.last().unwrap());
        Ok(BenchmarkFn::Informative { w, suffix, b_star })
    }

    /// Draw `mc_n` values of `W(X)` from `sampler`.
    pub fn informative_from_sampler(
        mut sampler: impl FnMut() -> f64,
        mc_n: usize,
        b_star: Option<f64>,
    ) -> Result<Self> {
        if mc_n < MIN_MC_N {
            return Err(contract(format!("mc_n must be >= {MIN_MC_N}, got {mc_n}")));
        }
        Self::informative((0..mc_n).map(|_| sampler()).collect(), b_star)
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            BenchmarkFn::RegressionNormal => pi0_regression(q),
            BenchmarkFn::Informative { w, suffix, b_star } => {
                let idx = w.partition_point(|v| *v <= q);
                if idx == w.len() {
                    1.0 - b_star
                } else {
                    1.0 - suffix[idx] / (w.len() - idx) as f64
                }
            }
        }
    }

    /// Lower end `κ` of the statistic's support.
    pub fn kappa(&self) -> f64 {
        match self {
            BenchmarkFn::RegressionNormal => 0.0,
            BenchmarkFn::Informative { w, .. } => w[0],
        }
    }

    /// Interval of levels the benchmark can cross.
    pub fn admissible_levels(&self) -> (f64, f64) {
        match self {
            BenchmarkFn::RegressionNormal => (0.0, 1.0),
            BenchmarkFn::Informative { w, suffix, b_star } => (1.0 - b_star, 1.0 - suffix[0] / w.len() as f64),
        }
    }
}

/// Monte-Carlo `Π⁰(q) = 1 − E[W | W > q]` from `mc_n` fresh draws.
pub fn pi0_informative(q: f64, sampler: impl FnMut() -> f64, mc_n: usize, b_star: f64) -> Result<f64> {
    Ok(BenchmarkFn::informative_from_sampler(sampler, mc_n, Some(b_star))?.eval(q))
}

/// `q⁰_α` by bisection on the nonincreasing map `q ↦ Π⁰(q)`.
///
/// Stops once `|Π⁰(q) − α| ≤ tol`; an empirical benchmark is a step
/// function, so bisection also stops when the bracket collapses onto the
/// jump that straddles `α`.
pub fn solve_q0(alpha: f64, benchmark: &BenchmarkFn, tol: f64) -> Result<f64> {
    let (lo_level, hi_level) = benchmark.admissible_levels();
    if !(alpha > lo_level && alpha < hi_level) {
        return Err(Error::LevelUnattainable { alpha, lo: lo_level, hi: hi_level });
    }
    let (mut lo, mut hi) = match benchmark {
        BenchmarkFn::RegressionNormal => (0.0, 1.0),
        // E[W | W > q] > q, so Π⁰(1 − α) < α.
        BenchmarkFn::Informative { .. } => (benchmark.kappa(), 1.0 - alpha),
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gap = benchmark.eval(mid) - alpha;
        if gap.abs() <= tol || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            return Ok(mid);
        }
        if gap > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `P(Y = 0 | X = x)` under the known mixture.
pub fn true_lfdr(mixture: &GaussianMixture, x: &[f64]) -> f64 {
    1.0 - mixture.posterior1(x)
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
    /// Number of draws entering the mean.
    pub n: usize,
}

impl McEstimate {
    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        if n == 0 {
            return Self { value: 0.0, se: 0.0, n };
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Self { value: mean, se: (var / nf).sqrt(), n }
    }
}

/// IER and instantaneous power of a frozen policy at `q`, from one batch of draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotEstimate {
    /// `E[err | S = 1]`, or 0 when nothing is selected.
    pub ier: McEstimate,
    /// `E[S · (1 − err)]`; for testing this is `E[Y·S]`.
    pub power: McEstimate,
}

pub fn estimate_snapshot(
    spec: &StreamSpec,
    policy: &dyn Policy,
    q: f64,
    mc_n: usize,
    seed: u64,
) -> Result<SnapshotEstimate> {
    if mc_n < MIN_MC_N {
        return Err(contract(format!("mc_n must be >= {MIN_MC_N}, got {mc_n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut es, mut es2, mut n_sel) = (0.0, 0.0, 0usize);
    let (mut ps, mut ps2) = (0.0, 0.0);
    for _ in 0..mc_n {
        let s = spec
            .draw_iid(&mut rng)
            .ok_or_else(|| contract("Monte-Carlo functionals need an iid stream"))?;
        let d = policy.decide(&s.x, q);
        if d.selected {
            let e = policy.error(s.y, &d.set);
            es += e;
            es2 += e * e;
            n_sel += 1;
            let p = 1.0 - e;
            ps += p;
            ps2 += p * p;
        }
    }
    Ok(SnapshotEstimate {
        ier: McEstimate::from_sums(es, es2, n_sel),
        power: McEstimate::from_sums(ps, ps2, mc_n),
    })
}

/// Monte-Carlo `Π_{C,S}(q) = E[err(Y, C(X,q)) | S(X,q) = 1]` for a frozen policy.
pub fn estimate_ier(spec: &StreamSpec, policy: &dyn Policy, q: f64, mc_n: usize, seed: u64) -> Result<McEstimate> {
    Ok(estimate_snapshot(spec, policy, q, mc_n, seed)?.ier)
}

/// Monte-Carlo instantaneous power `E[S(X,q)·(1 − err)]`.
pub fn estimate_power(spec: &StreamSpec, policy: &dyn Policy, q: f64, mc_n: usize, seed: u64) -> Result<McEstimate> {
    Ok(estimate_snapshot(spec, policy, q, mc_n, seed)?.power)
}

/// `D_t = |Π̂_{C,S}(q) − Π⁰(q)|·1{q ∈ [0,B]}`, both sides estimated on the
/// same draws, `Π⁰` through the oracle policy.
pub fn diagnostic_dt(
    spec: &StreamSpec,
    policy: &dyn Policy,
    oracle: &dyn Policy,
    q: f64,
    mc_n: usize,
    seed: u64,
) -> Result<f64> {
    if !(0.0..=policy.bound()).contains(&q) {
        return Ok(0.0);
    }
    let a = estimate_ier(spec, policy, q, mc_n, seed)?;
    let b = estimate_ier(spec, oracle, q, mc_n, seed)?;
    Ok((a.value - b.value).abs())
}
