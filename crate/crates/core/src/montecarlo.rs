//! Replication engine for the spectral cut-off test.
//!
//! Replication `r` of a plan always consumes the noise streams keyed by
//! `(master_seed, r)`. Estimates are integer counts over replications, so
//! they are bit-identical for any worker count, and two estimates on the same
//! plan share their noise draws (common random numbers).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gsm::{
    make_spike_alternative, simulate_until, NoiseLevels, Signal, StreamKey, StreamTag,
};
use crate::sequences::RegimeSpec;
use crate::stats::{binomial_se, ols_slope};
use crate::testproc::{
    bandwidth_m0_m1, h_seq, run_test_with, BandwidthBracket, TestConfig, ThresholdRule,
};

/// Fewer replications than this give meaningless standard errors.
pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub spec: RegimeSpec,
    pub noise: NoiseLevels,
    pub config: TestConfig,
    pub theta0: Signal,
    pub n_reps: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub threshold_rule: ThresholdRule,
}

impl ExperimentPlan {
    pub fn new(
        spec: RegimeSpec,
        noise: NoiseLevels,
        config: TestConfig,
        theta0: Signal,
        n_reps: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            spec,
            noise,
            config,
            theta0,
            n_reps,
            master_seed,
            workers: None,
            threshold_rule: ThresholdRule::Standard,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_threshold_rule(mut self, rule: ThresholdRule) -> Self {
        self.threshold_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.noise.validate()?;
        self.config.validate()?;
        if self.n_reps < MIN_REPS {
            return Err(invalid(
                "reps",
                format!("need at least {MIN_REPS} replications, got {}", self.n_reps),
            ));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.theta0.len() > self.config.j_max {
            return Err(invalid("theta0", "longer than J_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub p_hat: f64,
    /// `√(p̂(1−p̂)/N)`
    pub se: f64,
    pub n_reps: usize,
    /// Replications counted towards `p_hat`.
    pub count: usize,
    pub n_degenerate: usize,
}

impl ErrorEstimate {
    pub fn from_counts(count: usize, n_reps: usize, n_degenerate: usize) -> Self {
        let p_hat = count as f64 / n_reps as f64;
        Self {
            p_hat,
            se: binomial_se(p_hat, n_reps),
            n_reps,
            count,
            n_degenerate,
        }
    }

    /// `p̂ <= bound + 3 se`.
    pub fn within(&self, bound: f64) -> bool {
        self.p_hat <= bound + 3.0 * self.se
    }
}

/// Per-replication outcome of one test run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub reject: bool,
    pub degenerate: bool,
    pub m_hat: usize,
    pub m_truncated: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    rejected: usize,
    degenerate: usize,
}

impl Tally {
    fn merge(self, other: Tally) -> Tally {
        Tally {
            rejected: self.rejected + other.rejected,
            degenerate: self.degenerate + other.degenerate,
        }
    }
}

/// Runs `f` inside a pool of the requested size.
fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// `σ h_j` for `j <= J_max`, the trigger level of the random bandwidth.
fn trigger_levels(plan: &ExperimentPlan) -> Vec<f64> {
    (1..=plan.config.j_max)
        .map(|j| plan.noise.sigma * h_seq(j, plan.config.alpha, plan.config.kappa))
        .collect()
}

/// One replication of the test on data generated from `theta`.
///
/// Only the prefix up to the bandwidth trigger is simulated; the test is run
/// with the horizon set to that prefix, which yields the same decision as the
/// full-horizon run because nothing beyond `M + 1` enters it.
pub fn run_replication(plan: &ExperimentPlan, theta: &Signal, replication: u64) -> Result<Outcome> {
    let levels = trigger_levels(plan);
    replicate(plan, theta, replication, &levels)
}

fn replicate(
    plan: &ExperimentPlan,
    theta: &Signal,
    replication: u64,
    levels: &[f64],
) -> Result<Outcome> {
    let key = StreamKey::new(plan.master_seed, replication);
    let j_max = plan.config.j_max;
    let obs = simulate_until(theta, &plan.spec, plan.noise, key, j_max, |j, xj| {
        xj.abs() <= levels[j - 1]
    })?;
    let config = TestConfig {
        j_max: obs.len(),
        ..plan.config
    };
    let report = run_test_with(
        &obs,
        &plan.theta0,
        &plan.spec,
        plan.noise,
        &config,
        plan.threshold_rule,
    )?;
    // A prefix that ran to J_max without a trigger is the only truncated case.
    let m_truncated = report.m_truncated && obs.len() == j_max;
    Ok(Outcome {
        reject: report.reject,
        degenerate: report.degenerate,
        m_hat: report.m_hat,
        m_truncated,
    })
}

fn tally(plan: &ExperimentPlan, theta: &Signal) -> Result<Tally> {
    plan.validate()?;
    if theta.len() > plan.config.j_max {
        return Err(invalid("theta", "longer than J_max"));
    }
    let levels = trigger_levels(plan);
    in_pool(plan.workers, || {
        (0..plan.n_reps as u64)
            .into_par_iter()
            .map(|r| {
                replicate(plan, theta, r, &levels).map(|o| Tally {
                    rejected: o.reject as usize,
                    degenerate: o.degenerate as usize,
                })
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
    })?
}

/// First-kind error: fraction of rejections when data come from `θ₀`.
pub fn estimate_alpha(plan: &ExperimentPlan) -> Result<ErrorEstimate> {
    let t = tally(plan, &plan.theta0)?;
    Ok(ErrorEstimate::from_counts(
        t.rejected,
        plan.n_reps,
        t.degenerate,
    ))
}

/// Second-kind error at one alternative: fraction of non-rejections
/// (degenerate runs count as non-rejections).
pub fn estimate_beta(plan: &ExperimentPlan, theta: &Signal) -> Result<ErrorEstimate> {
    let diff = theta.difference(&plan.theta0);
    if !plan.spec.in_ellipsoid(diff.as_slice()) {
        return Err(invalid(
            "theta",
            "theta - theta0 lies outside the ellipsoid",
        ));
    }
    let t = tally(plan, theta)?;
    Ok(ErrorEstimate::from_counts(
        plan.n_reps - t.rejected,
        plan.n_reps,
        t.degenerate,
    ))
}

/// `β̂` at the spike alternative of radius `r`.
pub fn beta_at_radius(plan: &ExperimentPlan, r: f64) -> Result<ErrorEstimate> {
    let theta = make_spike_alternative(&plan.spec, &plan.theta0, r, plan.config.j_max)?;
    estimate_beta(plan, &theta)
}

/// `β̂` over a grid of spike radii, all on the same noise draws.
pub fn power_curve(plan: &ExperimentPlan, radii: &[f64]) -> Result<Vec<(f64, ErrorEstimate)>> {
    radii
        .iter()
        .map(|&r| Ok((r, beta_at_radius(plan, r)?)))
        .collect()
}

/// Stopping rule for the radius bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Stop once `hi − lo <= tol`.
    Absolute(f64),
    /// Stop once `hi − lo <= tol · lo`.
    Relative(f64),
}

impl Tolerance {
    fn reached(&self, lo: f64, hi: f64) -> bool {
        match *self {
            Tolerance::Absolute(tol) => hi - lo <= tol,
            Tolerance::Relative(tol) => hi - lo <= tol * lo,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            Tolerance::Absolute(v) | Tolerance::Relative(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(invalid("tol", format!("must be positive, got {v}")))
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(0.05)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationEstimate {
    /// Midpoint of the final bracket.
    pub radius: f64,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

/// Smallest spike radius whose `β̂` is at most `beta_target`, by bisection
/// over `[r_lo, r_hi]`. Every evaluation reuses the plan's seeds.
pub fn empirical_separation_radius(
    plan: &ExperimentPlan,
    beta_target: f64,
    r_lo: f64,
    r_hi: f64,
    tol: Tolerance,
) -> Result<SeparationEstimate> {
    tol.validate()?;
    if !(beta_target > 0.0 && beta_target < 1.0) {
        return Err(invalid(
            "beta",
            format!("target must lie in (0, 1), got {beta_target}"),
        ));
    }
    if !(r_lo > 0.0 && r_lo <= r_hi && r_hi.is_finite()) {
        return Err(invalid(
            "r_lo/r_hi",
            format!("need 0 < r_lo <= r_hi, got [{r_lo}, {r_hi}]"),
        ));
    }
    let (mut lo, mut hi) = (r_lo, r_hi);
    if tol.reached(lo, hi) {
        return Ok(SeparationEstimate {
            radius: 0.5 * (lo + hi),
            lo,
            hi,
            steps: 0,
        });
    }
    let beta_lo = beta_at_radius(plan, lo)?.p_hat;
    let beta_hi = beta_at_radius(plan, hi)?.p_hat;
    if !(beta_lo > beta_target && beta_hi <= beta_target) {
        return Err(Error::Bracketing {
            r_lo: lo,
            r_hi: hi,
            beta_lo,
            beta_hi,
            target: beta_target,
        });
    }
    let mut steps = 0;
    while !tol.reached(lo, hi) {
        let mid = 0.5 * (lo + hi);
        if beta_at_radius(plan, mid)?.p_hat <= beta_target {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok(SeparationEstimate {
        radius: 0.5 * (lo + hi),
        lo,
        hi,
        steps,
    })
}

/// OLS slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateGrid(
            "log-log fit needs positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols_slope(&lx, &ly)
        .ok_or_else(|| Error::DegenerateGrid("need at least two distinct x values".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub epsilon: f64,
    pub radius: f64,
    pub radius_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub points: Vec<RatePoint>,
}

/// Search window for [`fit_rate_slope`]: the bisection runs on `[r_lo, r_hi]`
/// for every grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSearch {
    pub r_lo: f64,
    pub r_hi: f64,
    pub tol: Tolerance,
}

fn check_geometric(grid: &[f64]) -> Result<()> {
    if grid.len() < 4 {
        return Err(Error::DegenerateGrid(format!(
            "need at least 4 grid points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::DegenerateGrid("grid values must be positive".into()));
    }
    let ratio = grid[1] / grid[0];
    if ratio == 1.0
        || grid
            .windows(2)
            .any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9)
    {
        return Err(Error::DegenerateGrid(
            "grid must be geometrically spaced".into(),
        ));
    }
    Ok(())
}

/// Empirical separation radius over an `ε` grid at fixed `σ`, and the slope
/// of `ln r̂²` against `ln ε`.
pub fn fit_rate_slope(
    template: &ExperimentPlan,
    sigma: f64,
    epsilon_grid: &[f64],
    beta_target: f64,
    search: RadiusSearch,
) -> Result<RateFit> {
    check_geometric(epsilon_grid)?;
    let mut points = Vec::with_capacity(epsilon_grid.len());
    for &epsilon in epsilon_grid {
        let plan = ExperimentPlan {
            noise: NoiseLevels::new(epsilon, sigma)?,
            ..template.clone()
        };
        let est =
            empirical_separation_radius(&plan, beta_target, search.r_lo, search.r_hi, search.tol)?;
        points.push(RatePoint {
            epsilon,
            radius: est.radius,
            radius_sq: est.radius * est.radius,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.radius_sq).collect();
    Ok(RateFit {
        slope: log_log_slope(&xs, &ys)?,
        points,
    })
}

/// Bandwidth containment `M ∈ [M₀, M₁)`: empirical probability of the
/// complement and its theoretical ceiling `α/10 + απ²/(6κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub estimate: ErrorEstimate,
    pub bound: f64,
    pub bandwidths: BandwidthBracket,
    pub pass: bool,
}

pub fn lemma1_bound(alpha: f64, kappa: f64) -> f64 {
    alpha / 10.0 + alpha * std::f64::consts::PI.powi(2) / (6.0 * kappa)
}

pub fn check_lemma1(plan: &ExperimentPlan) -> Result<Lemma1Check> {
    plan.validate()?;
    let cfg = &plan.config;
    let br = bandwidth_m0_m1(
        &plan.spec,
        plan.noise.sigma,
        cfg.alpha,
        cfg.kappa,
        cfg.j_max,
    );
    let levels = trigger_levels(plan);
    let misses = in_pool(plan.workers, || {
        (0..plan.n_reps as u64)
            .into_par_iter()
            .map(|r| {
                let key = StreamKey::new(plan.master_seed, r);
                let obs = simulate_until(
                    &plan.theta0,
                    &plan.spec,
                    plan.noise,
                    key,
                    cfg.j_max,
                    |j, xj| xj.abs() <= levels[j - 1],
                )?;
                let last = obs.x.len();
                let triggered = obs.x[last - 1].abs() <= levels[last - 1];
                let (m, m_truncated) = if triggered {
                    (last - 1, false)
                } else {
                    (last, true)
                };
                // A truncated value is only known to be at least the horizon.
                let below = !m_truncated && m < br.m0.value;
                let above = !br.m1.truncated && m >= br.m1.value;
                Ok((below || above) as usize)
            })
            .try_reduce(|| 0usize, |a, b| Ok(a + b))
    })??;
    let estimate = ErrorEstimate::from_counts(misses, plan.n_reps, 0);
    let bound = lemma1_bound(cfg.alpha, cfg.kappa);
    Ok(Lemma1Check {
        estimate,
        bound,
        bandwidths: br,
        pass: estimate.within(bound),
    })
}

/// Tail check for `T = Σ_{j<=d} (ν_j + v_j ω_j)²`:
/// `P(T − ET > 2√(Σx) + 2x max v²) <= e^{-x}` and `P(T − ET < −2√(Σx)) <= e^{-x}`
/// with `Σ = Σ v⁴ + 2 Σ v²ν²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Check {
    pub right: ErrorEstimate,
    pub left: ErrorEstimate,
    pub bound: f64,
    pub pass: bool,
}

pub fn check_lemma4(
    nu: &[f64],
    v: &[f64],
    x: f64,
    n_reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Lemma4Check> {
    let d = nu.len();
    if d == 0 || v.len() != d {
        return Err(invalid(
            "d",
            "nu and v must be non-empty and of equal length",
        ));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid("x", format!("must be positive, got {x}")));
    }
    if n_reps < MIN_REPS {
        return Err(invalid(
            "reps",
            format!("need at least {MIN_REPS} replications, got {n_reps}"),
        ));
    }
    let mean: f64 = nu.iter().zip(v).map(|(n, s)| n * n + s * s).sum();
    let sigma: f64 = nu
        .iter()
        .zip(v)
        .map(|(n, s)| s.powi(4) + 2.0 * s * s * n * n)
        .sum();
    let max_v2 = v.iter().map(|s| s * s).fold(0.0, f64::max);
    let right_cut = 2.0 * (sigma * x).sqrt() + 2.0 * x * max_v2;
    let left_cut = -2.0 * (sigma * x).sqrt();

    let (right, left) = in_pool(workers, || {
        (0..n_reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut omega = StreamKey::new(seed, r).stream(StreamTag::Signal);
                let t: f64 = nu
                    .iter()
                    .zip(v)
                    .map(|(n, s)| {
                        let z = n + s * omega.next_gaussian();
                        z * z
                    })
                    .sum();
                let dev = t - mean;
                ((dev > right_cut) as usize, (dev < left_cut) as usize)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    })?;
    let bound = (-x).exp();
    let right = ErrorEstimate::from_counts(right, n_reps, 0);
    let left = ErrorEstimate::from_counts(left, n_reps, 0);
    Ok(Lemma4Check {
        right,
        left,
        bound,
        pass: right.within(bound) && left.within(bound),
    })
}
