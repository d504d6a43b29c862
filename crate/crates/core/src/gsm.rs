//! Gaussian sequence model with noisy singular values:
//!
//! ```text
//! Y_j = b_j θ_j + ε ξ_j
//! X_j = b_j     + σ η_j
//! ```
//!
//! Noise is drawn from counter-based ChaCha streams keyed by
//! `(seed, replication, stream tag)`; the `j`-th draw of a stream is a pure
//! function of that key, so a prefix of length `n` is identical to the first
//! `n` entries of any longer simulation and results never depend on thread
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sequences::RegimeSpec;
use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels {
    pub epsilon: f64,
    pub sigma: f64,
}

impl NoiseLevels {
    pub fn new(epsilon: f64, sigma: f64) -> Result<Self> {
        let levels = Self { epsilon, sigma };
        levels.validate()?;
        Ok(levels)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(invalid(
                "epsilon",
                format!("must be finite and >= 0, got {}", self.epsilon),
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(invalid(
                "sigma",
                format!("must be finite and >= 0, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

/// Coefficient vector `θ`, 1-based in accessors, implicitly zero past its end.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(invalid(
                "theta",
                format!("coefficient {} is not finite", i + 1),
            ));
        }
        Ok(Self(coefficients))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// `θ_j` for `j >= 1`; zero beyond the stored length.
    #[inline]
    pub fn coef(&self, j: usize) -> f64 {
        self.0.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `self − other`, padded to the longer length.
    pub fn difference(&self, other: &Signal) -> Signal {
        let n = self.len().max(other.len());
        Signal((1..=n).map(|j| self.coef(j) - other.coef(j)).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn resized(&self, len: usize) -> Vec<f64> {
        let mut v = self.0.clone();
        if v.len() < len {
            v.resize(len, 0.0);
        }
        v
    }
}

/// One realization `(Y_j, X_j)_{j <= J_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

impl Observations {
    pub fn new(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if y.len() != x.len() {
            return Err(invalid(
                "observations",
                format!("len(y) = {} != len(x) = {}", y.len(), x.len()),
            ));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(invalid("observations", "non-finite entry"));
        }
        Ok(Self { y, x })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Which of the two independent Gaussian sequences a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    /// `ξ`, the signal noise.
    Signal = 0,
    /// `η`, the operator noise.
    Operator = 1,
}

/// Identifies one replication's pair of noise streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replication: u64,
}

impl StreamKey {
    pub fn new(seed: u64, replication: u64) -> Self {
        Self { seed, replication }
    }

    pub fn stream(&self, tag: StreamTag) -> GaussianStream {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(tag as u64).to_le_bytes());
        key[16..24].copy_from_slice(b"gsm-gof\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.replication);
        GaussianStream { rng }
    }
}

/// Sequential standard Gaussian draws; the `j`-th call yields `ξ_j` / `η_j`.
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl Iterator for GaussianStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_gaussian())
    }
}

/// Simulates one realization of length `j_max` from replication 0 of `seed`.
pub fn simulate(
    theta: &Signal,
    spec: &RegimeSpec,
    noise: NoiseLevels,
    seed: u64,
    j_max: usize,
) -> Result<Observations> {
    simulate_replication(theta, spec, noise, StreamKey::new(seed, 0), j_max)
}

/// Simulates the first `len` coordinates of the replication named by `key`.
pub fn simulate_replication(
    theta: &Signal,
    spec: &RegimeSpec,
    noise: NoiseLevels,
    key: StreamKey,
    len: usize,
) -> Result<Observations> {
    simulate_until(theta, spec, noise, key, len, |_, _| false)
}

/// Draws `X_j` for `j = 1, 2, …` until `stop(j, X_j)` holds (inclusive) or
/// `j_max` is reached, then draws `Y` over the same prefix. The result equals
/// the corresponding prefix of [`simulate_replication`] bit for bit.
pub fn simulate_until(
    theta: &Signal,
    spec: &RegimeSpec,
    noise: NoiseLevels,
    key: StreamKey,
    j_max: usize,
    mut stop: impl FnMut(usize, f64) -> bool,
) -> Result<Observations> {
    noise.validate()?;
    if theta.len() > j_max {
        return Err(invalid(
            "theta",
            format!("has {} coefficients but J_max = {j_max}", theta.len()),
        ));
    }
    let mut eta = key.stream(StreamTag::Operator);
    let mut x = Vec::new();
    for j in 1..=j_max {
        let xj = spec.b_value(j) + noise.sigma * eta.next_gaussian();
        x.push(xj);
        if stop(j, xj) {
            break;
        }
    }
    let mut xi = key.stream(StreamTag::Signal);
    let y = (1..=x.len())
        .map(|j| spec.b_value(j) * theta.coef(j) + noise.epsilon * xi.next_gaussian())
        .collect();
    Ok(Observations { y, x })
}

/// Free constants `0 < C₀ <= 1 <= C₁` of the perturbed-operator class used by
/// the two-point lower-bound prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConstants {
    pub c0: f64,
    pub c1: f64,
}

impl Default for PriorConstants {
    fn default() -> Self {
        Self { c0: 0.5, c1: 2.0 }
    }
}

impl PriorConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0 <= 1.0) {
            return Err(invalid(
                "c0",
                format!("must lie in (0, 1], got {}", self.c0),
            ));
        }
        if !(self.c1 >= 1.0 && self.c1.is_finite()) {
            return Err(invalid(
                "c1",
                format!("must be finite and >= 1, got {}", self.c1),
            ));
        }
        Ok(())
    }
}

/// `C_{α,β} = ln(1 + 4(1 − α − β)²)`.
pub fn c_alpha_beta(alpha: f64, beta: f64) -> Result<f64> {
    check_levels(alpha, beta)?;
    let gap = 1.0 - alpha - beta;
    Ok((4.0 * gap * gap).ln_1p())
}

pub(crate) fn check_levels(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("beta", format!("must lie in (0, 1), got {beta}")));
    }
    if alpha + beta >= 1.0 {
        return Err(Error::InvalidLevels { alpha, beta });
    }
    Ok(())
}

/// `G_D(C₀, C₁) = Φ((C₁−1) b_D/σ) − Φ((C₀−1) b_D/σ)`, the probability that
/// `X_D` falls in `[C₀ b_D, C₁ b_D]`.
pub fn g_probability(b_d: f64, sigma: f64, constants: PriorConstants) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let u = b_d / sigma;
    // Sum the two excluded tails directly so G close to 1 keeps its precision.
    let upper_tail = normal_cdf(-(constants.c1 - 1.0) * u);
    let lower_tail = normal_cdf((constants.c0 - 1.0) * u);
    1.0 - (upper_tail + lower_tail)
}

/// `C_{α,β,D} = C_{α,β} + ln G_D(C₀, C₁)`.
pub fn c_alpha_beta_d(
    spec: &RegimeSpec,
    sigma: f64,
    alpha: f64,
    beta: f64,
    d: usize,
    constants: PriorConstants,
) -> Result<f64> {
    let c = c_alpha_beta(alpha, beta)?;
    if sigma == 0.0 {
        return Ok(c);
    }
    let u = spec.b_value(d) / sigma;
    let excluded = normal_cdf(-(constants.c1 - 1.0) * u) + normal_cdf((constants.c0 - 1.0) * u);
    Ok(c + (-excluded).ln_1p())
}

/// The hardest two-point pair at frequency `D`: the alternative `θ` puts
/// `a_D^{-1}/2` on coordinate `D`, the null `θ₀` shifts it by
/// `C_{α,β,D} σ a_D^{-1} b_D^{-1}/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointPair {
    pub theta0: Signal,
    pub theta: Signal,
    /// `C_{α,β,D}` used for the shift.
    pub c_abd: f64,
}

impl TwoPointPair {
    pub fn separation(&self) -> f64 {
        self.theta.difference(&self.theta0).norm()
    }
}

pub fn make_two_point_pair(
    spec: &RegimeSpec,
    noise: NoiseLevels,
    alpha: f64,
    beta: f64,
    d: usize,
    constants: PriorConstants,
) -> Result<TwoPointPair> {
    noise.validate()?;
    constants.validate()?;
    if d == 0 {
        return Err(invalid("D", "must be at least 1"));
    }
    let sigma = noise.sigma;
    let c_abd = c_alpha_beta_d(spec, sigma, alpha, beta, d, constants)?;
    if c_abd < 0.0 {
        return Err(Error::InfeasibleConstruction(format!(
            "C_(alpha,beta,D) = {c_abd} < 0 at D = {d}: G_D too small for sigma = {sigma}"
        )));
    }
    let b_inv = spec.b_value(d).recip();
    if c_abd * sigma * b_inv > 1.0 {
        return Err(Error::InfeasibleConstruction(format!(
            "C_(alpha,beta,D) sigma / b_D = {} > 1 at D = {d}",
            c_abd * sigma * b_inv
        )));
    }
    let a_inv = spec.a_value(d).recip();
    let mut theta = vec![0.0; d];
    let mut theta0 = vec![0.0; d];
    theta[d - 1] = a_inv / 2.0;
    theta0[d - 1] = a_inv / 2.0 + c_abd * sigma * a_inv * b_inv / 2.0;
    Ok(TwoPointPair {
        theta0: Signal(theta0),
        theta: Signal(theta),
        c_abd,
    })
}

/// Largest `D <= j_max` with `a_D r <= 1`, if any.
pub fn spike_frequency(spec: &RegimeSpec, r: f64, j_max: usize) -> Option<usize> {
    // a_D is increasing, so the admissible set is a prefix of 1..=j_max.
    let fits = |d: usize| spec.a_value(d) * r <= 1.0;
    if j_max == 0 || !fits(1) {
        return None;
    }
    let (mut lo, mut hi) = (1usize, j_max);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(lo)
}

/// `θ₀ + r e_{D*}` with `D*` the largest frequency whose spike stays in `E_a`.
pub fn make_spike_alternative(
    spec: &RegimeSpec,
    theta0: &Signal,
    r: f64,
    j_max: usize,
) -> Result<Signal> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(
            "r",
            format!("must be positive and finite, got {r}"),
        ));
    }
    let d_star =
        spike_frequency(spec, r, j_max).ok_or(Error::InfeasibleRadius { radius: r, j_max })?;
    let mut coefs = theta0.resized(d_star);
    coefs[d_star - 1] += r;
    Ok(Signal(coefs))
}

/// `θ₀ + (r/√D) Σ_{j<=D} e_j`; an alternative spread evenly over the first `D`
/// frequencies.
pub fn make_flat_alternative(
    spec: &RegimeSpec,
    theta0: &Signal,
    r: f64,
    d: usize,
) -> Result<Signal> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid(
            "r",
            format!("must be positive and finite, got {r}"),
        ));
    }
    if d == 0 {
        return Err(invalid("D", "must be at least 1"));
    }
    let level = r / (d as f64).sqrt();
    let bump = vec![level; d];
    if !spec.in_ellipsoid(&bump) {
        return Err(Error::InfeasibleRadius {
            radius: r,
            j_max: d,
        });
    }
    let mut coefs = theta0.resized(d);
    for c in coefs.iter_mut().take(d) {
        *c += level;
    }
    Ok(Signal(coefs))
}
