//! Explicit non-asymptotic bounds on the squared minimax separation radius,
//! and the closed-form rate tables for the four benchmark regimes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gsm::{c_alpha_beta, check_levels, g_probability, PriorConstants};
use crate::sequences::{IllPosedness, KahanSum, RegimeSpec, Smoothness};
use crate::stats::bisect_increasing;
use crate::testproc::{
    bandwidth_m0_m1, c_tilde, check_sigma, sigma_floor, x_level, BandwidthBracket,
};

/// Tolerance for the bisection defining `K`.
pub const K_TOLERANCE: f64 = 1e-10;

/// `c_{α,β} = (2 ln(1 + 4(1−α−β)²))^{1/4}`.
pub fn small_c_alpha_beta(alpha: f64, beta: f64) -> Result<f64> {
    Ok((2.0 * c_alpha_beta(alpha, beta)?).powf(0.25))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    /// Squared radius.
    pub value: f64,
    pub argmin_d: usize,
    pub bandwidths: BandwidthBracket,
}

/// Weights of the upper-bound criterion, fixed once per call.
#[derive(Debug, Clone, Copy)]
struct UpperWeights {
    variance: f64,
    bias: f64,
    floor: f64,
}

impl UpperWeights {
    fn new(epsilon: f64, sigma: f64, alpha: f64, beta: f64) -> Self {
        Self {
            variance: c_tilde(alpha, beta) * epsilon * epsilon,
            bias: 7.0 + 4.0 * x_level(alpha / 2.0).sqrt(),
            floor: sigma_floor(sigma),
        }
    }
}

fn check_upper_inputs(epsilon: f64, sigma: f64, alpha: f64, beta: f64) -> Result<()> {
    check_sigma(sigma)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(
            "epsilon",
            format!("must be positive and finite, got {epsilon}"),
        ));
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(invalid(name, format!("must lie in (0, 1), got {v}")));
        }
    }
    if alpha > beta {
        return Err(invalid(
            "alpha",
            format!("the upper bound needs alpha <= beta, got {alpha} > {beta}"),
        ));
    }
    Ok(())
}

/// Upper bound
/// `inf_D [C̃(α,β) ε² √(Σ_{j<=D∧M₁} b_j^{-4}) + (7+4√x_{α/2}) (σ² ln^{3/2}(1/σ) ∨ a_{D∧M₀}^{-2})]`,
/// minimized exactly over `D ∈ {1, …, M₁ ∧ J_max}`.
#[allow(clippy::too_many_arguments)]
pub fn upper_bound_radius_sq(
    spec: &RegimeSpec,
    epsilon: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
    kappa: f64,
    j_max: usize,
) -> Result<UpperBound> {
    check_upper_inputs(epsilon, sigma, alpha, beta)?;
    let bandwidths = bandwidth_m0_m1(spec, sigma, alpha, kappa, j_max);
    let m0 = bandwidths.m0.value;
    let m1 = bandwidths.m1.value;
    if m0 == 0 {
        return Err(Error::DegenerateBound { sigma });
    }
    let w = UpperWeights::new(epsilon, sigma, alpha, beta);
    let mut sum = KahanSum::default();
    let mut best = (f64::INFINITY, 0usize);
    for d in 1..=m1.min(j_max) {
        // Past an overflow the variance term is infinite for every larger D.
        let Ok(term) = spec.b_inv4(d) else { break };
        sum.add(term);
        let s = sum.value();
        if !s.is_finite() {
            break;
        }
        let a = spec.a_value(d.min(m0));
        let value = w.variance * s.sqrt() + w.bias * w.floor.max(a.powi(-2));
        if value < best.0 {
            best = (value, d);
        }
    }
    if best.1 == 0 {
        return Err(Error::Overflow { index: 1 });
    }
    Ok(UpperBound {
        value: best.0,
        argmin_d: best.1,
        bandwidths,
    })
}

/// `K(C₀, C₁, α, β)`: the value of `b_D/σ` at which `G_D(C₀, C₁)` reaches
/// `(1 + 4(1−α−β)²)^{-1/2}`.
pub fn k_constant(alpha: f64, beta: f64, constants: PriorConstants) -> Result<f64> {
    check_levels(alpha, beta)?;
    constants.validate()?;
    let gap = 1.0 - alpha - beta;
    let target = (1.0 + 4.0 * gap * gap).sqrt().recip();
    // G as a function of u = b_D/σ, with σ = 1.
    let g = |u: f64| g_probability(u, 1.0, constants) - target;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(invalid(
                "c0/c1",
                format!(
                    "G_D never reaches {target} for C0 = {}, C1 = {}",
                    constants.c0, constants.c1
                ),
            ));
        }
    }
    bisect_increasing(g, 0.0, hi, K_TOLERANCE)
        .ok_or_else(|| invalid("c0/c1", "K bisection failed to bracket"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// `σ-component ∨ ε-component`.
    pub value: f64,
    /// `(C²_{α,β}/16) σ² max_{D<=M₂} b_D^{-2} a_D^{-2}`
    pub sigma_component: f64,
    /// `sup_D [c_{α,β} ε² √(Σ_{j<=D} b_j^{-4}) ∧ a_D^{-2}]`
    pub epsilon_component: f64,
    pub m2: usize,
    /// `M₂ = 0`: no frequency admits the two-point prior; the σ-component is 0.
    pub m2_empty: bool,
    /// Every `D <= J_max` satisfied the `M₂` condition.
    pub m2_truncated: bool,
    pub k: f64,
    pub sigma_argmax: usize,
    pub epsilon_argmax: usize,
}

/// `M₂ = sup{D : b_D >= σ (K ∨ C_{α,β}/2)}` over `D <= J_max`, with a
/// truncation flag.
pub fn bandwidth_m2(
    spec: &RegimeSpec,
    sigma: f64,
    k: f64,
    c_ab: f64,
    j_max: usize,
) -> (usize, bool) {
    let level = sigma * k.max(c_ab / 2.0);
    match (1..=j_max).find(|&d| spec.b_value(d) < level) {
        Some(d) => (d - 1, false),
        None => (j_max, true),
    }
}

/// The known-operator term `sup_{D<=J_max} [c_{α,β} ε² √(Σ_{j<=D} b_j^{-4}) ∧ a_D^{-2}]`
/// and its (first) maximizer.
pub fn lower_epsilon_component(
    spec: &RegimeSpec,
    epsilon: f64,
    alpha: f64,
    beta: f64,
    j_max: usize,
) -> Result<(f64, usize)> {
    let c = small_c_alpha_beta(alpha, beta)?;
    let scale = c * epsilon * epsilon;
    let mut sum = KahanSum::default();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for d in 1..=j_max {
        let bias = spec.a_value(d).powi(-2);
        // a_D^{-2} bounds every later candidate from above, so once it drops
        // to the running max nothing further can improve it.
        if bias <= best.0 {
            break;
        }
        let variance = match spec.b_inv4(d) {
            Ok(term) => {
                sum.add(term);
                scale * sum.value().sqrt()
            }
            Err(_) => f64::INFINITY,
        };
        let candidate = variance.min(bias);
        if candidate > best.0 {
            best = (candidate, d);
        }
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
pub fn lower_bound_radius_sq(
    spec: &RegimeSpec,
    epsilon: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
    j_max: usize,
    constants: PriorConstants,
) -> Result<LowerBound> {
    check_levels(alpha, beta)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid(
            "epsilon",
            format!("must be finite and >= 0, got {epsilon}"),
        ));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(
            "sigma",
            format!("must be finite and >= 0, got {sigma}"),
        ));
    }
    if j_max == 0 {
        return Err(invalid("jmax", "must be at least 1"));
    }
    let c_ab = c_alpha_beta(alpha, beta)?;
    let k = k_constant(alpha, beta, constants)?;
    let (m2, m2_truncated) = bandwidth_m2(spec, sigma, k, c_ab, j_max);

    let mut sigma_max = (0.0f64, 0usize);
    for d in 1..=m2 {
        let v = (spec.b_value(d) * spec.a_value(d)).powi(-2);
        if v > sigma_max.0 {
            sigma_max = (v, d);
        }
    }
    let sigma_component = c_ab * c_ab / 16.0 * sigma * sigma * sigma_max.0;
    let (epsilon_component, epsilon_argmax) =
        lower_epsilon_component(spec, epsilon, alpha, beta, j_max)?;

    Ok(LowerBound {
        value: sigma_component.max(epsilon_component),
        sigma_component,
        epsilon_component,
        m2,
        m2_empty: m2 == 0,
        m2_truncated,
        k,
        sigma_argmax: sigma_max.1,
        epsilon_argmax,
    })
}

/// Which rate table to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    Upper,
    Lower,
    KnownOperator,
}

impl std::str::FromStr for RateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            "known" | "known-operator" => Ok(Self::KnownOperator),
            other => Err(invalid("which", format!("unknown rate table `{other}`"))),
        }
    }
}

impl std::fmt::Display for RateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Upper => "upper",
            Self::Lower => "lower",
            Self::KnownOperator => "known-operator",
        })
    }
}

/// Squared-radius rate for the regime, with all proportionality constants 1.
pub fn rate_formula(spec: &RegimeSpec, epsilon: f64, sigma: f64, which: RateKind) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )));
    }
    let (s, t) = (spec.s, spec.t);
    let log_inv_eps = x_level(epsilon);
    let log_inv_sigma = x_level(sigma);
    let ratio = (s / t).min(1.0);

    let eps_term = match (spec.b_kind, spec.a_kind) {
        (IllPosedness::Mild, Smoothness::Ordinary) => {
            epsilon.powf(4.0 * s / (2.0 * s + 2.0 * t + 0.5))
        }
        (IllPosedness::Mild, Smoothness::Super) => {
            epsilon * epsilon * log_inv_eps.powf(2.0 * t + 0.5)
        }
        (IllPosedness::Severe, Smoothness::Ordinary) => log_inv_eps.powf(-2.0 * s),
        (IllPosedness::Severe, Smoothness::Super) => epsilon.powf(2.0 * s / (s + t)),
    };
    let sigma_term = match (which, spec.b_kind, spec.a_kind) {
        (RateKind::KnownOperator, _, _) => return Ok(eps_term),
        (RateKind::Upper, IllPosedness::Mild, Smoothness::Ordinary) => {
            (sigma * log_inv_sigma.powf(0.75)).powf(2.0 * ratio)
        }
        (RateKind::Upper, IllPosedness::Mild, Smoothness::Super) => sigma_floor(sigma),
        (RateKind::Upper, IllPosedness::Severe, Smoothness::Ordinary) => {
            x_level(sigma * log_inv_sigma.sqrt()).powf(-2.0 * s)
        }
        (RateKind::Upper, IllPosedness::Severe, Smoothness::Super) => {
            (sigma * log_inv_sigma.sqrt()).powf(2.0 * ratio)
        }
        (RateKind::Lower, IllPosedness::Mild, Smoothness::Ordinary)
        | (RateKind::Lower, IllPosedness::Severe, Smoothness::Super) => sigma.powf(2.0 * ratio),
        (RateKind::Lower, IllPosedness::Mild, Smoothness::Super) => sigma * sigma,
        (RateKind::Lower, IllPosedness::Severe, Smoothness::Ordinary) => {
            log_inv_sigma.powf(-2.0 * s)
        }
    };
    Ok(eps_term.max(sigma_term))
}

/// Exponent of `ε` in the known-operator / upper-table term for regimes
/// where that term is a pure power of `ε`.
pub fn epsilon_exponent(spec: &RegimeSpec) -> Option<f64> {
    let (s, t) = (spec.s, spec.t);
    match (spec.b_kind, spec.a_kind) {
        (IllPosedness::Mild, Smoothness::Ordinary) => Some(4.0 * s / (2.0 * s + 2.0 * t + 0.5)),
        (IllPosedness::Severe, Smoothness::Super) => Some(2.0 * s / (s + t)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testproc::DEFAULT_KAPPA;

    fn regime(kind: &str, t: f64, s: f64) -> RegimeSpec {
        kind.parse::<crate::sequences::RegimeKind>()
            .unwrap()
            .with_exponents(t, s)
            .unwrap()
    }

    #[test]
    fn lower_constants() {
        // mpmath: ln 4.24 and (2 ln 4.24)^{1/4}
        assert!((c_alpha_beta(0.05, 0.05).unwrap() - 1.4445632692438664).abs() < 1e-14);
        assert!((small_c_alpha_beta(0.05, 0.05).unwrap() - 1.303741953049434).abs() < 1e-14);
        assert!(matches!(
            small_c_alpha_beta(0.5, 0.6),
            Err(Error::InvalidLevels { .. })
        ));
    }

    #[test]
    fn k_matches_root_of_phi_difference() {
        // mpmath findroot of Φ(u) − Φ(−u/2) = 1/√4.24
        let k = k_constant(0.05, 0.05, PriorConstants::default()).unwrap();
        assert!((k - 0.8911932681601884).abs() < 1e-9, "K = {k}");
    }

    #[test]
    fn k_infeasible_when_class_is_a_point() {
        let c = PriorConstants { c0: 1.0, c1: 1.0 };
        assert!(k_constant(0.05, 0.05, c).is_err());
    }

    #[test]
    fn m2_severe_example() {
        let spec = regime("severe-ordinary", 1.0, 1.0);
        let k = k_constant(0.05, 0.05, PriorConstants::default()).unwrap();
        let c = c_alpha_beta(0.05, 0.05).unwrap();
        assert!(k > c / 2.0);
        let (m2, truncated) = bandwidth_m2(&spec, 0.01, k, c, 200);
        assert_eq!((m2, truncated), (4, false));
    }

    #[test]
    fn upper_bound_slice_at_one() {
        let spec = regime("mild-ordinary", 1.0, 1.0);
        // σ = 0.01 gives M₀ = 1, so D = 1 is the only non-dominated choice.
        let ub =
            upper_bound_radius_sq(&spec, 0.01, 0.01, 0.05, 0.5, DEFAULT_KAPPA, 10_000).unwrap();
        assert_eq!(ub.bandwidths.m0.value, 1);
        let bias = 7.0 + 4.0 * (40.0f64).ln().sqrt();
        let d1 = c_tilde(0.05, 0.5) * 1e-4 + bias * (1e-4 * (100.0f64).ln().powf(1.5)).max(1.0);
        assert_eq!(ub.argmin_d, 1);
        assert!((ub.value - d1).abs() <= 1e-12 * d1);
    }

    #[test]
    fn upper_bound_degenerate_sigma() {
        let spec = regime("severe-ordinary", 1.0, 1.0);
        assert_eq!(
            upper_bound_radius_sq(&spec, 0.01, 0.01, 0.05, 0.5, DEFAULT_KAPPA, 200),
            Err(Error::DegenerateBound { sigma: 0.01 })
        );
        assert!(upper_bound_radius_sq(&spec, 0.01, 0.01, 0.5, 0.05, DEFAULT_KAPPA, 200).is_err());
    }

    #[test]
    fn lower_bound_structure() {
        let spec = regime("mild-ordinary", 1.0, 1.0);
        let lb = lower_bound_radius_sq(
            &spec,
            1e-3,
            1e-3,
            0.05,
            0.05,
            10_000,
            PriorConstants::default(),
        )
        .unwrap();
        assert_eq!(lb.value, lb.sigma_component.max(lb.epsilon_component));
        assert!(!lb.m2_empty && !lb.m2_truncated);
    }

    #[test]
    fn lower_bound_flags_empty_m2() {
        let spec = regime("severe-super", 1.0, 1.0);
        let lb = lower_bound_radius_sq(&spec, 0.1, 0.9, 0.05, 0.05, 200, PriorConstants::default())
            .unwrap();
        assert!(lb.m2_empty);
        assert_eq!(lb.sigma_component, 0.0);
        assert_eq!(lb.value, lb.epsilon_component);
    }

    #[test]
    fn lower_bound_rejects_levels() {
        let spec = regime("mild-ordinary", 1.0, 1.0);
        assert!(matches!(
            lower_bound_radius_sq(&spec, 0.1, 0.1, 0.6, 0.4, 100, PriorConstants::default()),
            Err(Error::InvalidLevels { .. })
        ));
    }

    #[test]
    fn rate_table_examples() {
        let mo = regime("mild-ordinary", 1.0, 1.0);
        let eps = 0.01f64;
        // Known-operator term: ε^{8/9}.
        let v = rate_formula(&mo, eps, 1e-12, RateKind::KnownOperator).unwrap();
        assert!((v - eps.powf(8.0 / 9.0)).abs() < 1e-15);
        assert_eq!(epsilon_exponent(&mo), Some(8.0 / 9.0));

        let ss = regime("severe-super", 2.0, 1.0);
        let (e, s) = (0.3f64, 0.2f64);
        let v = rate_formula(&ss, e, s, RateKind::Lower).unwrap();
        assert!((v - e.powf(2.0 / 3.0).max(s)).abs() < 1e-15);

        let ms = regime("mild-super", 1.5, 1.0);
        let v = rate_formula(&ms, 0.01, 0.5, RateKind::KnownOperator).unwrap();
        assert!((v - 1e-4 * (100.0f64).ln().powf(3.5)).abs() < 1e-15);

        let so = regime("severe-ordinary", 1.0, 2.0);
        let v = rate_formula(&so, 0.01, 0.5, RateKind::KnownOperator).unwrap();
        assert!((v - (100.0f64).ln().powf(-4.0)).abs() < 1e-15);
    }

    #[test]
    fn rate_table_upper_sigma_terms() {
        let sigma = 1e-3f64;
        let l = (1e3f64).ln();
        let mo = regime("mild-ordinary", 2.0, 1.0);
        let v = rate_formula(&mo, 1e-9, sigma, RateKind::Upper).unwrap();
        assert!((v - sigma * l.powf(0.75)).abs() < 1e-15);
        let so = regime("severe-ordinary", 1.0, 1.0);
        let v = rate_formula(&so, 1e-200, sigma, RateKind::Upper).unwrap();
        assert!((v - (1.0 / (sigma * l.sqrt())).ln().powi(-2)).abs() < 1e-15);
    }

    #[test]
    fn rate_domain_errors() {
        let mo = regime("mild-ordinary", 1.0, 1.0);
        assert!(matches!(
            rate_formula(&mo, 1.0, 0.1, RateKind::Upper),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            rate_formula(&mo, 0.1, 0.0, RateKind::Lower),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rate_kind_parses() {
        assert_eq!(
            "known_operator".parse::<RateKind>().unwrap(),
            RateKind::KnownOperator
        );
        assert_eq!("Upper".parse::<RateKind>().unwrap(), RateKind::Upper);
        assert!("middle".parse::<RateKind>().is_err());
    }
}
