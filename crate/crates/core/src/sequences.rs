//! Smoothness sequence `a_j` and singular-value sequence `b_j` for the four
//! benchmark regimes, plus ellipsoid arithmetic.
//!
//! Indices are 1-based throughout: `j = 1` is the first coefficient. Both
//! sequences are evaluated on demand; nothing here caches or truncates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Decay of the singular values `b_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IllPosedness {
    /// `b_j = c_b j^{-t}`
    Mild,
    /// `b_j = c_b exp(-j t)`
    Severe,
}

/// Growth of the ellipsoid weights `a_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    /// `a_j = c_a j^s`
    Ordinary,
    /// `a_j = c_a exp(j s)`
    Super,
}

/// The `(a_j, b_j)` pair that fixes a benchmark regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub b_kind: IllPosedness,
    pub a_kind: Smoothness,
    pub t: f64,
    pub s: f64,
    pub c_b: f64,
    pub c_a: f64,
}

impl RegimeSpec {
    /// Regime with unit proportionality constants.
    pub fn new(b_kind: IllPosedness, a_kind: Smoothness, t: f64, s: f64) -> Result<Self> {
        Self::with_constants(b_kind, a_kind, t, s, 1.0, 1.0)
    }

    pub fn with_constants(
        b_kind: IllPosedness,
        a_kind: Smoothness,
        t: f64,
        s: f64,
        c_b: f64,
        c_a: f64,
    ) -> Result<Self> {
        let spec = Self {
            b_kind,
            a_kind,
            t,
            s,
            c_b,
            c_a,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t", self.t),
            ("s", self.s),
            ("c_b", self.c_b),
            ("c_a", self.c_a),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    name,
                    format!("must be a positive finite number, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Singular value `b_j`, `j >= 1`.
    #[inline]
    pub fn b_value(&self, j: usize) -> f64 {
        assert!(j >= 1, "sequence indices start at 1");
        match self.b_kind {
            IllPosedness::Mild => self.c_b * (j as f64).powf(-self.t),
            IllPosedness::Severe => self.c_b * (-(j as f64) * self.t).exp(),
        }
    }

    /// Ellipsoid weight `a_j`, `j >= 1`.
    #[inline]
    pub fn a_value(&self, j: usize) -> f64 {
        assert!(j >= 1, "sequence indices start at 1");
        match self.a_kind {
            Smoothness::Ordinary => self.c_a * (j as f64).powf(self.s),
            Smoothness::Super => self.c_a * ((j as f64) * self.s).exp(),
        }
    }

    /// `b_j^{-4}`, or an overflow error when it is not representable.
    #[inline]
    pub fn b_inv4(&self, j: usize) -> Result<f64> {
        // Evaluated in log space so the severe regime overflows cleanly
        // instead of going through a subnormal b_j.
        let log_b = match self.b_kind {
            IllPosedness::Mild => self.c_b.ln() - self.t * (j as f64).ln(),
            IllPosedness::Severe => self.c_b.ln() - self.t * j as f64,
        };
        let v = (-4.0 * log_b).exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { index: j })
        }
    }

    /// `Σ_{j=1}^{d} b_j^{-4}` with compensated summation.
    pub fn cumulative_b_inv4(&self, d: usize) -> Result<f64> {
        assert!(d >= 1, "D must be at least 1");
        let mut acc = KahanSum::default();
        for j in 1..=d {
            acc.add(self.b_inv4(j)?);
        }
        let total = acc.value();
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::Overflow { index: d })
        }
    }

    /// `Σ_j a_j² θ_j²` over the given (1-based) coefficients.
    pub fn ellipsoid_weighted_norm(&self, theta: &[f64]) -> f64 {
        let mut acc = KahanSum::default();
        for (i, &c) in theta.iter().enumerate() {
            if c != 0.0 {
                let w = self.a_value(i + 1) * c;
                acc.add(w * w);
            }
        }
        acc.value()
    }

    pub fn in_ellipsoid(&self, theta: &[f64]) -> bool {
        self.ellipsoid_weighted_norm(theta) <= 1.0
    }

    /// Short label such as `mild-ordinary`.
    pub fn label(&self) -> &'static str {
        match (self.b_kind, self.a_kind) {
            (IllPosedness::Mild, Smoothness::Ordinary) => "mild-ordinary",
            (IllPosedness::Mild, Smoothness::Super) => "mild-super",
            (IllPosedness::Severe, Smoothness::Ordinary) => "severe-ordinary",
            (IllPosedness::Severe, Smoothness::Super) => "severe-super",
        }
    }
}

/// Regime kind pair parsed from labels like `mild-ordinary` or `severe/super`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeKind(pub IllPosedness, pub Smoothness);

impl RegimeKind {
    pub const ALL: [RegimeKind; 4] = [
        RegimeKind(IllPosedness::Mild, Smoothness::Ordinary),
        RegimeKind(IllPosedness::Mild, Smoothness::Super),
        RegimeKind(IllPosedness::Severe, Smoothness::Ordinary),
        RegimeKind(IllPosedness::Severe, Smoothness::Super),
    ];

    pub fn with_exponents(self, t: f64, s: f64) -> Result<RegimeSpec> {
        RegimeSpec::new(self.0, self.1, t, s)
    }
}

impl FromStr for RegimeKind {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self> {
        let lower = raw.trim().to_ascii_lowercase();
        let mut parts = lower.split(['-', '/', '_']);
        let b = match parts.next() {
            Some("mild") => IllPosedness::Mild,
            Some("severe") => IllPosedness::Severe,
            _ => return Err(invalid("regime", format!("unknown regime `{raw}`"))),
        };
        let a = match parts.next() {
            Some("ordinary") => Smoothness::Ordinary,
            Some("super") => Smoothness::Super,
            _ => return Err(invalid("regime", format!("unknown regime `{raw}`"))),
        };
        if parts.next().is_some() {
            return Err(invalid("regime", format!("unknown regime `{raw}`")));
        }
        Ok(RegimeKind(b, a))
    }
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = match self.0 {
            IllPosedness::Mild => "mild",
            IllPosedness::Severe => "severe",
        };
        let a = match self.1 {
            Smoothness::Ordinary => "ordinary",
            Smoothness::Super => "super",
        };
        write!(f, "{b}-{a}")
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::rel;

    mod approx_eq {
        pub fn rel(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * a.abs().max(b.abs())
        }
    }

    fn regime(b: IllPosedness, a: Smoothness, t: f64, s: f64) -> RegimeSpec {
        RegimeSpec::new(b, a, t, s).unwrap()
    }

    #[test]
    fn b_values() {
        let mild1 = regime(IllPosedness::Mild, Smoothness::Ordinary, 1.0, 1.0);
        assert_eq!(mild1.b_value(2), 0.5);
        let severe = regime(IllPosedness::Severe, Smoothness::Ordinary, 1.0, 1.0);
        assert!((severe.b_value(1) - 0.367879).abs() < 1e-6);
        let mild2 = regime(IllPosedness::Mild, Smoothness::Ordinary, 2.0, 1.0);
        assert!(rel(mild2.b_value(10), 0.01, 1e-15));
    }

    #[test]
    fn a_values() {
        assert_eq!(
            regime(IllPosedness::Mild, Smoothness::Ordinary, 1.0, 1.0).a_value(3),
            3.0
        );
        let sup = regime(IllPosedness::Mild, Smoothness::Super, 1.0, 0.5);
        assert!((sup.a_value(2) - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(
            regime(IllPosedness::Mild, Smoothness::Ordinary, 1.0, 2.0).a_value(4),
            16.0
        );
    }

    #[test]
    #[should_panic]
    fn zero_index_rejected() {
        regime(IllPosedness::Mild, Smoothness::Ordinary, 1.0, 1.0).b_value(0);
    }

    #[test]
    fn cumulative_small_cases() {
        let mild = regime(IllPosedness::Mild, Smoothness::Ordinary, 1.0, 1.0);
        assert!(rel(mild.cumulative_b_inv4(3).unwrap(), 98.0, 1e-15));
        assert_eq!(mild.cumulative_b_inv4(1).unwrap(), 1.0);
        // e^4 + e^8 from a 30-digit mpmath evaluation.
        let severe = regime(IllPosedness::Severe, Smoothness::Ordinary, 1.0, 1.0);
        assert!(rel(
            severe.cumulative_b_inv4(2).unwrap(),
            3035.5561370748725,
            1e-13
        ));
    }

    #[test]
    fn cumulative_matches_exact_integer_sum() {
        // Σ j^4 = D(D+1)(2D+1)(3D²+3D−1)/30, exact in u128.
        let mild = regime(IllPosedness::Mild, Smoothness::Ordinary, 1.0, 1.0);
        for d in [1u128, 7, 100, 1234, 10_000] {
            let exact = d * (d + 1) * (2 * d + 1) * (3 * d * d + 3 * d - 1) / 30;
            let got = mild.cumulative_b_inv4(d as usize).unwrap();
            assert!(rel(got, exact as f64, 1e-12), "D = {d}: {got} vs {exact}");
        }
    }

    #[test]
    fn severe_overflow_is_signalled() {
        let severe = regime(IllPosedness::Severe, Smoothness::Ordinary, 1.0, 1.0);
        assert!(severe.cumulative_b_inv4(170).is_ok());
        assert_eq!(
            severe.cumulative_b_inv4(200),
            Err(Error::Overflow { index: 178 })
        );
    }

    #[test]
    fn ellipsoid_norm_examples() {
        let spec = regime(IllPosedness::Mild, Smoothness::Ordinary, 1.0, 1.0);
        assert_eq!(spec.ellipsoid_weighted_norm(&[0.0; 5]), 0.0);
        assert_eq!(spec.ellipsoid_weighted_norm(&[0.5]), 0.25);
        assert!(rel(
            spec.ellipsoid_weighted_norm(&[0.1, 0.2, 0.3]),
            0.98,
            1e-14
        ));
    }

    #[test]
    fn invalid_exponents() {
        assert!(RegimeSpec::new(IllPosedness::Mild, Smoothness::Ordinary, 0.0, 1.0).is_err());
        assert!(RegimeSpec::new(IllPosedness::Mild, Smoothness::Ordinary, 1.0, -1.0).is_err());
        assert!(RegimeSpec::with_constants(
            IllPosedness::Mild,
            Smoothness::Ordinary,
            1.0,
            1.0,
            0.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn regime_labels_parse() {
        for kind in RegimeKind::ALL {
            assert_eq!(kind.to_string().parse::<RegimeKind>().unwrap(), kind);
        }
        assert_eq!(
            "Severe/Super".parse::<RegimeKind>().unwrap(),
            RegimeKind(IllPosedness::Severe, Smoothness::Super)
        );
        assert!("moderate-ordinary".parse::<RegimeKind>().is_err());
        assert!("mild".parse::<RegimeKind>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_regime() -> impl Strategy<Value = RegimeSpec> {
            (0usize..4, 0.1f64..3.0, 0.1f64..3.0).prop_map(|(k, t, s)| {
                let kind = RegimeKind::ALL[k];
                RegimeSpec::new(kind.0, kind.1, t, s).unwrap()
            })
        }

        proptest! {
            #[test]
            fn strictly_monotone(spec in any_regime(), j in 1usize..150) {
                prop_assert!(spec.b_value(j + 1) < spec.b_value(j));
                prop_assert!(spec.a_value(j + 1) > spec.a_value(j));
            }

            #[test]
            fn prefix_sum_consistency(spec in any_regime(), d in 2usize..40) {
                if let (Ok(hi), Ok(lo)) = (spec.cumulative_b_inv4(d), spec.cumulative_b_inv4(d - 1)) {
                    let term = spec.b_value(d).powi(-4);
                    prop_assert!((hi - lo - term).abs() <= 1e-12 * hi);
                }
            }

            #[test]
            fn norm_is_degree_two_homogeneous(
                spec in any_regime(),
                theta in proptest::collection::vec(-1.0f64..1.0, 1..12),
                c in -10.0f64..10.0,
            ) {
                let scaled: Vec<f64> = theta.iter().map(|x| c * x).collect();
                let lhs = spec.ellipsoid_weighted_norm(&scaled);
                let rhs = c * c * spec.ellipsoid_weighted_norm(&theta);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
            }
        }
    }
}
