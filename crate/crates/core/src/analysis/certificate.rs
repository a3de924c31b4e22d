use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// The constants `(α, L_C, M_f, η)` and the verdict of `α > (L_C + M_f)/η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityCertificate {
    pub alpha: f64,
    #[serde(rename = "L_C")]
    pub l_c: f64,
    #[serde(rename = "M_f")]
    pub m_f: f64,
    /// `+∞` for convex sets (serialized as `null`).
    pub eta: f64,
    /// `ᾱ = (M_f + L_C − η·α)/η`; `−α` for convex sets.
    pub alpha_bar: f64,
    pub applicable: bool,
}

/// Builds the certificate. Pass `f64::INFINITY` as `eta` for convex sets.
///
/// The sign of `M_f + L_C − η·α` is decided in exact rational arithmetic on
/// the given operands, so `applicable`, `alpha_bar < 0` and the inequality
/// always agree.
pub fn certificate(alpha: f64, l_c: f64, m_f: f64, eta: f64) -> Result<StabilityCertificate> {
    for (name, v) in [("alpha", alpha), ("L_C", l_c), ("M_f", m_f)] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
        }
    }
    if l_c < 0.0 || m_f < 0.0 {
        return Err(Error::InvalidParameter("L_C and M_f must be >= 0".into()));
    }
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::InvalidParameter(format!("eta must be >= 0, got {eta}")));
    }
    let (alpha_bar, applicable) = if eta == f64::INFINITY {
        (-alpha, alpha > 0.0)
    } else if eta == 0.0 {
        (f64::INFINITY, false)
    } else {
        let numerator = exact_numerator(alpha, l_c, m_f, eta);
        let applicable = numerator < BigRational::zero();
        let ratio = numerator / rational(eta);
        let mut alpha_bar = ratio.to_f64().unwrap_or(f64::NAN);
        if applicable && alpha_bar >= 0.0 {
            alpha_bar = -f64::MIN_POSITIVE;
        } else if !applicable && alpha_bar < 0.0 {
            alpha_bar = 0.0;
        }
        (alpha_bar, applicable)
    };
    Ok(StabilityCertificate {
        alpha,
        l_c,
        m_f,
        eta,
        alpha_bar,
        applicable,
    })
}

impl StabilityCertificate {
    /// `α > (L_C + M_f)/η`, evaluated exactly.
    pub fn inequality_holds(&self) -> bool {
        if self.eta == f64::INFINITY {
            return self.alpha > 0.0;
        }
        if self.eta == 0.0 {
            return false;
        }
        rational(self.alpha) * rational(self.eta) > rational(self.l_c) + rational(self.m_f)
    }
}

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite operand")
}

fn exact_numerator(alpha: f64, l_c: f64, m_f: f64, eta: f64) -> BigRational {
    rational(m_f) + rational(l_c) - rational(eta) * rational(alpha)
}

/// Where a certificate constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub alpha: Source,
    #[serde(rename = "L_C")]
    pub l_c: Source,
    #[serde(rename = "M_f")]
    pub m_f: Source,
    pub eta: Source,
}

/// Serialized certificate report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    #[serde(flatten)]
    pub certificate: StabilityCertificate,
    pub provenance: Provenance,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scenario_a_certificate() {
        let c = certificate(1.0, 0.0, 2.5, 2.598076).unwrap();
        assert!(c.applicable);
        assert!((c.alpha_bar + 0.037750).abs() < 1e-6);
    }

    #[test]
    fn crowd_pair_is_inapplicable() {
        let v = 0.5 * 2f64.sqrt();
        let c = certificate(1.0, 0.0, v, v).unwrap();
        assert!(!c.applicable);
        assert!(!c.inequality_holds());
        assert_eq!(c.alpha_bar, 0.0);
        let c = certificate(
            1.0,
            0.0,
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        )
        .unwrap();
        assert!(!c.applicable);
    }

    #[test]
    fn trivial_case() {
        let c = certificate(2.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(c.alpha_bar, -2.0);
        assert!(c.applicable);
    }

    #[test]
    fn convex_and_degenerate_limits() {
        let c = certificate(0.7, 0.3, 9.0, f64::INFINITY).unwrap();
        assert_eq!(c.alpha_bar, -0.7);
        assert!(c.applicable);
        let c = certificate(1.0, 0.0, 2.5, 0.0).unwrap();
        assert!(!c.applicable);
        assert_eq!(c.alpha_bar, f64::INFINITY);
        let json = serde_json::to_value(c).unwrap();
        assert!(json["alpha_bar"].is_null());
    }

    #[test]
    fn rejects_bad_operands() {
        assert!(certificate(f64::NAN, 0.0, 0.0, 1.0).is_err());
        assert!(certificate(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(certificate(1.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn json_field_names() {
        let c = certificate(1.0, 0.0, 2.5, 2.598076).unwrap();
        let r = CertificateReport {
            certificate: c,
            provenance: Provenance {
                alpha: Source::ClosedForm,
                l_c: Source::ClosedForm,
                m_f: Source::ClosedForm,
                eta: Source::Estimated,
            },
            seed: 7,
        };
        let v = serde_json::to_value(r).unwrap();
        for key in [
            "alpha",
            "L_C",
            "M_f",
            "eta",
            "alpha_bar",
            "applicable",
            "provenance",
            "seed",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["provenance"]["eta"], "estimated");
        assert_eq!(v["provenance"]["M_f"], "closed_form");
    }

    proptest! {
        #[test]
        fn three_way_consistency(
            alpha in -10.0f64..10.0,
            l_c in 0.0f64..5.0,
            m_f in 0.0f64..5.0,
            eta in 1e-6f64..10.0,
        ) {
            let c = certificate(alpha, l_c, m_f, eta).unwrap();
            prop_assert_eq!(c.applicable, c.alpha_bar < 0.0);
            prop_assert_eq!(c.applicable, c.inequality_holds());
        }
    }
}
