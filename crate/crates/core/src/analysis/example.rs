use serde::Serialize;

use super::{certificate, eta_closed_form, lipschitz_closed_form, StabilityCertificate};
use crate::error::{Error, Result};
use crate::sets::corner;

/// Closed-form constants of the ellipse-ball example with `f(x) = αx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExampleConstants {
    pub beta: f64,
    #[serde(rename = "L_b")]
    pub l_b: f64,
    pub alpha: f64,
    #[serde(rename = "L_C")]
    pub l_c: f64,
    pub eta: f64,
    #[serde(rename = "M_f")]
    pub m_f: f64,
    pub certificate: StabilityCertificate,
}

/// `L_C = 4L_b/(3β³)`, `η = (β^{4/3} − β^{−2/3})^{3/2}`, `M_f = 2.5α`, and
/// the resulting certificate. At `β = 1` the radius vanishes and the
/// certificate is inapplicable.
pub fn example_constants(beta: f64, l_b: f64, alpha: f64) -> Result<ExampleConstants> {
    if !(beta.is_finite() && beta >= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must be >= 1, got {beta}")));
    }
    if !(l_b.is_finite() && l_b >= 0.0) {
        return Err(Error::InvalidParameter(format!("L_b must be >= 0, got {l_b}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    let l_c = lipschitz_closed_form(beta, l_b);
    let eta = eta_closed_form(beta);
    let m_f = 2.5 * alpha;
    Ok(ExampleConstants {
        beta,
        l_b,
        alpha,
        l_c,
        eta,
        m_f,
        certificate: certificate(alpha, l_c, m_f, eta)?,
    })
}

/// Radius of curvature `(1/b)(sin²φ + b²cos²φ)^{3/2}` of the ellipse
/// `x₁² + x₂²/b² = 1` at the point `(−cos φ, b sin φ)`.
pub fn ellipse_curvature(b: f64, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    (s * s + b * b * c * c).powf(1.5) / b
}

/// Angle `φ₀` of the upper corner, `sin φ₀ = q/b`.
pub fn corner_angle(b: f64) -> Result<f64> {
    let (_, q) = corner(b)?;
    Ok((q / b).asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn curvature_values() {
        for phi in [-1.2, 0.0, 0.3, FRAC_PI_2] {
            assert!((ellipse_curvature(1.0, phi) - 1.0).abs() < 1e-15);
        }
        assert!((ellipse_curvature(2.0, 0.0) - 4.0).abs() < 1e-15);
        assert!((ellipse_curvature(2.0, FRAC_PI_2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn curvature_matches_finite_difference_of_parameterization() {
        let b = 2.0;
        let p = |phi: f64| (-phi.cos(), b * phi.sin());
        for k in 0..20 {
            let phi = -1.4 + k as f64 * 0.14;
            let e = 1e-4;
            let (x0, y0) = p(phi - e);
            let (x1, y1) = p(phi);
            let (x2, y2) = p(phi + e);
            let (dx, dy) = ((x2 - x0) / (2.0 * e), (y2 - y0) / (2.0 * e));
            let (ddx, ddy) = ((x2 - 2.0 * x1 + x0) / (e * e), (y2 - 2.0 * y1 + y0) / (e * e));
            let r = (dx * dx + dy * dy).powf(1.5) / (dx * ddy - dy * ddx).abs();
            assert!((r - ellipse_curvature(b, phi)).abs() < 1e-5 * r, "phi={phi}");
        }
    }

    #[test]
    fn corner_angle_at_two() {
        let phi = corner_angle(2.0).unwrap();
        assert!((ellipse_curvature(2.0, phi) - 3.2843).abs() < 1e-3);
        assert!(phi > 0.0 && phi < PI / 2.0);
    }

    #[test]
    fn scenario_constants() {
        let a = example_constants(2.0, 0.0, 1.0).unwrap();
        assert_eq!(a.l_c, 0.0);
        assert_eq!(a.m_f, 2.5);
        assert!(a.certificate.applicable);
        let neg = example_constants(1.9, 0.2 * PI / 10.0, 1.0).unwrap();
        assert!(!neg.certificate.applicable);
        let one = example_constants(1.0, 0.5, 3.0).unwrap();
        assert_eq!(one.eta, 0.0);
        assert!(!one.certificate.applicable);
    }

    #[test]
    fn rejects_beta_below_one() {
        assert!(example_constants(0.9, 0.0, 1.0).is_err());
    }
}
