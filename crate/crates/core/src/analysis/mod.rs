//! Certificate constants, the stability certificate, and the empirical
//! checks that back each constant.

mod certificate;
mod contraction;
mod estimators;
mod example;
mod gronwall;
mod hausdorff;
mod hypo;

pub use certificate::{certificate, CertificateReport, Provenance, Source, StabilityCertificate};
pub use contraction::{verify_contraction, ContractionReport};
pub use estimators::{estimate_alpha, estimate_eta, estimate_m_f, EtaEstimate, EMPTINESS_SAMPLES};
pub use example::{corner_angle, ellipse_curvature, example_constants, ExampleConstants};
pub use gronwall::{gronwall_envelope, GronwallInputs};
pub use hausdorff::{estimate_lipschitz_c, hausdorff, LipschitzEstimate};
pub use hypo::{check_hypomonotonicity, HypoReport};

/// Prox-regularity radius `(β^{4/3} − β^{−2/3})^{3/2}` of the ellipse-ball
/// set when `b(t) ≥ β`. Zero at `β = 1`.
pub fn eta_closed_form(beta: f64) -> f64 {
    let s = beta.powf(4.0 / 3.0) - beta.powf(-2.0 / 3.0);
    if s <= 0.0 {
        0.0
    } else {
        s.powf(1.5)
    }
}

/// Lipschitz constant `4L_b/(3β³)` of `t ↦ C(t)` for the ellipse-ball set.
pub fn lipschitz_closed_form(beta: f64, l_b: f64) -> f64 {
    4.0 * l_b / (3.0 * beta.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_vanishes_at_one_and_increases() {
        assert_eq!(eta_closed_form(1.0), 0.0);
        let mut prev = 0.0;
        for k in 1..=400 {
            let beta = 1.0 + k as f64 * 0.025;
            let eta = eta_closed_form(beta);
            assert!(eta > prev, "beta={beta}");
            prev = eta;
        }
    }

    #[test]
    fn eta_at_two() {
        // 2^{4/3} − 2^{−2/3} = 2^{−2/3}(4 − 1) = 3·2^{−2/3}; raised to 3/2 gives 3√3/2.
        assert!((eta_closed_form(2.0) - 1.5 * 3f64.sqrt()).abs() < 1e-14);
    }
}
