use serde::Serialize;

use crate::error::{Error, Result};
use crate::sweep::Trajectory;

/// Gap between two runs on a common grid, checked against `e^{ᾱ(t−τ)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub tau: f64,
    pub gaps: Vec<(f64, f64)>,
    pub envelope_violations: usize,
    /// Least-squares slope of `ln gap` over the window `gap ∈ (1e−12, gap(τ)]`.
    pub fitted_rate: Option<f64>,
}

const FIT_FLOOR: f64 = 1e-12;

pub fn verify_contraction(a: &Trajectory, b: &Trajectory, alpha_bar: f64, slack: f64) -> Result<ContractionReport> {
    if a.t0 != b.t0 || a.h != b.h || a.len() != b.len() || a.times != b.times {
        return Err(Error::ContractViolation("trajectories are not on the same grid".into()));
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty trajectories".into()));
    }
    let tau = a.t0;
    let gaps: Vec<(f64, f64)> = a
        .times
        .iter()
        .zip(a.states.iter().zip(&b.states))
        .map(|(t, (x, y))| (*t, x.dist(y)))
        .collect();
    let g0 = gaps[0].1;
    let envelope_violations = gaps
        .iter()
        .filter(|(t, g)| *g > (alpha_bar * (t - tau)).exp() * g0 * slack)
        .count();

    let window: Vec<(f64, f64)> = gaps
        .iter()
        .filter(|(_, g)| *g > FIT_FLOOR && *g <= g0)
        .map(|(t, g)| (*t, g.ln()))
        .collect();
    let fitted_rate = if g0 > 0.0 && window.len() >= 2 {
        let n = window.len() as f64;
        let mt = window.iter().map(|p| p.0).sum::<f64>() / n;
        let my = window.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = window.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
        let sxx: f64 = window.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };

    Ok(ContractionReport {
        tau,
        gaps,
        envelope_violations,
        fitted_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{BProfile, MovingSet};
    use crate::state::StateVector;
    use crate::sweep::{integrate, VectorField};

    fn synthetic(rate: f64, g0: f64) -> (Trajectory, Trajectory) {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let make = |sign: f64| Trajectory {
            t0: 0.0,
            h: 0.1,
            times: times.clone(),
            states: times
                .iter()
                .map(|t| StateVector::xy(sign * 0.5 * g0 * (rate * t).exp(), 0.0))
                .collect(),
            residuals: vec![0.0; 100],
            projection_flags: vec![Vec::new(); 101],
        };
        (make(1.0), make(-1.0))
    }

    #[test]
    fn identical_runs() {
        let (a, _) = synthetic(-1.0, 1.0);
        let r = verify_contraction(&a, &a, -0.5, 1.05).unwrap();
        assert!(r.gaps.iter().all(|(_, g)| *g == 0.0));
        assert_eq!(r.envelope_violations, 0);
        assert_eq!(r.fitted_rate, None);
    }

    #[test]
    fn exact_exponential_gap() {
        let (a, b) = synthetic(-0.3, 2.0);
        let r = verify_contraction(&a, &b, -0.3, 1.0 + 1e-9).unwrap();
        assert_eq!(r.envelope_violations, 0);
        assert!((r.fitted_rate.unwrap() + 0.3).abs() < 1e-9);
        let r = verify_contraction(&a, &b, -0.4, 1.05).unwrap();
        assert!(r.envelope_violations > 0);
    }

    #[test]
    fn grid_mismatch() {
        let (a, mut b) = synthetic(-0.3, 2.0);
        b.h = 0.2;
        assert!(matches!(
            verify_contraction(&a, &b, -0.3, 1.0),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn scenario_a_pair() {
        let set = MovingSet::ellipse_exterior_ball(BProfile::constant(2.0).unwrap());
        let f = VectorField::linear(1.0).unwrap();
        let a = integrate(&set, &f, 0.0, &StateVector::xy(-1.8, 0.3), 100.0, 1e-2).unwrap();
        let b = integrate(&set, &f, 0.0, &StateVector::xy(-2.2, -0.2), 100.0, 1e-2).unwrap();
        let r = verify_contraction(&a, &b, -0.037750, 1.05).unwrap();
        assert_eq!(r.envelope_violations, 0);
    }
}
