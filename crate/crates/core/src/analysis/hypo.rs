use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::sets::{proximal_normals, MovingSet};
use crate::state::StateVector;

/// Values of `⟨v − v′, x − x′⟩ + ‖x − x′‖²` below this count as violations.
pub const HYPO_TOL: f64 = -1e-9;
const POOL_POINTS: usize = 400;
const PROBE_NORM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypoReport {
    pub min_slack: f64,
    pub violations: usize,
    pub pairs: usize,
    /// Validated normals available for pairing.
    pub pool_size: usize,
}

/// Checks `⟨v − v′, x − x′⟩ ≥ −‖x − x′‖²` on `n_pairs` seeded pairs of
/// proximal normals scaled to length `eta`, drawn from a pool of validated
/// normals at sampled boundary points.
pub fn check_hypomonotonicity(set: &MovingSet, t: f64, eta: f64, n_pairs: usize, seed: u64) -> Result<HypoReport> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be finite and >= 0, got {eta}"
        )));
    }
    let mut rng = seeded(seed);
    let mut pool: Vec<(StateVector, StateVector)> = Vec::new();
    for x in set.boundary_samples(t, POOL_POINTS, &mut rng)? {
        for n in proximal_normals(set, t, &x, PROBE_NORM)?.samples {
            pool.push((x.clone(), n.direction.scale(eta)));
        }
    }
    if pool.is_empty() {
        return Err(Error::Internal("no validated normals to pair".into()));
    }
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..n_pairs {
        let i = rng.random_range(0..pool.len());
        let mut j = rng.random_range(0..pool.len());
        while j == i && pool.len() > 1 {
            j = rng.random_range(0..pool.len());
        }
        let ((x, v), (y, w)) = (&pool[i], &pool[j]);
        let d = x - y;
        let slack = (v - w).dot(&d) + d.norm_sq();
        min_slack = min_slack.min(slack);
        if slack < HYPO_TOL {
            violations += 1;
        }
    }
    Ok(HypoReport {
        min_slack,
        violations,
        pairs: n_pairs,
        pool_size: pool.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::eta_closed_form;
    use crate::sets::BProfile;

    #[test]
    fn ball_is_monotone() {
        let set = MovingSet::ball(StateVector::xy(0.0, 0.0), 1.0).unwrap();
        for eta in [0.1, 1.0, 100.0] {
            let r = check_hypomonotonicity(&set, 0.0, eta, 2000, 1).unwrap();
            assert!(r.min_slack >= 0.0);
            assert_eq!(r.violations, 0);
        }
    }

    #[test]
    fn ellipse_certified_radius_holds() {
        let set = MovingSet::ellipse_exterior_ball(BProfile::constant(2.0).unwrap());
        let r = check_hypomonotonicity(&set, 0.0, eta_closed_form(2.0), 10_000, 2).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
    }

    #[test]
    fn inflated_radius_is_caught() {
        let set = MovingSet::ellipse_exterior_ball(BProfile::constant(2.0).unwrap());
        let r = check_hypomonotonicity(&set, 0.0, 26.0, 10_000, 2).unwrap();
        assert!(r.violations > 0);
    }

    #[test]
    fn crowd_pair_certified_radius_holds() {
        let set = MovingSet::crowd(2, 0.5, Some(1.0)).unwrap();
        let r = check_hypomonotonicity(&set, 0.0, 0.5 * 2f64.sqrt(), 10_000, 3).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
    }
}
