use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::sets::MovingSet;
use crate::state::StateVector;

/// Smallest time separation used by [`estimate_lipschitz_c`].
pub const MIN_TIME_GAP: f64 = 1e-3;

/// Hausdorff distance between `C(t1)` and `C(t2)`.
///
/// Each directed distance is the largest exact distance from a boundary
/// sample of one set to the other set, so the result approaches the true
/// value from below as `n_boundary` grows.
pub fn hausdorff(set: &MovingSet, t1: f64, t2: f64, n_boundary: usize) -> Result<f64> {
    check_supported(set)?;
    if n_boundary < 100 {
        return Err(Error::InvalidParameter(format!(
            "n_boundary must be >= 100, got {n_boundary}"
        )));
    }
    let a = boundary(set, t1, n_boundary)?;
    let b = boundary(set, t2, n_boundary)?;
    let ab = directed(set, t2, &a)?;
    let ba = directed(set, t1, &b)?;
    Ok(ab.max(ba))
}

fn check_supported(set: &MovingSet) -> Result<()> {
    match set {
        MovingSet::EllipseExteriorBall { .. } => Ok(()),
        MovingSet::Ball { .. } if set.dim() == 2 => Ok(()),
        _ => Err(Error::Unsupported("Hausdorff distance for this set")),
    }
}

fn boundary(set: &MovingSet, t: f64, n: usize) -> Result<Vec<StateVector>> {
    // Supported variants sample deterministically; the generator is unused.
    set.boundary_samples(t, n, &mut seeded(0))
}

fn directed(set: &MovingSet, t: f64, from: &[StateVector]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in from {
        worst = worst.max(set.project(t, x)?.distance);
    }
    Ok(worst)
}

/// Sampled Lipschitz constant of `t ↦ C(t)` compared with the claimed one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub claimed: f64,
    /// `value / claimed`; `None` when the claimed constant is zero.
    pub ratio: Option<f64>,
    /// The sampled quotient exceeds the claimed constant.
    pub exceeds_claim: bool,
    /// `(t, s)` pair attaining the sup.
    pub argmax: Option<(f64, f64)>,
}

/// Largest `d_H(C(t), C(s))/|t − s|` over `n_pairs` seeded pairs in
/// `[t_lo, t_hi]`. Separations are drawn log-uniformly from
/// `[1e−3, t_hi − t_lo]`.
pub fn estimate_lipschitz_c(
    set: &MovingSet,
    t_lo: f64,
    t_hi: f64,
    n_pairs: usize,
    n_boundary: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    check_supported(set)?;
    let span = t_hi - t_lo;
    if !(span.is_finite() && span >= MIN_TIME_GAP) {
        return Err(Error::InvalidParameter(format!(
            "time window [{t_lo}, {t_hi}] is shorter than {MIN_TIME_GAP}"
        )));
    }
    let mut rng = seeded(seed);
    let (log_lo, log_hi) = (MIN_TIME_GAP.ln(), span.ln());
    let mut value: f64 = 0.0;
    let mut argmax = None;
    for _ in 0..n_pairs {
        let gap = if log_hi > log_lo {
            rng.random_range(log_lo..=log_hi).exp().clamp(MIN_TIME_GAP, span)
        } else {
            span
        };
        let t = rng.random_range(t_lo..=t_hi - gap);
        let q = hausdorff(set, t, t + gap, n_boundary)? / gap;
        if q > value {
            value = q;
            argmax = Some((t, t + gap));
        }
    }
    let claimed = set.claimed_lipschitz();
    Ok(LipschitzEstimate {
        value,
        claimed,
        ratio: (claimed > 0.0).then(|| value / claimed),
        exceeds_claim: value > claimed,
        argmax,
    })
}
