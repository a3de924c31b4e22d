use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use super::ellipse::BALL_CENTER;
use super::{pair_gap, ActiveTag, MovingSet};
use crate::error::{Error, Result};
use crate::state::StateVector;

/// Number of directions emitted across a two-constraint normal cone.
const FAN_SIZE: usize = 9;

/// A validated unit proximal normal at a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalSample {
    pub base: StateVector,
    pub direction: StateVector,
    /// Largest tested `s` with `base ∈ proj(base + s·direction)`.
    pub scale_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Normals {
    pub samples: Vec<NormalSample>,
    /// Candidate directions that failed the projection check.
    pub rejected: Vec<StateVector>,
}

/// Unit proximal normals at the boundary point `x`.
///
/// Candidates are the outward unit normals of the active constraints, and
/// a fan of conic combinations where two constraints are active. Each one
/// is kept only if `x` is a nearest point of `C(t)` to `x + s·v` with
/// `s = min(max_norm, 0.9·η)` (`s = max_norm` for convex sets).
pub fn proximal_normals(set: &MovingSet, t: f64, x: &StateVector, max_norm: f64) -> Result<Normals> {
    x.check_dim(set.dim())?;
    if !(max_norm.is_finite() && max_norm > 0.0) {
        return Err(Error::InvalidParameter(format!("max_norm must be > 0, got {max_norm}")));
    }
    if !set.is_boundary_point(t, x) {
        return Err(Error::NotOnBoundary);
    }
    let candidates = candidate_normals(set, t, x);
    let s = match set.claimed_eta().finite() {
        Some(eta) => max_norm.min(0.9 * eta),
        None => max_norm,
    };

    let mut out = Normals::default();
    for v in candidates {
        let z = x.axpy(s, &v);
        let proj = set.project(t, &z)?;
        // x is a nearest point iff no member is closer than ‖z − x‖ = s.
        if proj.distance >= z.dist(x) - 1e-10 * (1.0 + s) {
            out.samples.push(NormalSample {
                base: x.clone(),
                direction: v,
                scale_limit: s,
            });
        } else {
            out.rejected.push(v);
        }
    }
    Ok(out)
}

fn candidate_normals(set: &MovingSet, t: f64, x: &StateVector) -> Vec<StateVector> {
    let tags = set.active_tags(t, x);
    match set {
        MovingSet::Ball { .. } => {
            let c = set.ball_center_at(t).expect("ball");
            (x - &c).normalized().into_iter().collect()
        }
        MovingSet::EllipseExteriorBall { profile } => {
            let b = profile.value(t);
            let n_ball = StateVector::xy(x[0] - BALL_CENTER[0], x[1] - BALL_CENTER[1])
                .normalized()
                .expect("boundary point away from centre");
            // −∇(x₁² + x₂²/b²), pointing into the elliptic hole
            let n_arc = StateVector::xy(-x[0], -x[1] / (b * b))
                .normalized()
                .expect("ellipse point away from origin");
            match tags.as_slice() {
                [ActiveTag::BallBoundary] => vec![n_ball],
                [ActiveTag::EllipseArc] => vec![n_arc],
                [ActiveTag::Corner] => fan(&n_ball, &n_arc),
                _ => Vec::new(),
            }
        }
        MovingSet::CrowdDisks { n_people, .. } => {
            let xs = x.as_slice();
            let mut normals: Vec<StateVector> = tags
                .iter()
                .filter_map(|tag| match *tag {
                    ActiveTag::Pair(i, j) => {
                        let gap = pair_gap(xs, i, j);
                        let ux = (xs[2 * i] - xs[2 * j]) / gap;
                        let uy = (xs[2 * i + 1] - xs[2 * j + 1]) / gap;
                        let mut v = vec![0.0; 2 * n_people];
                        v[2 * i] = -ux * FRAC_1_SQRT_2;
                        v[2 * i + 1] = -uy * FRAC_1_SQRT_2;
                        v[2 * j] = ux * FRAC_1_SQRT_2;
                        v[2 * j + 1] = uy * FRAC_1_SQRT_2;
                        Some(StateVector::from_vec_unchecked(v))
                    }
                    _ => None,
                })
                .collect();
            if normals.len() == 2 {
                normals = fan(&normals[0], &normals[1]);
            } else if normals.len() > 2 {
                let sum = normals.iter().skip(1).fold(normals[0].clone(), |acc, v| &acc + v);
                normals.extend(sum.normalized());
            }
            normals
        }
    }
}

fn fan(a: &StateVector, b: &StateVector) -> Vec<StateVector> {
    (0..FAN_SIZE)
        .filter_map(|k| {
            let lam = k as f64 / (FAN_SIZE - 1) as f64;
            a.scale(1.0 - lam).axpy(lam, b).normalized()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::BProfile;

    fn scenario_a() -> MovingSet {
        MovingSet::ellipse_exterior_ball(BProfile::constant(2.0).unwrap())
    }

    #[test]
    fn ball_boundary_normal() {
        let n = proximal_normals(&scenario_a(), 0.0, &StateVector::xy(-2.5, 0.0), 10.0).unwrap();
        assert_eq!(n.samples.len(), 1);
        assert_eq!(n.samples[0].direction, StateVector::xy(-1.0, 0.0));
        assert!(n.rejected.is_empty());
    }

    #[test]
    fn vertex_normal_points_into_hole() {
        let n = proximal_normals(&scenario_a(), 0.0, &StateVector::xy(-1.0, 0.0), 10.0).unwrap();
        assert_eq!(n.samples.len(), 1);
        assert_eq!(n.samples[0].direction, StateVector::xy(1.0, 0.0));
        let eta = crate::analysis::eta_closed_form(2.0);
        assert!((n.samples[0].scale_limit - 0.9 * eta).abs() < 1e-15);
    }

    #[test]
    fn corner_fan_is_fully_validated() {
        let set = scenario_a();
        let (c, _) = set.corner_points(0.0).unwrap();
        let n = proximal_normals(&set, 0.0, &c, 10.0).unwrap();
        assert_eq!(n.samples.len(), FAN_SIZE);
        assert!(n.rejected.is_empty());
        for s in &n.samples {
            assert!((s.direction.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_point_is_rejected() {
        let err = proximal_normals(&scenario_a(), 0.0, &StateVector::xy(-1.5, 0.0), 1.0).unwrap_err();
        assert_eq!(err, Error::NotOnBoundary);
    }

    #[test]
    fn crowd_normal_pushes_disks_together() {
        let set = MovingSet::crowd(2, 0.5, Some(1.0)).unwrap();
        let x = StateVector::from_slice(&[0.5, 0.0, -0.5, 0.0]);
        let n = proximal_normals(&set, 0.0, &x, 10.0).unwrap();
        assert_eq!(n.samples.len(), 1);
        let d = &n.samples[0].direction;
        assert!((d[0] + FRAC_1_SQRT_2).abs() < 1e-15 && (d[2] - FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
