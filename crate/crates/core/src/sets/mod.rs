//! Moving constraint sets: membership, projection, proximal normals and
//! boundary sampling.
//!
//! Three families are supported:
//!
//! * a (possibly translating) closed ball, convex;
//! * the planar set `B̄ ∩ S(t)` where `B̄` is the closed unit ball centred at
//!   (−1.5, 0) and `S(t) = {x : x₁² + x₂²/b(t)² ≥ 1}` is the exterior of an
//!   ellipse with time-varying semi-axis `b(t)`;
//! * non-overlapping disk configurations `{x ∈ ℝ²ᴺ : ‖xᵢ − xⱼ‖ ≥ 2r}`.

pub mod ellipse;
mod normals;
mod oracle;
mod profile;

use std::f64::consts::{SQRT_2, TAU};
use std::fmt;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::state::StateVector;

pub use ellipse::{corner, ellipse_nearest_point, EllipseFoot, BALL_CENTER, BALL_RADIUS};
pub use normals::{proximal_normals, NormalSample, Normals};
pub use oracle::project_oracle;
pub use profile::BProfile;

use ellipse::{arc_stationary_params, ball_level, ellipse_level, left_arc_point};

/// Tolerance on the defining inequalities for membership.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
/// Tolerance for a defining inequality to count as active.
pub const ACTIVE_TOL: f64 = 1e-9;
/// Sweep cap for cyclic projection on crowds of more than two disks.
pub const MAX_CYCLIC_SWEEPS: usize = 10_000;

/// Prox-regularity radius claimed for a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxRadius {
    /// Convex: external tangent balls of every radius.
    Convex,
    Finite(f64),
    /// No closed-form value is available (crowds of more than two disks).
    Unknown,
}

impl ProxRadius {
    /// `d` lies strictly inside the tube where projection is single-valued.
    pub fn within_tube(&self, d: f64) -> bool {
        match *self {
            Self::Convex => true,
            Self::Finite(eta) => d < eta,
            Self::Unknown => false,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Self::Finite(eta) => Some(eta),
            _ => None,
        }
    }

    /// `f64::INFINITY` for convex sets, `None` when unknown.
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Convex => Some(f64::INFINITY),
            Self::Finite(eta) => Some(eta),
            Self::Unknown => None,
        }
    }
}

/// Time dependence of a set or field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Periodicity {
    /// Independent of time, hence T-periodic for every T.
    Autonomous,
    Periodic(f64),
    Aperiodic,
}

impl Periodicity {
    pub fn compatible_with(&self, period: f64) -> bool {
        match *self {
            Self::Autonomous => true,
            Self::Periodic(p) => (p - period).abs() <= 1e-12,
            Self::Aperiodic => false,
        }
    }
}

/// Which defining constraint is active at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveTag {
    BallBoundary,
    EllipseArc,
    Corner,
    Pair(usize, usize),
    None,
}

impl fmt::Display for ActiveTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BallBoundary => write!(f, "ball"),
            Self::EllipseArc => write!(f, "ellipse"),
            Self::Corner => write!(f, "corner"),
            Self::Pair(i, j) => write!(f, "pair({i},{j})"),
            Self::None => write!(f, "none"),
        }
    }
}

impl Serialize for ActiveTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Outcome of a nearest-point query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub point: StateVector,
    pub distance: f64,
    pub active: Vec<ActiveTag>,
    /// The query lies inside the prox-regular tube and no tie was detected.
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MovingSet {
    /// Closed ball whose centre translates with constant `velocity`.
    Ball {
        center: StateVector,
        velocity: Option<StateVector>,
        radius: f64,
    },
    /// `B̄((−1.5, 0), 1) ∩ {x₁² + x₂²/b(t)² ≥ 1}`.
    EllipseExteriorBall { profile: BProfile },
    /// Positions of `n_people` disks of radius `r`, stacked as
    /// `(x₁, y₁, x₂, y₂, …)`. `box_bound` bounds the region used by
    /// estimators; it is not a constraint.
    CrowdDisks {
        n_people: usize,
        r: f64,
        box_bound: Option<f64>,
    },
}

impl MovingSet {
    pub fn ball(center: StateVector, radius: f64) -> Result<Self> {
        check_positive("radius", radius)?;
        Ok(Self::Ball {
            center,
            velocity: None,
            radius,
        })
    }

    pub fn moving_ball(center: StateVector, velocity: StateVector, radius: f64) -> Result<Self> {
        check_positive("radius", radius)?;
        velocity.check_dim(center.dim())?;
        Ok(Self::Ball {
            center,
            velocity: Some(velocity),
            radius,
        })
    }

    pub fn ellipse_exterior_ball(profile: BProfile) -> Self {
        Self::EllipseExteriorBall { profile }
    }

    pub fn crowd(n_people: usize, r: f64, box_bound: Option<f64>) -> Result<Self> {
        if n_people < 2 {
            return Err(Error::InvalidParameter(format!(
                "crowd needs at least 2 people, got {n_people}"
            )));
        }
        check_positive("r", r)?;
        if let Some(bb) = box_bound {
            check_positive("box_bound", bb)?;
        }
        Ok(Self::CrowdDisks { n_people, r, box_bound })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ball { .. } => "ball",
            Self::EllipseExteriorBall { .. } => "ellipse-exterior-ball",
            Self::CrowdDisks { .. } => "crowd-disks",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.dim(),
            Self::EllipseExteriorBall { .. } => 2,
            Self::CrowdDisks { n_people, .. } => 2 * n_people,
        }
    }

    pub fn claimed_eta(&self) -> ProxRadius {
        match self {
            Self::Ball { .. } => ProxRadius::Convex,
            Self::EllipseExteriorBall { profile } => {
                ProxRadius::Finite(crate::analysis::eta_closed_form(profile.beta()))
            }
            Self::CrowdDisks { n_people: 2, r, .. } => ProxRadius::Finite(r * SQRT_2),
            Self::CrowdDisks { .. } => ProxRadius::Unknown,
        }
    }

    pub fn claimed_lipschitz(&self) -> f64 {
        match self {
            Self::Ball { velocity, .. } => velocity.as_ref().map_or(0.0, StateVector::norm),
            Self::EllipseExteriorBall { profile } => {
                crate::analysis::lipschitz_closed_form(profile.beta(), profile.lipschitz())
            }
            Self::CrowdDisks { .. } => 0.0,
        }
    }

    pub fn periodicity(&self) -> Periodicity {
        match self {
            Self::Ball { velocity, .. } => match velocity {
                Some(v) if v.norm() > 0.0 => Periodicity::Aperiodic,
                _ => Periodicity::Autonomous,
            },
            Self::EllipseExteriorBall { profile } => match profile.period() {
                Some(p) => Periodicity::Periodic(p),
                None => Periodicity::Autonomous,
            },
            Self::CrowdDisks { .. } => Periodicity::Autonomous,
        }
    }

    fn ball_center_at(&self, t: f64) -> Option<StateVector> {
        match self {
            Self::Ball { center, velocity, .. } => Some(match velocity {
                Some(v) => center.axpy(t, v),
                None => center.clone(),
            }),
            _ => None,
        }
    }

    pub fn contains(&self, t: f64, x: &StateVector) -> Result<bool> {
        x.check_dim(self.dim())?;
        Ok(self.contains_slice(t, x.as_slice()))
    }

    /// Membership without dimension checks; `x.len()` must equal `dim()`.
    pub(crate) fn contains_slice(&self, t: f64, x: &[f64]) -> bool {
        match self {
            Self::Ball {
                center,
                velocity,
                radius,
            } => {
                let mut d2 = 0.0;
                for (i, xi) in x.iter().enumerate() {
                    let c = center[i] + velocity.as_ref().map_or(0.0, |v| t * v[i]);
                    d2 += (xi - c) * (xi - c);
                }
                d2 <= radius * radius + MEMBERSHIP_TOL
            }
            Self::EllipseExteriorBall { profile } => {
                let b = profile.value(t);
                ball_level(x) <= 1.0 + MEMBERSHIP_TOL && ellipse_level(b, x) >= 1.0 - MEMBERSHIP_TOL
            }
            Self::CrowdDisks { n_people, r, .. } => {
                for i in 0..*n_people {
                    for j in i + 1..*n_people {
                        if pair_gap(x, i, j) - 2.0 * r < -MEMBERSHIP_TOL {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Constraints active at `x` within [`ACTIVE_TOL`].
    pub fn active_tags(&self, t: f64, x: &StateVector) -> Vec<ActiveTag> {
        let x = x.as_slice();
        let mut tags = Vec::new();
        match self {
            Self::Ball { radius, .. } => {
                let c = self.ball_center_at(t).expect("ball");
                if (crate::state::dist_slices(x, c.as_slice()) - radius).abs() <= ACTIVE_TOL {
                    tags.push(ActiveTag::BallBoundary);
                }
            }
            Self::EllipseExteriorBall { profile } => {
                let b = profile.value(t);
                let on_ball = (ball_level(x).sqrt() - BALL_RADIUS).abs() <= ACTIVE_TOL;
                let on_arc = (ellipse_level(b, x) - 1.0).abs() <= ACTIVE_TOL;
                match (on_ball, on_arc) {
                    (true, true) => tags.push(ActiveTag::Corner),
                    (true, false) => tags.push(ActiveTag::BallBoundary),
                    (false, true) => tags.push(ActiveTag::EllipseArc),
                    _ => {}
                }
            }
            Self::CrowdDisks { n_people, r, .. } => {
                for i in 0..*n_people {
                    for j in i + 1..*n_people {
                        if (pair_gap(x, i, j) - 2.0 * r).abs() <= ACTIVE_TOL {
                            tags.push(ActiveTag::Pair(i, j));
                        }
                    }
                }
            }
        }
        if tags.is_empty() {
            tags.push(ActiveTag::None);
        }
        tags
    }

    pub fn is_boundary_point(&self, t: f64, x: &StateVector) -> bool {
        self.contains_slice(t, x.as_slice()) && self.active_tags(t, x) != [ActiveTag::None]
    }

    /// The two points where the ball boundary meets the ellipse, `(p, ±q)`.
    pub fn corner_points(&self, t: f64) -> Result<(StateVector, StateVector)> {
        match self {
            Self::EllipseExteriorBall { profile } => {
                let (p, q) = corner(profile.value(t))?;
                Ok((StateVector::xy(p, q), StateVector::xy(p, -q)))
            }
            _ => Err(Error::Unsupported("corner points outside the ellipse-ball set")),
        }
    }

    /// A global nearest point of `C(t)` to `z`.
    pub fn project(&self, t: f64, z: &StateVector) -> Result<ProjectionResult> {
        z.check_dim(self.dim())?;
        if self.contains_slice(t, z.as_slice()) {
            return Ok(ProjectionResult {
                point: z.clone(),
                distance: 0.0,
                active: self.active_tags(t, z),
                unique: true,
            });
        }
        let eta = self.claimed_eta();
        let (point, tie) = match self {
            Self::Ball { radius, .. } => {
                let c = self.ball_center_at(t).expect("ball");
                let dir = (z - &c)
                    .normalized()
                    .ok_or_else(|| Error::Internal("non-member at the ball centre".into()))?;
                (c.axpy(*radius, &dir), false)
            }
            Self::EllipseExteriorBall { profile } => project_ellipse_ball(profile.value(t), z)?,
            Self::CrowdDisks { n_people: 2, r, .. } => (project_pair(z.as_slice(), *r)?, false),
            Self::CrowdDisks { n_people, r, .. } => {
                let p = project_crowd_cyclic(z.as_slice(), *n_people, *r)?;
                // Cyclic projection is feasible but not certified nearest.
                (p, true)
            }
        };
        let distance = z.dist(&point);
        Ok(ProjectionResult {
            active: self.active_tags(t, &point),
            unique: !tie && eta.within_tube(distance),
            point,
            distance,
        })
    }

    /// Axis-aligned box containing `C(t)` (or the estimator box for crowds).
    pub fn bounding_box(&self, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Ball { radius, .. } => {
                let c = self.ball_center_at(t)?;
                Some((
                    c.as_slice().iter().map(|v| v - radius).collect(),
                    c.as_slice().iter().map(|v| v + radius).collect(),
                ))
            }
            Self::EllipseExteriorBall { .. } => Some((
                vec![BALL_CENTER[0] - BALL_RADIUS, BALL_CENTER[1] - BALL_RADIUS],
                vec![BALL_CENTER[0] + BALL_RADIUS, BALL_CENTER[1] + BALL_RADIUS],
            )),
            Self::CrowdDisks {
                n_people, box_bound, ..
            } => box_bound.map(|bb| (vec![-bb; 2 * n_people], vec![bb; 2 * n_people])),
        }
    }

    /// Points on `∂C(t)`.
    ///
    /// Planar balls and the ellipse-ball set are sampled deterministically
    /// (the ellipse-ball set splits samples evenly between the elliptic arc
    /// and the ball arc, both including the corners). Crowd boundaries are
    /// sampled at random inside the estimator box.
    pub fn boundary_samples<R: Rng>(&self, t: f64, n: usize, rng: &mut R) -> Result<Vec<StateVector>> {
        if n < 2 {
            return Err(Error::InvalidParameter("need at least 2 boundary samples".into()));
        }
        match self {
            Self::Ball { radius, .. } => {
                if self.dim() != 2 {
                    return Err(Error::Unsupported("boundary sampling of non-planar balls"));
                }
                let c = self.ball_center_at(t).expect("ball");
                Ok((0..n)
                    .map(|k| {
                        let th = TAU * k as f64 / n as f64;
                        StateVector::xy(c[0] + radius * th.cos(), c[1] + radius * th.sin())
                    })
                    .collect())
            }
            Self::EllipseExteriorBall { profile } => {
                let b = profile.value(t);
                let (p, q) = corner(b)?;
                let n_arc = n / 2;
                let n_ball = n - n_arc;
                let phi0 = (q / b).asin();
                let theta_c = q.atan2(p - BALL_CENTER[0]);
                let mut out = Vec::with_capacity(n);
                for k in 0..n_arc {
                    let phi = -phi0 + 2.0 * phi0 * k as f64 / (n_arc - 1).max(1) as f64;
                    let pt = if k == 0 {
                        [p, -q]
                    } else if k + 1 == n_arc {
                        [p, q]
                    } else {
                        [-phi.cos(), b * phi.sin()]
                    };
                    out.push(StateVector::xy(pt[0], pt[1]));
                }
                for k in 0..n_ball {
                    let th = theta_c + (TAU - 2.0 * theta_c) * k as f64 / (n_ball - 1).max(1) as f64;
                    let pt = if k == 0 {
                        [p, q]
                    } else if k + 1 == n_ball {
                        [p, -q]
                    } else {
                        [BALL_CENTER[0] + th.cos(), BALL_CENTER[1] + th.sin()]
                    };
                    out.push(StateVector::xy(pt[0], pt[1]));
                }
                Ok(out)
            }
            Self::CrowdDisks {
                n_people: 2,
                r,
                box_bound,
            } => {
                let bb = box_bound.ok_or(Error::Unsupported("crowd sampling without a box bound"))?;
                Ok((0..n)
                    .map(|_| {
                        let mx = rng.random_range(-bb + r..=bb - r);
                        let my = rng.random_range(-bb + r..=bb - r);
                        let th = rng.random_range(0.0..TAU);
                        let (s, c) = th.sin_cos();
                        StateVector::from_slice(&[mx + r * c, my + r * s, mx - r * c, my - r * s])
                    })
                    .collect())
            }
            Self::CrowdDisks { .. } => Err(Error::Unsupported("boundary sampling of crowds with n > 2")),
        }
    }

    /// Members of `C(t)` drawn uniformly from the bounding box by rejection.
    pub fn sample_members<R: Rng>(&self, t: f64, n: usize, rng: &mut R) -> Result<Vec<StateVector>> {
        let (lo, hi) = self
            .bounding_box(t)
            .ok_or(Error::Unsupported("member sampling of an unbounded set"))?;
        let mut out = Vec::with_capacity(n);
        let mut x = vec![0.0; lo.len()];
        let mut attempts = 0usize;
        while out.len() < n {
            attempts += 1;
            if attempts > 1000 * n + 10_000 {
                return Err(Error::Internal("member rejection sampling stalled".into()));
            }
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = rng.random_range(lo[i]..=hi[i]);
            }
            if self.contains_slice(t, &x) {
                out.push(StateVector::from_vec_unchecked(x.clone()));
            }
        }
        Ok(out)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
    }
}

#[inline]
pub(crate) fn pair_gap(x: &[f64], i: usize, j: usize) -> f64 {
    (x[2 * i] - x[2 * j]).hypot(x[2 * i + 1] - x[2 * j + 1])
}

/// Candidate enumeration for the ellipse-ball set. Returns the chosen point
/// and whether another candidate tied with it.
fn project_ellipse_ball(b: f64, z: &StateVector) -> Result<(StateVector, bool)> {
    let zs = [z[0], z[1]];
    let (p, q) = corner(b)?;
    let mut cands: Vec<[f64; 2]> = vec![[p, q], [p, -q]];

    let dx = zs[0] - BALL_CENTER[0];
    let dy = zs[1] - BALL_CENTER[1];
    let r = dx.hypot(dy);
    if r > 0.0 {
        let pt = [BALL_CENTER[0] + dx / r, BALL_CENTER[1] + dy / r];
        if ellipse_level(b, &pt) >= 1.0 - MEMBERSHIP_TOL {
            cands.push(pt);
        }
    }

    let u_max = q / (b * -p);
    for u in arc_stationary_params(b, zs, u_max) {
        cands.push(left_arc_point(b, u));
    }

    let foot = ellipse_nearest_point(b, z)?;
    if ball_level(foot.point.as_slice()) <= 1.0 + MEMBERSHIP_TOL {
        cands.push([foot.point[0], foot.point[1]]);
    }

    let d = |c: &[f64; 2]| (c[0] - zs[0]).hypot(c[1] - zs[1]);
    let best = cands.iter().map(d).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Internal("empty projection candidate list".into()));
    }
    let mut tied: Vec<[f64; 2]> = cands.into_iter().filter(|c| d(c) <= best + 1e-12).collect();
    tied.sort_by(|a, c| a[0].total_cmp(&c[0]).then(a[1].total_cmp(&c[1])));
    let chosen = tied[0];
    let tie = tied.iter().any(|c| (c[0] - chosen[0]).hypot(c[1] - chosen[1]) > 1e-9);
    Ok((StateVector::xy(chosen[0], chosen[1]), tie))
}

/// Closed-form projection onto `{‖x₁ − x₂‖ ≥ 2r}` for two disks.
fn project_pair(z: &[f64], r: f64) -> Result<StateVector> {
    let mut x = z.to_vec();
    push_pair_apart(&mut x, 0, 1, r)?;
    Ok(StateVector::from_vec_unchecked(x))
}

/// Moves disks `i` and `j` symmetrically about their midpoint to distance 2r.
fn push_pair_apart(x: &mut [f64], i: usize, j: usize, r: f64) -> Result<()> {
    let dx = x[2 * i] - x[2 * j];
    let dy = x[2 * i + 1] - x[2 * j + 1];
    let gap = dx.hypot(dy);
    if gap < 1e-14 {
        return Err(Error::DegenerateDirection { i, j });
    }
    let (ux, uy) = (dx / gap, dy / gap);
    let mx = 0.5 * (x[2 * i] + x[2 * j]);
    let my = 0.5 * (x[2 * i + 1] + x[2 * j + 1]);
    x[2 * i] = mx + r * ux;
    x[2 * i + 1] = my + r * uy;
    x[2 * j] = mx - r * ux;
    x[2 * j + 1] = my - r * uy;
    Ok(())
}

fn project_crowd_cyclic(z: &[f64], n: usize, r: f64) -> Result<StateVector> {
    let mut x = z.to_vec();
    let mut worst = f64::INFINITY;
    for _ in 0..MAX_CYCLIC_SWEEPS {
        worst = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let v = 2.0 * r - pair_gap(&x, i, j);
                if v > MEMBERSHIP_TOL {
                    worst = f64::max(worst, v);
                    push_pair_apart(&mut x, i, j, r)?;
                }
            }
        }
        if worst == 0.0 {
            return Ok(StateVector::from_vec_unchecked(x));
        }
    }
    Err(Error::ProjectionNotConverged {
        sweeps: MAX_CYCLIC_SWEEPS,
        violation: worst,
    })
}
