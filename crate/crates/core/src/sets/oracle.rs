//! Brute-force nearest-point oracle. It only ever calls membership, so it
//! shares no code path with the analytic projections it is used to check.

use std::f64::consts::{PI, TAU};

use super::{MovingSet, ProjectionResult};
use crate::error::{Error, Result};
use crate::state::StateVector;

const MAX_SEEDS: usize = 8;
const BISECTIONS: usize = 64;

/// Brute-force projection onto `C(t)` using membership tests only.
///
/// Every direction `u` from `z` defines the first-hit distance `r(u)`: the
/// smallest `ρ` with `z + ρu` a member, found by marching along the ray in
/// steps of `resolution` up to the far corner of the bounding box (the ball
/// for the ellipse-ball set, the configuration box for a pair of disks)
/// and bisecting the entry interval. The distance to the set is the
/// minimum of `r` over directions. Directions are scanned on a
/// hyperspherical angle grid of spacing `resolution`; up to eight
/// well-separated best directions then seed `refine_iters` rounds of a
/// local angle-grid search, re-centred on every improvement and shrunk
/// when a round brings none.
pub fn project_oracle(
    set: &MovingSet,
    t: f64,
    z: &StateVector,
    resolution: f64,
    refine_iters: usize,
) -> Result<ProjectionResult> {
    z.check_dim(set.dim())?;
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "resolution must be > 0, got {resolution}"
        )));
    }
    let (lo, hi) = match set {
        MovingSet::EllipseExteriorBall { .. } | MovingSet::CrowdDisks { n_people: 2, .. } => set
            .bounding_box(t)
            .ok_or(Error::Unsupported("oracle without a configuration box"))?,
        _ => return Err(Error::Unsupported("oracle projection for this set")),
    };
    let zs = z.as_slice();
    let member = |x: &[f64]| set.contains_slice(t, x);

    let point = if member(zs) {
        zs.to_vec()
    } else {
        let dim = zs.len();
        let reach = far_corner_distance(zs, &lo, &hi);
        let ray = Ray {
            z: zs,
            reach,
            step: resolution,
            member: &member,
        };

        // angles a_1..a_{d-2} in [0, π], the last one periodic in [0, 2π)
        let n_angles = dim - 1;
        let mut counts = Vec::with_capacity(n_angles);
        let mut steps = Vec::with_capacity(n_angles);
        for k in 0..n_angles {
            let span = if k + 1 == n_angles { TAU } else { PI };
            let n = (span / resolution).ceil().max(4.0) as usize;
            if k + 1 == n_angles {
                counts.push(n);
                steps.push(span / n as f64);
            } else {
                counts.push(n + 1);
                steps.push(span / n as f64);
            }
        }
        let origin = vec![0.0; n_angles];
        // directions much worse than the best so far cannot seed the minimum
        let mut best = f64::INFINITY;
        let mut scanned: Vec<(f64, Vec<f64>)> = Vec::new();
        for_each_grid_point(&origin, &steps, &counts, |a| {
            let r = ray.first_hit(&direction(a, dim), 1.5 * best + 2.0 * resolution);
            if r.is_finite() {
                best = best.min(r);
                scanned.push((r, a.to_vec()));
            }
        });
        if scanned.is_empty() {
            return Err(Error::ResolutionTooCoarse);
        }
        scanned.sort_by(|a, b| a.0.total_cmp(&b.0));
        let max_step = steps.iter().cloned().fold(0.0, f64::max);
        let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
        for (r, a) in scanned {
            if seeds.len() == MAX_SEEDS {
                break;
            }
            let u = direction(&a, dim);
            if seeds
                .iter()
                .all(|(_, s)| crate::state::dist_slices(&direction(s, dim), &u) >= 3.0 * max_step)
            {
                seeds.push((r, a));
            }
        }

        let (r, a) = seeds
            .into_iter()
            .map(|(r, a)| {
                refine(a, r, 2.0 * max_step, refine_iters, &|a: &[f64], cap: f64| {
                    ray.first_hit(&direction(a, dim), cap)
                })
            })
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .expect("at least one seed");
        let u = direction(&a, dim);
        ray.hit_point(&u, r)
    };

    let point = StateVector::from_vec_unchecked(point);
    let distance = z.dist(&point);
    Ok(ProjectionResult {
        active: set.active_tags(t, &point),
        unique: set.claimed_eta().within_tube(distance),
        point,
        distance,
    })
}

fn far_corner_distance(z: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    z.iter()
        .zip(lo.iter().zip(hi))
        .map(|(c, (a, b))| (c - a).abs().max((c - b).abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Unit vector with hyperspherical angles `a`.
fn direction(a: &[f64], dim: usize) -> Vec<f64> {
    let mut u = vec![0.0; dim];
    let mut sin_prod = 1.0;
    for (k, ak) in a.iter().enumerate() {
        let (s, c) = ak.sin_cos();
        u[k] = sin_prod * c;
        sin_prod *= s;
    }
    u[dim - 1] = sin_prod;
    u
}

struct Ray<'a, M: Fn(&[f64]) -> bool> {
    z: &'a [f64],
    reach: f64,
    step: f64,
    member: &'a M,
}

impl<M: Fn(&[f64]) -> bool> Ray<'_, M> {
    fn at(&self, u: &[f64], rho: f64) -> Vec<f64> {
        self.z.iter().zip(u).map(|(z, u)| z + rho * u).collect()
    }

    /// Smallest member distance along `u` not beyond `cap`, or `∞`.
    fn first_hit(&self, u: &[f64], cap: f64) -> f64 {
        let limit = self.reach.min(cap);
        let mut p = vec![0.0; u.len()];
        let mut member_at = |rho: f64| {
            for ((p, z), u) in p.iter_mut().zip(self.z).zip(u) {
                *p = z + rho * u;
            }
            (self.member)(&p)
        };
        let n = (limit / self.step).ceil() as usize;
        let mut prev = 0.0;
        for k in 1..=n {
            let rho = (k as f64 * self.step).min(limit);
            if member_at(rho) {
                let (mut a, mut b) = (prev, rho);
                for _ in 0..BISECTIONS {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if member_at(mid) {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                return b;
            }
            prev = rho;
        }
        f64::INFINITY
    }

    fn hit_point(&self, u: &[f64], r: f64) -> Vec<f64> {
        self.at(u, r)
    }
}

/// Local grid search in angle space around `a`.
fn refine(
    mut a: Vec<f64>,
    mut best: f64,
    mut half_width: f64,
    iters: usize,
    objective: &impl Fn(&[f64], f64) -> f64,
) -> (f64, Vec<f64>) {
    let n = a.len();
    let per_axis = if n <= 1 { 21usize } else { 5usize };
    let shrink = if n <= 1 { 0.25 } else { 0.5 };
    let counts = vec![per_axis; n];
    for _ in 0..iters {
        if half_width < 1e-15 {
            break;
        }
        let origin: Vec<f64> = a.iter().map(|c| c - half_width).collect();
        let steps = vec![2.0 * half_width / (per_axis - 1) as f64; n];
        let mut improved = false;
        let mut next = a.clone();
        for_each_grid_point(&origin, &steps, &counts, |p| {
            let r = objective(p, best);
            if r < best {
                best = r;
                improved = true;
                next.copy_from_slice(p);
            }
        });
        a = next;
        if !improved {
            half_width *= shrink;
        }
    }
    (best, a)
}

/// Calls `visit` on every point `origin + i·steps` with `i < counts`.
fn for_each_grid_point(origin: &[f64], steps: &[f64], counts: &[usize], mut visit: impl FnMut(&[f64])) {
    let n = origin.len();
    if counts.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; n];
    let mut p = origin.to_vec();
    loop {
        visit(&p);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                p[k] = origin[k] + idx[k] as f64 * steps[k];
                break;
            }
            idx[k] = 0;
            p[k] = origin[k];
            k += 1;
        }
    }
}
