//! Planar primitives for the ellipse `x² + y²/b² = 1` (b ≥ 1) and its
//! intersection with the fixed unit ball centred at (−1.5, 0).

use crate::error::{Error, Result};
use crate::state::StateVector;

pub const BALL_CENTER: [f64; 2] = [-1.5, 0.0];
pub const BALL_RADIUS: f64 = 1.0;

/// Nearest point on the full ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipseFoot {
    pub point: StateVector,
    /// False when the query has two symmetric minimizers.
    pub unique: bool,
}

/// `x² + y²/b²`
#[inline]
pub(crate) fn ellipse_level(b: f64, x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1] / (b * b)
}

#[inline]
pub(crate) fn ball_level(x: &[f64]) -> f64 {
    let dx = x[0] - BALL_CENTER[0];
    let dy = x[1] - BALL_CENTER[1];
    dx * dx + dy * dy
}

/// Point on the left half of the ellipse at parameter `u = tan φ`,
/// i.e. `(−cos φ, b sin φ)`.
#[inline]
pub(crate) fn left_arc_point(b: f64, u: f64) -> [f64; 2] {
    let c = 1.0 / (1.0 + u * u).sqrt();
    [-c, b * u * c]
}

/// Nearest point on the ellipse `x² + y²/b² = 1` via a bracketed Newton
/// iteration on the Lagrange multiplier equation
///
/// `F(μ) = z₁²/(1+μ)² + b²z₂²/(b²+μ)² − 1 = 0`,
///
/// whose unique root on (−1, ∞) gives the global minimizer
/// `x = (z₁/(1+μ), b²z₂/(b²+μ))`. Queries with `z₁ = 0` are handled in
/// closed form; symmetric ties resolve to the negative-x candidate.
pub fn ellipse_nearest_point(b: f64, z: &StateVector) -> Result<EllipseFoot> {
    if !(b.is_finite() && b >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ellipse semi-axis must be >= 1, got {b}"
        )));
    }
    z.check_dim(2)?;
    let (z1, z2) = (z[0], z[1]);
    let b2 = b * b;

    if z1 == 0.0 {
        if b2 - 1.0 <= b * z2.abs() && z2 != 0.0 {
            let y = b * z2.signum();
            return Ok(EllipseFoot {
                point: StateVector::xy(0.0, y),
                unique: true,
            });
        }
        // μ = −1: the two minimizers (±x, y) are mirror images.
        let y = if b2 > 1.0 { z2 * b2 / (b2 - 1.0) } else { 0.0 };
        let x = -(1.0 - y * y / b2).max(0.0).sqrt();
        return Ok(EllipseFoot {
            point: StateVector::xy(x, y),
            unique: false,
        });
    }

    let f = |mu: f64| {
        let a = z1 / (1.0 + mu);
        let c = b * z2 / (b2 + mu);
        a * a + c * c - 1.0
    };
    let df = |mu: f64| {
        let s = 1.0 + mu;
        let w = b2 + mu;
        -2.0 * z1 * z1 / (s * s * s) - 2.0 * b2 * z2 * z2 / (w * w * w)
    };

    // F → +∞ as μ → −1⁺ and F → −1 as μ → ∞.
    let mut lo = -1.0;
    let mut hi = (z1.abs() + b * z2.abs()).max(1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fm = f(mu);
        if fm == 0.0 {
            break;
        }
        if fm > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let d = df(mu);
        let newton = mu - fm / d;
        mu = if d < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + mu.abs()) {
            break;
        }
    }
    let x = z1 / (1.0 + mu);
    let y = b2 * z2 / (b2 + mu);
    // Radial rescale puts the point on the curve to round-off.
    let s = ellipse_level(b, &[x, y]).sqrt();
    Ok(EllipseFoot {
        point: StateVector::xy(x / s, y / s),
        unique: true,
    })
}

/// Intersection of the ball boundary with the ellipse: returns `(p, q)`
/// with `q ≥ 0`. Eliminating q² gives `(b²−1)p² − 3p − (1.25 + b²) = 0`;
/// the negative root is evaluated in the cancellation-free form.
pub fn corner(b: f64) -> Result<(f64, f64)> {
    if !(b.is_finite() && b >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ellipse semi-axis must be >= 1, got {b}"
        )));
    }
    let b2 = b * b;
    let disc = 9.0 + 4.0 * (b2 - 1.0) * (1.25 + b2);
    if disc < 0.0 {
        return Err(Error::Internal(format!("negative corner discriminant {disc}")));
    }
    let mut p = -2.0 * (1.25 + b2) / (3.0 + disc.sqrt());
    let mut q = (1.0 - (p + 1.5) * (p + 1.5)).max(0.0).sqrt();

    // Newton polish on both defining equations.
    for _ in 0..3 {
        let r1 = (p + 1.5) * (p + 1.5) + q * q - 1.0;
        let r2 = p * p + q * q / b2 - 1.0;
        if r1.abs().max(r2.abs()) <= 1e-15 {
            break;
        }
        let (a11, a12, a21, a22) = (2.0 * (p + 1.5), 2.0 * q, 2.0 * p, 2.0 * q / b2);
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 {
            break;
        }
        p -= (a22 * r1 - a12 * r2) / det;
        q -= (a11 * r2 - a21 * r1) / det;
    }
    Ok((p, q))
}

/// Parameters `u = tan φ ∈ [−u_max, u_max]` of the stationary points of
/// `φ ↦ ‖z − (−cos φ, b sin φ)‖²` on the left arc. With `u = tan φ` the
/// stationarity condition reads
///
/// `h(u) = (b²−1)·u/√(1+u²) − z₁u − b z₂ = 0`,
///
/// and `h` is monotone between the closed-form critical points
/// `±√(((b²−1)/z₁)^{2/3} − 1)`, so every root is bracketed.
pub(crate) fn arc_stationary_params(b: f64, z: [f64; 2], u_max: f64) -> Vec<f64> {
    let k = b * b - 1.0;
    let (z1, z2) = (z[0], z[1]);
    let h = |u: f64| k * u / (1.0 + u * u).sqrt() - z1 * u - b * z2;

    let mut knots = vec![-u_max];
    if z1 > 0.0 && k > z1 {
        let us = ((k / z1).powf(2.0 / 3.0) - 1.0).max(0.0).sqrt();
        if us < u_max {
            knots.push(-us);
            if us > 0.0 {
                knots.push(us);
            }
        }
    }
    if z2 == 0.0 && !knots.contains(&0.0) {
        // h(0) = 0 exactly; keep the root exact instead of bisecting to it.
        knots.push(0.0);
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    knots.push(u_max);

    let mut roots: Vec<f64> = Vec::new();
    let mut push = |u: f64| {
        if !roots.contains(&u) {
            roots.push(u);
        }
    };
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut flo, fhi) = (h(lo), h(hi));
        if flo == 0.0 {
            push(lo);
        }
        if fhi == 0.0 {
            push(hi);
        }
        if flo * fhi >= 0.0 {
            continue;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = h(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        push(if h(lo).abs() <= h(hi).abs() { lo } else { hi });
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_nearest(b: f64, z: [f64; 2]) -> [f64; 2] {
        // Dense angle sweep followed by golden refinement on the best bracket.
        let n = 200_000;
        let pt = |th: f64| [th.cos(), b * th.sin()];
        let d = |th: f64| {
            let p = pt(th);
            (p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2)
        };
        let step = std::f64::consts::TAU / n as f64;
        let best = (0..n)
            .map(|k| k as f64 * step)
            .min_by(|a, c| d(*a).partial_cmp(&d(*c)).unwrap())
            .unwrap();
        let (mut lo, mut hi) = (best - step, best + step);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if d(m1) < d(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        pt(0.5 * (lo + hi))
    }

    #[test]
    fn nearest_point_examples() {
        let f = ellipse_nearest_point(2.0, &StateVector::xy(-0.5, 0.0)).unwrap();
        assert_eq!(f.point, StateVector::xy(-1.0, 0.0));
        assert!(f.unique);

        let f = ellipse_nearest_point(2.0, &StateVector::xy(0.0, 3.0)).unwrap();
        assert_eq!(f.point, StateVector::xy(0.0, 2.0));

        let f = ellipse_nearest_point(2.0, &StateVector::xy(-0.3, 0.5)).unwrap();
        let oracle = brute_force_nearest(2.0, [-0.3, 0.5]);
        assert!((f.point[0] - oracle[0]).abs() < 1e-7, "{} vs {:?}", f.point, oracle);
        assert!((f.point[1] - oracle[1]).abs() < 1e-7);
        assert!((f.point[0] + 0.9536).abs() < 5e-4 && (f.point[1] - 0.6034).abs() < 5e-4);
    }

    #[test]
    fn center_tie_break() {
        let f = ellipse_nearest_point(2.0, &StateVector::xy(0.0, 0.0)).unwrap();
        assert_eq!(f.point, StateVector::xy(-1.0, 0.0));
        assert!(!f.unique);
        let f = ellipse_nearest_point(1.0, &StateVector::xy(0.0, 0.0)).unwrap();
        assert!(!f.unique);
    }

    #[test]
    fn nearest_point_residuals_and_optimality() {
        let mut seed = 17u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0
        };
        for &b in &[1.0, 1.3, 2.0, 3.5] {
            for _ in 0..300 {
                let z = [next(), next()];
                let f = ellipse_nearest_point(b, &StateVector::xy(z[0], z[1])).unwrap();
                let p = f.point.as_slice();
                assert!((ellipse_level(b, p) - 1.0).abs() < 1e-12);
                // first-order optimality: z − x parallel to the normal (x, y/b²)
                let (nx, ny) = (p[0], p[1] / (b * b));
                let (rx, ry) = (z[0] - p[0], z[1] - p[1]);
                let cross = (rx * ny - ry * nx) / (nx.hypot(ny) * (1.0 + rx.hypot(ry)));
                assert!(cross.abs() < 1e-10, "b={b} z={z:?} cross={cross}");
                let oracle = brute_force_nearest(b, z);
                let d = |q: &[f64]| (q[0] - z[0]).hypot(q[1] - z[1]);
                assert!(d(p) <= d(&oracle) + 1e-9, "b={b} z={z:?}");
            }
        }
    }

    #[test]
    fn corner_examples() {
        let (p, q) = corner(2.0).unwrap();
        assert!((p - (1.0 - 8f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((p + 0.914214).abs() < 1e-6 && (q - 0.810465).abs() < 1e-6);

        let (p, q) = corner(1.0).unwrap();
        assert!((p + 0.75).abs() < 1e-15);
        assert!((q - (1.0f64 - 0.5625).sqrt()).abs() < 1e-15);
        assert!((q - 0.661438).abs() < 1e-6);
    }

    #[test]
    fn corner_moves_left_as_b_grows() {
        let ps: Vec<f64> = [1.0, 2.0, 4.0, 8.0].iter().map(|&b| corner(b).unwrap().0).collect();
        for w in ps.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(ps.iter().all(|&p| (-1.0..=-0.75).contains(&p)));
    }

    #[test]
    fn corner_residuals_over_range() {
        for k in 0..100 {
            let b = 1.0 + 7.0 * k as f64 / 99.0;
            let (p, q) = corner(b).unwrap();
            assert!(q >= 0.0);
            assert!(((p + 1.5).powi(2) + q * q - 1.0).abs() <= 1e-12);
            assert!((p * p + q * q / (b * b) - 1.0).abs() <= 1e-12);
            assert!((-1.0..=-0.75).contains(&p));
        }
    }

    #[test]
    fn arc_stationary_points_are_critical() {
        for &(b, z) in &[
            (2.0, [0.5, 0.0]),
            (2.0, [-0.3, 0.5]),
            (3.0, [0.4, 0.05]),
            (1.5, [-2.0, 0.3]),
        ] {
            let (p, q) = corner(b).unwrap();
            let umax = q / (b * -p);
            for u in arc_stationary_params(b, z, umax) {
                assert!(u.abs() <= umax);
                let phi = u.atan();
                let (s, c) = phi.sin_cos();
                let g = (b * b - 1.0) * s * c - z[0] * s - b * z[1] * c;
                assert!(g.abs() < 1e-12, "b={b} z={z:?} u={u} g={g}");
            }
        }
        // interior x-axis point right of the arc: the vertex is the only critical point
        assert_eq!(arc_stationary_params(2.0, [0.5, 0.0], 0.44), vec![0.0]);
    }
}
