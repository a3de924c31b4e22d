use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::sets::{proximal_normals, MovingSet, Periodicity, BALL_CENTER, BALL_RADIUS};
use crate::state::{dist_slices, StateVector};
use crate::sweep::{FieldKind, VectorField};

/// Member candidates tested per external ball.
pub const EMPTINESS_SAMPLES: usize = 10_000;
/// Normal length used only to validate directions in [`estimate_eta`].
const PROBE_NORM: f64 = 1e-3;

/// Sampled prox-regularity radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaEstimate {
    /// Min over boundary points of the largest tested radius that passed.
    pub value: f64,
    /// Every tested point passed every radius (convex-like behaviour).
    pub saturated: bool,
    /// Boundary points without a validated normal.
    pub skipped: usize,
    pub worst_point: Option<StateVector>,
}

/// Estimates η by external-ball emptiness tests.
///
/// For each sampled boundary point `x` and validated unit normal `v`, the
/// ball `B(x + s·v, s)` is tested for members of `C(t)` strictly inside it,
/// other than `x`. Candidates are 10⁴ points: half uniform in the test
/// ball, half uniform in `B(x, s/4)` to resolve the thin lens near `x`,
/// together with the boundary samples themselves. Tangent balls along a
/// normal are nested, so the largest passing radius is found by bisection
/// over the sorted `radii`. Radii that fail already at the smallest entry
/// give 0.
pub fn estimate_eta(set: &MovingSet, t: f64, n_points: usize, radii: &[f64], seed: u64) -> Result<EtaEstimate> {
    let mut radii: Vec<f64> = radii.to_vec();
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive and finite".into()));
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();

    let mut rng = seeded(seed);
    let dim = set.dim();
    let pool = set.boundary_samples(t, n_points, &mut rng)?;
    let unit: Vec<Vec<f64>> = (0..EMPTINESS_SAMPLES).map(|_| unit_ball_point(dim, &mut rng)).collect();

    let mut value = f64::INFINITY;
    let mut worst_point = None;
    let mut skipped = 0;
    let max_radius = *radii.last().expect("nonempty");
    for x in &pool {
        let normals = proximal_normals(set, t, x, PROBE_NORM)?;
        if normals.samples.is_empty() {
            skipped += 1;
            continue;
        }
        for n in &normals.samples {
            let passes = |s: f64| ball_is_empty(set, t, x, &n.direction, s, &unit, &pool);
            // bisection for the last passing index
            let (mut lo, mut hi) = (0usize, radii.len());
            while lo < hi {
                let mid = (lo + hi) / 2;
                if passes(radii[mid]) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            let r = if lo == 0 { 0.0 } else { radii[lo - 1] };
            if r < value {
                value = r;
                worst_point = Some(x.clone());
            }
        }
    }
    if !value.is_finite() {
        return Err(Error::Internal("no boundary point had a validated normal".into()));
    }
    Ok(EtaEstimate {
        value,
        saturated: value == max_radius,
        skipped,
        worst_point,
    })
}

fn unit_ball_point<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / dim as f64);
            return g.into_iter().map(|v| v * radius / norm).collect();
        }
    }
}

fn ball_is_empty(
    set: &MovingSet,
    t: f64,
    x: &StateVector,
    v: &StateVector,
    s: f64,
    unit: &[Vec<f64>],
    pool: &[StateVector],
) -> bool {
    let c = x.axpy(s, v);
    let (xs, cs) = (x.as_slice(), c.as_slice());
    let inner = s * (1.0 - 1e-9);
    let exclude = 1e-9 * (1.0 + s);
    let intrudes = |y: &[f64]| dist_slices(y, cs) < inner && dist_slices(y, xs) > exclude && set.contains_slice(t, y);

    let half = unit.len() / 2;
    let mut y = vec![0.0; xs.len()];
    for (k, u) in unit.iter().enumerate() {
        let (origin, scale) = if k < half { (cs, s) } else { (xs, 0.25 * s) };
        for i in 0..y.len() {
            y[i] = origin[i] + scale * u[i];
        }
        if intrudes(&y) {
            return false;
        }
    }
    !pool.iter().any(|p| intrudes(p.as_slice()))
}

/// Bound `M_f` on `‖f(t, x)‖` over the constraint region.
///
/// Linear fields on the ellipse-ball set use the exact value `2.5α`; other
/// cases take the maximum over sampled members and the members among the
/// bounding-box corners, at `t_samples` times spread over one period.
pub fn estimate_m_f(
    field: &VectorField,
    set: &MovingSet,
    t_samples: usize,
    x_samples: usize,
    seed: u64,
) -> Result<f64> {
    if let (FieldKind::Linear, MovingSet::EllipseExteriorBall { .. }) = (field.kind(), set) {
        return Ok((BALL_RADIUS - BALL_CENTER[0]) * field.alpha);
    }
    let (lo, hi) = set
        .bounding_box(0.0)
        .ok_or(Error::Unsupported("M_f over an unbounded set without a box bound"))?;
    let window = match (set.periodicity(), field.periodicity()) {
        (Periodicity::Periodic(p), _) | (_, Periodicity::Periodic(p)) => p,
        _ => 1.0,
    };
    let mut rng = seeded(seed);
    let t_samples = t_samples.max(1);
    let mut best: f64 = 0.0;
    for k in 0..t_samples {
        let t = window * k as f64 / t_samples as f64;
        for x in set.sample_members(t, x_samples, &mut rng)? {
            best = best.max(field.eval(t, &x)?.norm());
        }
        let dim = lo.len();
        if dim <= 16 {
            for mask in 0..(1usize << dim) {
                let corner: Vec<f64> = (0..dim)
                    .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                    .collect();
                if set.contains_slice(t, &corner) {
                    let x = StateVector::from_vec_unchecked(corner);
                    best = best.max(field.eval(t, &x)?.norm());
                }
            }
        }
    }
    Ok(best)
}

/// Strong monotonicity constant over `domain_box`, as the smallest
/// quotient `⟨f(t,x₁) − f(t,x₂), x₁ − x₂⟩ / ‖x₁ − x₂‖²` on seeded pairs.
/// Built-in fields return their exact constant.
pub fn estimate_alpha(field: &VectorField, n_pairs: usize, domain_box: (&[f64], &[f64]), seed: u64) -> Result<f64> {
    match field.kind() {
        FieldKind::Linear | FieldKind::CrowdSpontaneous => return Ok(field.alpha),
        FieldKind::Custom { .. } => {}
    }
    let (lo, hi) = domain_box;
    if lo.is_empty()
        || lo.len() != hi.len()
        || lo
            .iter()
            .zip(hi)
            .any(|(a, b)| a.partial_cmp(b) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidParameter(
            "domain box must be nonempty with lo < hi".into(),
        ));
    }
    let window = match field.periodicity() {
        Periodicity::Periodic(p) => p,
        _ => 1.0,
    };
    let mut rng = seeded(seed);
    let draw = |rng: &mut crate::rng::SeededRng| {
        StateVector::from_vec_unchecked(lo.iter().zip(hi).map(|(a, b)| rng.random_range(*a..*b)).collect())
    };
    let mut best = f64::INFINITY;
    for _ in 0..n_pairs {
        let t = rng.random_range(0.0..window);
        let x1 = draw(&mut rng);
        let x2 = draw(&mut rng);
        let d = &x1 - &x2;
        let nsq = d.norm_sq();
        if nsq == 0.0 {
            continue;
        }
        let df = &field.eval(t, &x1)? - &field.eval(t, &x2)?;
        best = best.min(df.dot(&d) / nsq);
    }
    if !best.is_finite() {
        return Err(Error::InvalidParameter("no usable pairs".into()));
    }
    Ok(best)
}
