//! Catching-up time stepping for `−ẋ ∈ N(C(t), x) + f(t, x)`:
//! `x⁺ = proj(x − h·f(t, x), C(t + h))`.

mod field;
mod trajectory;

use serde::Serialize;

pub use field::{FieldFn, FieldKind, VectorField};
pub use trajectory::{fmt17, parse_csv, CsvRow, Trajectory};

use crate::error::{Error, Result};
use crate::sets::{ActiveTag, MovingSet, ProjectionResult};
use crate::state::StateVector;

/// Fraction of the prox-regularity radius a free step may stray from the set.
pub const STEP_GUARD: f64 = 0.9;
/// Maximum number of local step halvings before integration gives up.
pub const MAX_HALVINGS: u32 = 6;

/// One catching-up step from `(t, x)` to `t + h`.
pub fn step(
    set: &MovingSet,
    field: &VectorField,
    t: f64,
    x: &StateVector,
    h: f64,
) -> Result<(StateVector, ProjectionResult)> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("step size must be > 0, got {h}")));
    }
    if !set.contains(t, x)? {
        return Err(Error::ContractViolation(format!("state {x} is not in C({t})")));
    }
    let free = x.axpy(-h, &field.eval(t, x)?);
    let proj = set.project(t + h, &free)?;
    if let Some(eta) = set.claimed_eta().finite() {
        let limit = STEP_GUARD * eta;
        if proj.distance >= limit {
            return Err(Error::StepTooLarge {
                t,
                distance: proj.distance,
                limit,
            });
        }
    }
    Ok((proj.point.clone(), proj))
}

/// Integrates from `(t0, x0)` to `t1` on the grid `t0 + k·h`.
///
/// The last step is shortened when `h` does not divide `t1 − t0`. A step
/// rejected by the guard is retried as two half steps, recursively up to
/// [`MAX_HALVINGS`] levels.
pub fn integrate(
    set: &MovingSet,
    field: &VectorField,
    t0: f64,
    x0: &StateVector,
    t1: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("step size must be > 0, got {h}")));
    }
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::InvalidParameter(format!("need t0 <= t1, got [{t0}, {t1}]")));
    }
    x0.check_dim(set.dim())?;
    if !set.contains(t0, x0)? {
        return Err(Error::ContractViolation(format!(
            "initial state {x0} is not in C({t0})"
        )));
    }

    let times = grid(t0, t1, h);
    let mut states = Vec::with_capacity(times.len());
    let mut residuals = Vec::with_capacity(times.len().saturating_sub(1));
    let mut projection_flags = Vec::with_capacity(times.len());
    projection_flags.push(set.active_tags(t0, x0));
    states.push(x0.clone());

    for w in times.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let hk = tb - ta;
        let x = states.last().expect("nonempty");
        let (next, tags) = advance(set, field, ta, x, hk, 0)?;
        let fx = field.eval(ta, x)?;
        let velocity = (&next - x).scale(1.0 / hk);
        residuals.push((&velocity + &fx).norm());
        projection_flags.push(tags);
        states.push(next);
    }

    Ok(Trajectory {
        t0,
        h,
        times,
        states,
        residuals,
        projection_flags,
    })
}

fn grid(t0: f64, t1: f64, h: f64) -> Vec<f64> {
    let span = t1 - t0;
    let n = (span / h).round();
    if (n * h - span).abs() <= 1e-12 * span.abs().max(1.0) {
        let n = n as usize;
        let mut times: Vec<f64> = (0..n).map(|k| t0 + k as f64 * h).collect();
        times.push(t1);
        times
    } else {
        let n = (span / h).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * h).collect();
        times.push(t1);
        times
    }
}

fn advance(
    set: &MovingSet,
    field: &VectorField,
    t: f64,
    x: &StateVector,
    h: f64,
    depth: u32,
) -> Result<(StateVector, Vec<ActiveTag>)> {
    match step(set, field, t, x, h) {
        Ok((next, proj)) => Ok((next, proj.active)),
        Err(Error::StepTooLarge { .. }) if depth < MAX_HALVINGS => {
            let half = 0.5 * h;
            let (mid, _) = advance(set, field, t, x, half, depth + 1)?;
            advance(set, field, t + half, &mid, half, depth + 1)
        }
        Err(Error::StepTooLarge { .. }) => Err(Error::IntegrationFailure { t }),
        Err(e) => Err(e),
    }
}

/// Largest discrete velocity residual of a run, compared with `M_f + L_C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityBound {
    pub max_residual: f64,
    /// `M_f + L_C` used for the comparison.
    pub bound: f64,
    /// Smallest `K ≥ 0` with `max_residual ≤ bound + K·h`.
    pub k: f64,
}

/// Maximum recorded residual and the scheme constant `K`.
///
/// `M_f` comes from the field when declared and is otherwise sampled over
/// the set; `L_C` is the set's claimed constant.
pub fn discrete_velocity_bound(traj: &Trajectory, field: &VectorField, set: &MovingSet) -> Result<VelocityBound> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let m_f = match field.bound_mf {
        Some(m) => m,
        None => crate::analysis::estimate_m_f(field, set, 16, 4000, crate::rng::DEFAULT_SEED)?,
    };
    let bound = m_f + set.claimed_lipschitz();
    let max_residual = traj.residuals.iter().cloned().fold(0.0, f64::max);
    Ok(VelocityBound {
        max_residual,
        bound,
        k: ((max_residual - bound) / traj.h).max(0.0),
    })
}
