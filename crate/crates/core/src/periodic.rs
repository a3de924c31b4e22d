//! Period-map fixed points and the pullback approximation of the global
//! solution.

use serde::Serialize;

use crate::analysis::certificate;
use crate::error::{Error, Result};
use crate::sets::MovingSet;
use crate::state::StateVector;
use crate::sweep::{integrate, Trajectory, VectorField};

/// Consecutive expanding iterations that stop the Picard loop.
const DIVERGENCE_RUN: usize = 2;

fn check_period(set: &MovingSet, field: &VectorField, period: f64) -> Result<()> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidParameter(format!("period must be > 0, got {period}")));
    }
    if !set.periodicity().compatible_with(period) {
        return Err(Error::ContractViolation(format!(
            "set is not {period}-periodic ({:?})",
            set.periodicity()
        )));
    }
    if !field.periodicity().compatible_with(period) {
        return Err(Error::ContractViolation(format!(
            "field is not {period}-periodic ({:?})",
            field.periodicity()
        )));
    }
    Ok(())
}

/// `a ↦ x_a(T)`: the state at time `T` of the run started at `a` at time 0.
pub fn period_map(set: &MovingSet, field: &VectorField, period: f64, a: &StateVector, h: f64) -> Result<StateVector> {
    check_period(set, field, period)?;
    Ok(integrate(set, field, 0.0, a, period, h)?.last().clone())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbitResult {
    pub period: f64,
    pub h: f64,
    pub anchor: StateVector,
    /// `‖period_map(anchor) − anchor‖`.
    pub residual: f64,
    pub iterations: usize,
    /// `‖a_{k+1} − a_k‖` for every iteration.
    pub displacements: Vec<f64>,
    /// Ratios of successive displacements.
    pub contraction_factors: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PeriodicOrbitResult {
    pub fn mean_contraction_factor(&self) -> Option<f64> {
        let f = &self.contraction_factors;
        (!f.is_empty()).then(|| f.iter().sum::<f64>() / f.len() as f64)
    }

    pub fn max_contraction_factor(&self) -> Option<f64> {
        self.contraction_factors.iter().cloned().reduce(f64::max)
    }
}

/// Picard iteration `a_{k+1} = period_map(a_k)` until the displacement is
/// at most `tol`. The anchor is the last iterate; its residual costs one
/// extra period map.
pub fn find_periodic_orbit(
    set: &MovingSet,
    field: &VectorField,
    period: f64,
    a0: &StateVector,
    tol: f64,
    max_iter: usize,
    h: f64,
) -> Result<PeriodicOrbitResult> {
    check_period(set, field, period)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    if !set.contains(0.0, a0)? {
        return Err(Error::ContractViolation(format!("anchor seed {a0} is not in C(0)")));
    }
    let mut warnings = Vec::new();
    if let Some(w) = certificate_warning(set, field) {
        warnings.push(w);
    }

    let mut a = a0.clone();
    let mut displacements: Vec<f64> = Vec::new();
    let mut factors: Vec<f64> = Vec::new();
    let mut expanding = 0;
    for k in 1..=max_iter {
        let next = period_map(set, field, period, &a, h)?;
        let disp = next.dist(&a);
        if let Some(prev) = displacements.last() {
            if *prev > 0.0 {
                let factor = disp / prev;
                expanding = if factor > 1.0 { expanding + 1 } else { 0 };
                factors.push(factor);
            }
        }
        displacements.push(disp);
        a = next;
        if disp <= tol {
            let residual = period_map(set, field, period, &a, h)?.dist(&a);
            return Ok(PeriodicOrbitResult {
                period,
                h,
                anchor: a,
                residual,
                iterations: k,
                displacements,
                contraction_factors: factors,
                warnings,
            });
        }
        if expanding >= DIVERGENCE_RUN {
            return Err(Error::NotConverged {
                iterations: k,
                displacement: disp,
                diverging: true,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        displacement: displacements.last().copied().unwrap_or(f64::NAN),
        diverging: expanding > 0,
    })
}

fn certificate_warning(set: &MovingSet, field: &VectorField) -> Option<String> {
    let eta = set.claimed_eta().value()?;
    let m_f = field.bound_mf?;
    match certificate(field.alpha, set.claimed_lipschitz(), m_f, eta) {
        Ok(c) if c.applicable => None,
        Ok(c) => Some(format!(
            "stability certificate is not applicable (alpha_bar = {}); convergence is not guaranteed",
            c.alpha_bar
        )),
        Err(e) => Some(format!("certificate could not be evaluated: {e}")),
    }
}

/// The run from `anchor` over `periods` whole periods.
pub fn anchor_orbit(
    set: &MovingSet,
    field: &VectorField,
    period: f64,
    anchor: &StateVector,
    h: f64,
    periods: usize,
) -> Result<Trajectory> {
    check_period(set, field, period)?;
    integrate(set, field, 0.0, anchor, period * periods as f64, h)
}

/// `max_k ‖x(t_k + T) − x(t_k)‖` over the grid; `T` must be a whole
/// number of steps.
pub fn periodicity_defect(traj: &Trajectory, period: f64) -> Result<f64> {
    let m = (period / traj.h).round();
    if m < 1.0 || (m * traj.h - period).abs() > 1e-9 * period {
        return Err(Error::InvalidParameter(format!(
            "period {period} is not a whole number of steps of {}",
            traj.h
        )));
    }
    let m = m as usize;
    if traj.len() <= m {
        return Err(Error::InvalidParameter("trajectory shorter than one period".into()));
    }
    Ok((0..traj.len() - m)
        .map(|k| traj.states[k + m].dist(&traj.states[k]))
        .fold(0.0, f64::max))
}

/// Choice of the starting point of each pullback run.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedRule {
    /// The nearest point of `C(start)` to the origin.
    ProjectOrigin,
    /// A fixed point, which must belong to every starting set.
    Fixed(StateVector),
}

impl SeedRule {
    fn seed(&self, set: &MovingSet, t: f64) -> Result<StateVector> {
        match self {
            SeedRule::ProjectOrigin => {
                let origin = StateVector::new(vec![0.0; set.dim()])?;
                Ok(set.project(t, &origin)?.point)
            }
            SeedRule::Fixed(x) => {
                if set.contains(t, x)? {
                    Ok(x.clone())
                } else {
                    Err(Error::ContractViolation(format!("pullback seed {x} is not in C({t})")))
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SeedRule::ProjectOrigin => "project-origin".into(),
            SeedRule::Fixed(x) => format!("fixed {x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackReport {
    pub t_eval: f64,
    pub horizons: Vec<f64>,
    pub seed_rule: String,
    /// Value at `t_eval` of the run started at `t_eval − horizon`.
    pub states: Vec<StateVector>,
    /// `‖states[i+1] − states[i]‖`.
    pub successive_gaps: Vec<f64>,
    /// `successive_gaps[i+1] / successive_gaps[i]`, absent when the
    /// denominator vanishes.
    pub gap_ratios: Vec<Option<f64>>,
}

/// Runs started ever earlier, all evaluated at `t_eval`.
pub fn pullback_solution(
    set: &MovingSet,
    field: &VectorField,
    t_eval: f64,
    horizons: &[f64],
    h: f64,
    rule: &SeedRule,
) -> Result<PullbackReport> {
    if horizons.is_empty() || horizons.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("horizons must be positive".into()));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("horizons must be strictly increasing".into()));
    }
    let states = horizons
        .iter()
        .map(|hz| {
            let start = t_eval - hz;
            let seed = rule.seed(set, start)?;
            Ok(integrate(set, field, start, &seed, t_eval, h)?.last().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let successive_gaps: Vec<f64> = states.windows(2).map(|w| w[1].dist(&w[0])).collect();
    let gap_ratios = successive_gaps
        .windows(2)
        .map(|w| (w[0] > 0.0).then(|| w[1] / w[0]))
        .collect();
    Ok(PullbackReport {
        t_eval,
        horizons: horizons.to_vec(),
        seed_rule: rule.describe(),
        states,
        successive_gaps,
        gap_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{BProfile, Periodicity};

    fn scenario(delta: f64) -> (MovingSet, VectorField) {
        (
            MovingSet::ellipse_exterior_ball(BProfile::from_params(2.1, delta, 10.0).unwrap()),
            VectorField::linear(1.0).unwrap().with_bound(2.5),
        )
    }

    #[test]
    fn period_map_is_integrate_endpoint() {
        let (set, f) = scenario(0.2);
        let a = StateVector::xy(-2.2, 0.4);
        let direct = integrate(&set, &f, 0.0, &a, 10.0, 1e-2).unwrap();
        assert_eq!(&period_map(&set, &f, 10.0, &a, 1e-2).unwrap(), direct.last());
    }

    #[test]
    fn static_equilibrium_is_fixed() {
        let (set, f) = scenario(0.0);
        let e = StateVector::xy(-1.0, 0.0);
        assert_eq!(period_map(&set, &f, 3.7, &e, 1e-2).unwrap(), e);
    }

    #[test]
    fn period_mismatch_is_rejected() {
        let (set, f) = scenario(0.2);
        let a = StateVector::xy(-2.2, 0.4);
        assert!(matches!(
            period_map(&set, &f, 5.0, &a, 1e-2),
            Err(Error::ContractViolation(_))
        ));
        let g = VectorField::custom("p3", |_, x| x.to_vec(), 1.0, 1.0, Periodicity::Periodic(3.0));
        assert!(matches!(
            period_map(&set, &g, 10.0, &a, 1e-2),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn static_orbit_is_the_equilibrium() {
        let (set, f) = scenario(0.0);
        let r = find_periodic_orbit(&set, &f, 10.0, &StateVector::xy(-2.2, 0.4), 1e-6, 30, 1e-2).unwrap();
        assert!(r.anchor.dist(&StateVector::xy(-1.0, 0.0)) <= 1e-5);
        assert!(r.residual <= 2e-6);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn expanding_map_is_reported() {
        // x' = +x on a large ball pushes every anchor outwards until it sticks
        // to the boundary; shrinking the tolerance below what one period can
        // resolve makes the loop give up.
        let set = MovingSet::ball(StateVector::xy(0.0, 0.0), 1e6).unwrap();
        let f = VectorField::custom(
            "expand",
            |_, x| x.iter().map(|v| -v).collect(),
            -1.0,
            1.0,
            Periodicity::Autonomous,
        );
        let err = find_periodic_orbit(&set, &f, 1.0, &StateVector::xy(1e-3, 0.0), 1e-9, 5, 1e-2).unwrap_err();
        assert!(matches!(err, Error::NotConverged { diverging: true, .. }), "{err:?}");
    }

    #[test]
    fn inapplicable_certificate_warns() {
        let set = MovingSet::ellipse_exterior_ball(BProfile::constant(1.9).unwrap());
        let f = VectorField::linear(1.0).unwrap().with_bound(2.5);
        let r = find_periodic_orbit(&set, &f, 1.0, &StateVector::xy(-2.0, 0.0), 1e-6, 200, 1e-2).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn defect_of_constant_orbit() {
        let (set, f) = scenario(0.2);
        let traj = anchor_orbit(&set, &f, 10.0, &StateVector::xy(-1.0, 0.0), 1e-2, 2).unwrap();
        assert_eq!(periodicity_defect(&traj, 10.0).unwrap(), 0.0);
        assert!(periodicity_defect(&traj, 10.005).is_err());
    }

    #[test]
    fn pullback_from_equilibrium_seed() {
        let (set, f) = scenario(0.0);
        let rule = SeedRule::Fixed(StateVector::xy(-1.0, 0.0));
        let r = pullback_solution(&set, &f, 0.0, &[10.0, 20.0], 1e-2, &rule).unwrap();
        assert!(r.states.iter().all(|s| *s == StateVector::xy(-1.0, 0.0)));
        assert_eq!(r.successive_gaps, vec![0.0]);
    }

    #[test]
    fn pullback_validates_horizons() {
        let (set, f) = scenario(0.0);
        let rule = SeedRule::ProjectOrigin;
        assert!(pullback_solution(&set, &f, 0.0, &[20.0, 10.0], 1e-2, &rule).is_err());
        assert!(pullback_solution(&set, &f, 0.0, &[], 1e-2, &rule).is_err());
        let outside = SeedRule::Fixed(StateVector::xy(0.0, 0.0));
        assert!(matches!(
            pullback_solution(&set, &f, 0.0, &[1.0], 1e-2, &outside),
            Err(Error::ContractViolation(_))
        ));
    }
}
