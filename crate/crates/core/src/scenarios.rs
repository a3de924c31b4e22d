//! Canonical configurations (the ellipse-ball example and the two-disk
//! crowd) and the request runner that turns them into artifact bundles.
//!
//! Configurations are flat `key = value` text; `#` starts a comment. The
//! recognised keys are listed in [`KEYS`].

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::thread;

use rand::Rng;
use serde::Serialize;

use crate::analysis::{
    certificate, estimate_m_f, example_constants, verify_contraction, CertificateReport, ExampleConstants, Provenance,
    Source, StabilityCertificate,
};
use crate::error::{Error, Result};
use crate::periodic::{anchor_orbit, find_periodic_orbit, periodicity_defect, pullback_solution, SeedRule};
use crate::rng::{seeded, DEFAULT_SEED};
use crate::sets::{pair_gap, project_oracle, BProfile, MovingSet};
use crate::state::StateVector;
use crate::sweep::{discrete_velocity_bound, integrate, Trajectory, VectorField};

/// Configuration keys, in serialization order, with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("scenario", "example | crowd"),
    ("beta", "lower bound of b(t) (example)"),
    ("delta", "oscillation amplitude of b(t); 0 gives a static set (example)"),
    ("period", "period T of b(t); also the period used by `periodic`"),
    ("alpha", "monotonicity constant of f(x) = alpha x (example)"),
    ("r", "disk radius (crowd)"),
    ("box", "half-width of the estimator box (crowd)"),
    ("h", "time step"),
    ("seed", "RNG seed"),
    ("t0", "start time"),
    ("t1", "end time"),
    ("x0", "initial state, comma separated"),
    ("x0b", "second initial state for `contract`"),
    ("tol", "fixed-point tolerance for `periodic`"),
    ("max-iter", "iteration cap for `periodic`"),
    ("horizons", "pullback horizons, comma separated, increasing"),
    ("t-eval", "evaluation time for `pullback`"),
    ("queries", "number of queries for `project-test`"),
    ("resolution", "oracle grid spacing for `project-test`"),
    ("refine", "oracle refinement rounds for `project-test`"),
    ("slack", "envelope slack for `contract`"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Example,
    Crowd,
}

/// Raw run parameters. Unset values fall back to scenario defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub scenario: Option<ScenarioName>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub period: Option<f64>,
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub box_bound: Option<f64>,
    pub h: Option<f64>,
    pub seed: Option<u64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub x0: Option<StateVector>,
    pub x0b: Option<StateVector>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub horizons: Option<Vec<f64>>,
    pub t_eval: Option<f64>,
    pub queries: Option<usize>,
    pub resolution: Option<f64>,
    pub refine: Option<usize>,
    pub slack: Option<f64>,
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{key} = {value:?}: {why}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|e| bad(key, v, e))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, v, "not finite"))
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_f64(key, s)).collect()
}

fn parse_seed(key: &str, v: &str) -> Result<u64> {
    let v = v.trim();
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    parsed.map_err(|e| bad(key, v, e))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Params {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "scenario" => {
                self.scenario = Some(match v {
                    "example" => ScenarioName::Example,
                    "crowd" => ScenarioName::Crowd,
                    _ => return Err(bad(key, v, "expected example or crowd")),
                })
            }
            "beta" => self.beta = Some(parse_f64(key, v)?),
            "delta" => self.delta = Some(parse_f64(key, v)?),
            "period" => self.period = Some(parse_f64(key, v)?),
            "alpha" => self.alpha = Some(parse_f64(key, v)?),
            "r" => self.r = Some(parse_f64(key, v)?),
            "box" => self.box_bound = Some(parse_f64(key, v)?),
            "h" => self.h = Some(parse_f64(key, v)?),
            "seed" => self.seed = Some(parse_seed(key, v)?),
            "t0" => self.t0 = Some(parse_f64(key, v)?),
            "t1" => self.t1 = Some(parse_f64(key, v)?),
            "x0" => self.x0 = Some(StateVector::new(parse_list(key, v)?)?),
            "x0b" => self.x0b = Some(StateVector::new(parse_list(key, v)?)?),
            "tol" => self.tol = Some(parse_f64(key, v)?),
            "max-iter" => self.max_iter = Some(v.parse().map_err(|e| bad(key, v, e))?),
            "horizons" => self.horizons = Some(parse_list(key, v)?),
            "t-eval" => self.t_eval = Some(parse_f64(key, v)?),
            "queries" => self.queries = Some(v.parse().map_err(|e| bad(key, v, e))?),
            "resolution" => self.resolution = Some(parse_f64(key, v)?),
            "refine" => self.refine = Some(v.parse().map_err(|e| bad(key, v, e))?),
            "slack" => self.slack = Some(parse_f64(key, v)?),
            _ => return Err(Error::InvalidParameter(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Params::default();
        let mut seen = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("line {}: expected key = value", no + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::InvalidParameter(format!(
                    "line {}: duplicate key {key:?}",
                    no + 1
                )));
            }
            seen.push(key);
            p.set(key, value)?;
        }
        Ok(p)
    }

    /// Set keys and their text values, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = |v: Option<f64>| v.map(|x| x.to_string());
        let u = |v: Option<usize>| v.map(|x| x.to_string());
        let values: [Option<String>; 21] = [
            self.scenario.map(|s| match s {
                ScenarioName::Example => "example".to_string(),
                ScenarioName::Crowd => "crowd".to_string(),
            }),
            f(self.beta),
            f(self.delta),
            f(self.period),
            f(self.alpha),
            f(self.r),
            f(self.box_bound),
            f(self.h),
            self.seed.map(|s| s.to_string()),
            f(self.t0),
            f(self.t1),
            self.x0.as_ref().map(|x| join(x.as_slice())),
            self.x0b.as_ref().map(|x| join(x.as_slice())),
            f(self.tol),
            u(self.max_iter),
            self.horizons.as_ref().map(|h| join(h)),
            f(self.t_eval),
            u(self.queries),
            f(self.resolution),
            u(self.refine),
            f(self.slack),
        ];
        KEYS.iter()
            .zip(values)
            .filter_map(|((k, _), v)| v.map(|v| (*k, v)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// `self` with every key set in `overrides` replaced.
    pub fn merged(&self, overrides: &Params) -> Params {
        let mut out = self.clone();
        for (k, v) in overrides.entries() {
            out.set(k, &v).expect("round-trip of a valid value");
        }
        out
    }
}

/// Certificate constants of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Constants {
    Example(ExampleConstants),
    Certificate(StabilityCertificate),
}

impl Constants {
    pub fn certificate(&self) -> &StabilityCertificate {
        match self {
            Constants::Example(c) => &c.certificate,
            Constants::Certificate(c) => c,
        }
    }
}

/// A fully assembled system.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub scenario: ScenarioName,
    pub set: MovingSet,
    pub field: VectorField,
    /// Common period of set and field, when the set moves periodically.
    pub period: Option<f64>,
    pub label: String,
    pub default_h: f64,
    pub constants: Constants,
    pub provenance: Provenance,
    pub seed: u64,
    /// System-level keys this configuration was built from.
    pub params: Params,
}

impl SystemConfig {
    /// Builds the system described by the system-level keys of `p`.
    pub fn from_params(p: &Params) -> Result<Self> {
        let mut cfg = match p.scenario.unwrap_or(ScenarioName::Example) {
            ScenarioName::Example => make_example(
                p.beta.unwrap_or(2.0),
                p.delta.unwrap_or(0.0),
                p.period.unwrap_or(10.0),
                p.alpha.unwrap_or(1.0),
            )?,
            ScenarioName::Crowd => make_crowd_two(p.r.unwrap_or(0.5), p.box_bound.unwrap_or(1.0))?,
        };
        cfg.seed = p.seed.unwrap_or(DEFAULT_SEED);
        cfg.params.seed = Some(cfg.seed);
        Ok(cfg)
    }

    pub fn certificate(&self) -> &StabilityCertificate {
        self.constants.certificate()
    }
}

/// The ellipse-ball example with `f(x) = αx`. Scenario A is
/// `(2, 0, ·, 1)` and Scenario B is `(2.1, 0.2, 10, 1)`.
pub fn make_example(beta: f64, delta: f64, period: f64, alpha: f64) -> Result<SystemConfig> {
    let profile = BProfile::from_params(beta, delta, period)?;
    let constants = example_constants(beta, profile.lipschitz(), alpha)?;
    let set = MovingSet::ellipse_exterior_ball(profile);
    let field = VectorField::linear(alpha)?.with_bound(constants.m_f);
    let guard = if constants.eta > 0.0 {
        0.9 * constants.eta / (constants.m_f + constants.l_c)
    } else {
        f64::INFINITY
    };
    Ok(SystemConfig {
        scenario: ScenarioName::Example,
        set,
        field,
        period: profile.period(),
        label: format!("example(beta={beta}, delta={delta}, period={period}, alpha={alpha})"),
        default_h: guard.min(1e-2),
        constants: Constants::Example(constants),
        provenance: Provenance {
            alpha: Source::ClosedForm,
            l_c: Source::ClosedForm,
            m_f: Source::ClosedForm,
            eta: Source::ClosedForm,
        },
        seed: DEFAULT_SEED,
        params: Params {
            scenario: Some(ScenarioName::Example),
            beta: Some(beta),
            delta: Some(delta),
            period: Some(period),
            alpha: Some(alpha),
            ..Params::default()
        },
    })
}

/// Two disks of radius `r` with spontaneous velocity `U(x) = −x`, so
/// `f(x) = x`. `M_f` is sampled over the box `[−box, box]⁴`.
pub fn make_crowd_two(r: f64, box_bound: f64) -> Result<SystemConfig> {
    if !(box_bound.is_finite() && box_bound >= 2.0 * r) {
        return Err(Error::InvalidParameter(format!(
            "box must be >= 2r, got {box_bound} with r = {r}"
        )));
    }
    let set = MovingSet::crowd(2, r, Some(box_bound))?;
    let field = VectorField::crowd_spontaneous();
    let m_f = estimate_m_f(&field, &set, 1, 4000, DEFAULT_SEED)?;
    let eta = r * SQRT_2;
    let cert = certificate(field.alpha, 0.0, m_f, eta)?;
    Ok(SystemConfig {
        scenario: ScenarioName::Crowd,
        set,
        field: field.with_bound(m_f),
        period: None,
        label: format!("crowd(n=2, r={r}, box={box_bound})"),
        default_h: (0.9 * eta / m_f).min(1e-3),
        constants: Constants::Certificate(cert),
        provenance: Provenance {
            alpha: Source::ClosedForm,
            l_c: Source::ClosedForm,
            m_f: Source::Estimated,
            eta: Source::ClosedForm,
        },
        seed: DEFAULT_SEED,
        params: Params {
            scenario: Some(ScenarioName::Crowd),
            r: Some(r),
            box_bound: Some(box_bound),
            ..Params::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Request {
    Simulate,
    Certify,
    Contract,
    Periodic,
    ProjectTest,
    Pullback,
}

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bundle {
    pub artifacts: Vec<Artifact>,
}

impl Bundle {
    fn push_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
        text.push('\n');
        self.push_text(name, text);
        Ok(())
    }

    fn push_text(&mut self, name: &str, text: String) {
        self.artifacts.push(Artifact {
            name: name.to_string(),
            bytes: text.into_bytes(),
        });
    }

    pub fn get(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

/// Feasibility and symmetry of a two-disk run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrowdDiagnostics {
    /// `max_k max(0, 2r − ‖x₁ − x₂‖)`.
    pub max_violation: f64,
    /// First grid time with `‖x₁ − x₂‖ ≤ 2r + 1e−9`.
    pub contact_time: Option<f64>,
    /// The gap stays within `1e−9` of `2r` after first contact.
    pub contact_maintained: bool,
    /// `max_k ‖x₁ + x₂‖`, zero for mirror-symmetric motion about the origin.
    pub max_symmetry_error: f64,
}

pub fn crowd_diagnostics(traj: &Trajectory, r: f64) -> Result<CrowdDiagnostics> {
    if traj.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: traj.dim(),
        });
    }
    let mut out = CrowdDiagnostics {
        max_violation: 0.0,
        contact_time: None,
        contact_maintained: true,
        max_symmetry_error: 0.0,
    };
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let xs = x.as_slice();
        let gap = pair_gap(xs, 0, 1);
        out.max_violation = out.max_violation.max(2.0 * r - gap);
        out.max_symmetry_error = out.max_symmetry_error.max((xs[0] + xs[2]).hypot(xs[1] + xs[3]));
        if out.contact_time.is_none() && gap <= 2.0 * r + 1e-9 {
            out.contact_time = Some(*t);
        }
        if out.contact_time.is_some() && (gap - 2.0 * r).abs() > 1e-9 {
            out.contact_maintained = false;
        }
    }
    out.contact_maintained &= out.contact_time.is_some();
    Ok(out)
}

/// Agreement between the analytic projection and the grid oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub set: String,
    pub t: f64,
    pub queries: usize,
    /// Queries inside the prox-regular tube with a unique nearest point.
    pub in_tube: usize,
    pub max_distance_discrepancy: f64,
    pub max_point_discrepancy_in_tube: f64,
    pub worst_query: Option<StateVector>,
}

/// Seeded queries around `C(t)`: uniform over an enlarged bounding box for
/// the ellipse-ball set, infeasible configurations inside the box for
/// crowds.
pub fn oracle_queries(set: &MovingSet, t: f64, n: usize, seed: u64) -> Result<Vec<StateVector>> {
    let mut rng = seeded(seed);
    match set {
        MovingSet::EllipseExteriorBall { .. } => Ok((0..n)
            .map(|_| StateVector::xy(rng.random_range(-3.0..0.5), rng.random_range(-1.75..1.75)))
            .collect()),
        MovingSet::CrowdDisks {
            n_people: 2,
            r,
            box_bound: Some(bb),
        } => Ok((0..n)
            .map(|_| {
                let mx = rng.random_range(-bb + r..bb - r);
                let my = rng.random_range(-bb + r..bb - r);
                let th = rng.random_range(0.0..std::f64::consts::TAU);
                let half = 0.5 * rng.random_range(0.02..2.0 * r);
                let (s, c) = th.sin_cos();
                StateVector::from_slice(&[mx + half * c, my + half * s, mx - half * c, my - half * s])
            })
            .collect()),
        _ => {
            let _ = t;
            Err(Error::Unsupported("oracle queries for this set"))
        }
    }
}

/// Distance discrepancy, and point discrepancy when inside the tube.
type Discrepancy = (f64, Option<f64>);

/// Compares [`MovingSet::project`] with [`project_oracle`] on `queries`
/// seeded points, spread over the available cores.
pub fn compare_with_oracle(
    set: &MovingSet,
    t: f64,
    queries: usize,
    resolution: f64,
    refine: usize,
    seed: u64,
) -> Result<OracleComparison> {
    let qs = oracle_queries(set, t, queries, seed)?;
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(16);
    let chunk = qs.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<Discrepancy>>> = thread::scope(|s| {
        let handles: Vec<_> = qs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|z| {
                            let a = set.project(t, z)?;
                            let o = project_oracle(set, t, z, resolution, refine)?;
                            let dd = (a.distance - o.distance).abs();
                            Ok((dd, a.unique.then(|| a.point.dist(&o.point))))
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("oracle worker panicked"))
            .collect()
    });
    let mut out = OracleComparison {
        set: set.name().to_string(),
        t,
        queries: qs.len(),
        in_tube: 0,
        max_distance_discrepancy: 0.0,
        max_point_discrepancy_in_tube: 0.0,
        worst_query: None,
    };
    let flat: Vec<Discrepancy> = results.into_iter().collect::<Result<Vec<_>>>()?.concat();
    for (z, (dd, pd)) in qs.iter().zip(flat) {
        if dd > out.max_distance_discrepancy {
            out.max_distance_discrepancy = dd;
            out.worst_query = Some(z.clone());
        }
        if let Some(pd) = pd {
            out.in_tube += 1;
            out.max_point_discrepancy_in_tube = out.max_point_discrepancy_in_tube.max(pd);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    label: &'a str,
    t0: f64,
    t1: f64,
    h: f64,
    steps: usize,
    initial_state: &'a StateVector,
    final_state: &'a StateVector,
    velocity_bound: crate::sweep::VelocityBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    crowd: Option<CrowdDiagnostics>,
}

#[derive(Serialize)]
struct ContractSummary<'a> {
    label: &'a str,
    alpha_bar: f64,
    slack: f64,
    x0: &'a StateVector,
    x0b: &'a StateVector,
    report: crate::analysis::ContractionReport,
}

#[derive(Serialize)]
struct PeriodicSummary<'a> {
    label: &'a str,
    result: crate::periodic::PeriodicOrbitResult,
    mean_contraction_factor: Option<f64>,
    max_contraction_factor: Option<f64>,
    /// `max ‖x(t + T) − x(t)‖` along two periods of the anchor run.
    periodicity_defect: f64,
}

#[derive(Serialize)]
struct PullbackSummary<'a> {
    label: &'a str,
    h: f64,
    report: crate::periodic::PullbackReport,
}

struct RunDefaults {
    x0: StateVector,
    x0b: StateVector,
    horizons: Vec<f64>,
}

fn defaults(config: &SystemConfig) -> RunDefaults {
    match config.scenario {
        ScenarioName::Example => RunDefaults {
            x0: StateVector::xy(-2.2, 0.4),
            x0b: StateVector::xy(-1.8, 0.3),
            horizons: if config.period.is_some() {
                vec![20.0, 40.0, 60.0]
            } else {
                vec![100.0, 200.0]
            },
        },
        ScenarioName::Crowd => RunDefaults {
            x0: StateVector::from_slice(&[0.8, 0.0, -0.8, 0.0]),
            x0b: StateVector::from_slice(&[0.7, 0.1, -0.7, -0.1]),
            horizons: vec![5.0, 10.0],
        },
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
    }
}

/// Executes `request` on `config`. Output depends only on the inputs.
pub fn run(config: &SystemConfig, request: Request, params: &Params) -> Result<Bundle> {
    let d = defaults(config);
    let h = positive("h", params.h.unwrap_or(config.default_h))?;
    let t0 = params.t0.unwrap_or(0.0);
    let x0 = params.x0.clone().unwrap_or(d.x0);
    let mut bundle = Bundle::default();
    match request {
        Request::Simulate => {
            let t1 = params.t1.unwrap_or(match config.scenario {
                ScenarioName::Example => 200.0,
                ScenarioName::Crowd => 20.0,
            });
            let traj = integrate(&config.set, &config.field, t0, &x0, t1, h)?;
            let crowd = match config.set {
                MovingSet::CrowdDisks { r, .. } => Some(crowd_diagnostics(&traj, r)?),
                _ => None,
            };
            let summary = SimulateSummary {
                label: &config.label,
                t0,
                t1,
                h,
                steps: traj.residuals.len(),
                initial_state: &x0,
                final_state: traj.last(),
                velocity_bound: discrete_velocity_bound(&traj, &config.field, &config.set)?,
                crowd,
            };
            bundle.push_text("trajectory.csv", traj.to_csv());
            bundle.push_json("summary.json", &summary)?;
        }
        Request::Certify => {
            let report = CertificateReport {
                certificate: *config.certificate(),
                provenance: config.provenance,
                seed: config.seed,
            };
            bundle.push_json("certificate.json", &report)?;
        }
        Request::Contract => {
            let t1 = params.t1.unwrap_or(30.0);
            let x0b = params.x0b.clone().unwrap_or(d.x0b);
            let slack = positive("slack", params.slack.unwrap_or(1.05))?;
            let (a, b) = thread::scope(|s| {
                let ha = s.spawn(|| integrate(&config.set, &config.field, t0, &x0, t1, h));
                let hb = s.spawn(|| integrate(&config.set, &config.field, t0, &x0b, t1, h));
                (ha.join().expect("run panicked"), hb.join().expect("run panicked"))
            });
            let (a, b) = (a?, b?);
            let alpha_bar = config.certificate().alpha_bar;
            let report = verify_contraction(&a, &b, alpha_bar, slack)?;
            bundle.push_text("trajectory_a.csv", a.to_csv());
            bundle.push_text("trajectory_b.csv", b.to_csv());
            bundle.push_json(
                "contraction.json",
                &ContractSummary {
                    label: &config.label,
                    alpha_bar,
                    slack,
                    x0: &x0,
                    x0b: &x0b,
                    report,
                },
            )?;
        }
        Request::Periodic => {
            let period = config.period.or(params.period).unwrap_or(10.0);
            let tol = positive("tol", params.tol.unwrap_or(1e-6))?;
            let max_iter = params.max_iter.unwrap_or(50);
            let result = find_periodic_orbit(&config.set, &config.field, period, &x0, tol, max_iter, h)?;
            let orbit = anchor_orbit(&config.set, &config.field, period, &result.anchor, h, 2)?;
            let summary = PeriodicSummary {
                label: &config.label,
                mean_contraction_factor: result.mean_contraction_factor(),
                max_contraction_factor: result.max_contraction_factor(),
                periodicity_defect: periodicity_defect(&orbit, period)?,
                result,
            };
            bundle.push_text("orbit.csv", orbit.to_csv());
            bundle.push_json("periodic.json", &summary)?;
        }
        Request::ProjectTest => {
            let queries = params.queries.unwrap_or(1000);
            let (resolution, refine) = match config.scenario {
                ScenarioName::Example => (params.resolution.unwrap_or(0.05), params.refine.unwrap_or(40)),
                ScenarioName::Crowd => (params.resolution.unwrap_or(0.25), params.refine.unwrap_or(40)),
            };
            let cmp = compare_with_oracle(
                &config.set,
                t0,
                queries,
                positive("resolution", resolution)?,
                refine,
                config.seed,
            )?;
            bundle.push_json("project_test.json", &cmp)?;
        }
        Request::Pullback => {
            let t_eval = params.t_eval.unwrap_or(0.0);
            let horizons = params.horizons.clone().unwrap_or(d.horizons);
            let rule = match &params.x0 {
                Some(x) => SeedRule::Fixed(x.clone()),
                None => SeedRule::ProjectOrigin,
            };
            let report = pullback_solution(&config.set, &config.field, t_eval, &horizons, h, &rule)?;
            bundle.push_json(
                "pullback.json",
                &PullbackSummary {
                    label: &config.label,
                    h,
                    report,
                },
            )?;
        }
    }
    Ok(bundle)
}

/// `key → value` map of a parameter set, for manifests.
pub fn params_map(p: &Params) -> BTreeMap<String, String> {
    p.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_constants_match_closed_forms() {
        let a = make_example(2.0, 0.0, 10.0, 1.0).unwrap();
        assert_eq!(
            a.constants,
            Constants::Example(example_constants(2.0, 0.0, 1.0).unwrap())
        );
        assert!(a.certificate().applicable);
        assert_eq!(a.period, None);
        let b = make_example(2.1, 0.2, 10.0, 1.0).unwrap();
        let l_b = 0.2 * std::f64::consts::PI / 10.0;
        assert_eq!(
            b.constants,
            Constants::Example(example_constants(2.1, l_b, 1.0).unwrap())
        );
        assert_eq!(b.period, Some(10.0));
        assert!(!make_example(1.9, 0.2, 10.0, 1.0).unwrap().certificate().applicable);
    }

    #[test]
    fn default_step_respects_guard() {
        for cfg in [
            make_example(2.0, 0.0, 10.0, 1.0).unwrap(),
            make_example(2.1, 0.2, 10.0, 1.0).unwrap(),
            make_crowd_two(0.5, 1.0).unwrap(),
        ] {
            let c = cfg.certificate();
            assert!(cfg.default_h <= 0.9 * c.eta / (c.m_f + c.l_c), "{}", cfg.label);
        }
    }

    #[test]
    fn crowd_certificate_fails() {
        let c = make_crowd_two(0.5, 1.0).unwrap();
        assert!(!c.certificate().applicable);
        assert!((c.certificate().eta - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        assert!((c.certificate().m_f - 2.0).abs() <= 0.04);
        assert!(make_crowd_two(0.5, 0.9).is_err());
    }

    #[test]
    fn params_text_round_trip() {
        let text = "# scenario B\nscenario = example\nbeta=2.1\ndelta = 0.2 # amplitude\nperiod=10\n\nx0 = -2.2, 0.4\nseed = 0x5EED\nhorizons=20,40,60\n";
        let p = Params::parse(text).unwrap();
        assert_eq!(p.beta, Some(2.1));
        assert_eq!(p.seed, Some(0x5EED));
        assert_eq!(p.x0, Some(StateVector::xy(-2.2, 0.4)));
        assert_eq!(Params::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn params_reject_bad_input() {
        assert!(Params::parse("colour = red").is_err());
        assert!(Params::parse("beta = two").is_err());
        assert!(Params::parse("beta = 2\nbeta = 3").is_err());
        assert!(Params::parse("just words").is_err());
        assert!(Params::parse("x0 = 1,nan").is_err());
        assert!(Params::parse("scenario = ring").is_err());
    }

    #[test]
    fn merge_prefers_overrides() {
        let base = Params::parse("beta = 2\ndelta = 0.2").unwrap();
        let over = Params::parse("delta = 0").unwrap();
        let m = base.merged(&over);
        assert_eq!(m.beta, Some(2.0));
        assert_eq!(m.delta, Some(0.0));
    }

    #[test]
    fn rebuilt_config_reproduces_artifacts() {
        let p = Params::parse("scenario = example\nbeta = 2.1\ndelta = 0.2\nperiod = 10\nt1 = 5\nh = 0.01").unwrap();
        let first = run(&SystemConfig::from_params(&p).unwrap(), Request::Simulate, &p).unwrap();
        let q = Params::parse(&p.to_text()).unwrap();
        let second = run(&SystemConfig::from_params(&q).unwrap(), Request::Simulate, &q).unwrap();
        assert_eq!(first, second);
        let cert = run(&SystemConfig::from_params(&p).unwrap(), Request::Certify, &p).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&cert.get("certificate.json").unwrap().bytes).unwrap();
        let beta: f64 = 2.1;
        let eta = (beta.powf(4.0 / 3.0) - beta.powf(-2.0 / 3.0)).powf(1.5);
        let l_c = 4.0 * (0.2 * std::f64::consts::PI / 10.0) / (3.0 * beta.powi(3));
        let expected = (2.5 + l_c - eta) / eta;
        assert!((v["alpha_bar"].as_f64().unwrap() - expected).abs() < 1e-12);
        assert_eq!(v["applicable"], true);
    }

    #[test]
    fn crowd_symmetric_run_reaches_contact() {
        let cfg = make_crowd_two(0.5, 1.0).unwrap();
        let traj = integrate(
            &cfg.set,
            &cfg.field,
            0.0,
            &StateVector::from_slice(&[0.8, 0.0, -0.8, 0.0]),
            5.0,
            1e-3,
        )
        .unwrap();
        let d = crowd_diagnostics(&traj, 0.5).unwrap();
        assert!(d.max_violation <= 1e-9);
        assert!(d.contact_time.is_some());
        assert!(d.contact_maintained);
        assert!(d.max_symmetry_error <= 1e-9);
    }

    #[test]
    fn oracle_comparison_small() {
        let set = MovingSet::ellipse_exterior_ball(BProfile::constant(2.0).unwrap());
        let c = compare_with_oracle(&set, 0.0, 50, 0.01, 40, 9).unwrap();
        assert_eq!(c.queries, 50);
        assert!(c.max_distance_discrepancy <= 1e-6, "{c:?}");
        assert!(c.max_point_discrepancy_in_tube <= 1e-4, "{c:?}");
    }
}
