use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sets::Periodicity;
use crate::state::StateVector;

pub type FieldFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum FieldKind {
    /// f(t, x) = αx
    Linear,
    /// f(t, x) = x, the negative of the spontaneous velocity U(x) = −x.
    CrowdSpontaneous,
    Custom {
        name: String,
        f: FieldFn,
    },
}

/// Perturbation `f(t, x)` together with its declared constants.
#[derive(Clone)]
pub struct VectorField {
    kind: FieldKind,
    /// Strong monotonicity constant.
    pub alpha: f64,
    /// Joint Lipschitz constant in (t, x).
    pub lipschitz_f: f64,
    /// Bound on ‖f‖ over the constraint region, when known.
    pub bound_mf: Option<f64>,
    periodicity: Periodicity,
}

impl VectorField {
    pub fn linear(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self {
            kind: FieldKind::Linear,
            alpha,
            lipschitz_f: alpha,
            bound_mf: None,
            periodicity: Periodicity::Autonomous,
        })
    }

    pub fn crowd_spontaneous() -> Self {
        Self {
            kind: FieldKind::CrowdSpontaneous,
            alpha: 1.0,
            lipschitz_f: 1.0,
            bound_mf: None,
            periodicity: Periodicity::Autonomous,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        alpha: f64,
        lipschitz_f: f64,
        periodicity: Periodicity,
    ) -> Self {
        Self {
            kind: FieldKind::Custom {
                name: name.into(),
                f: Arc::new(f),
            },
            alpha,
            lipschitz_f,
            bound_mf: None,
            periodicity,
        }
    }

    pub fn with_bound(mut self, m_f: f64) -> Self {
        self.bound_mf = Some(m_f);
        self
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            FieldKind::Linear => "linear",
            FieldKind::CrowdSpontaneous => "crowd-spontaneous",
            FieldKind::Custom { name, .. } => name,
        }
    }

    pub fn periodicity(&self) -> Periodicity {
        self.periodicity
    }

    pub fn eval(&self, t: f64, x: &StateVector) -> Result<StateVector> {
        match &self.kind {
            FieldKind::Linear => Ok(x.scale(self.alpha)),
            FieldKind::CrowdSpontaneous => Ok(x.clone()),
            FieldKind::Custom { f, .. } => {
                let v = f(t, x.as_slice());
                v.len().eq(&x.dim()).then_some(()).ok_or(Error::DimensionMismatch {
                    expected: x.dim(),
                    got: v.len(),
                })?;
                StateVector::new(v)
            }
        }
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("kind", &self.name())
            .field("alpha", &self.alpha)
            .field("lipschitz_f", &self.lipschitz_f)
            .field("bound_mf", &self.bound_mf)
            .field("periodicity", &self.periodicity)
            .finish()
    }
}
