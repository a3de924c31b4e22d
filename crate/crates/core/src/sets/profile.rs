use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semi-axis b(t) of the moving ellipse, bounded below by `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BProfile {
    Constant {
        beta: f64,
    },
    /// b(t) = β + (δ/2)(1 + sin(2πt/T))
    Sinusoidal {
        beta: f64,
        delta: f64,
        period: f64,
    },
}

impl BProfile {
    pub fn constant(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::Constant { beta })
    }

    pub fn sinusoidal(beta: f64, delta: f64, period: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be > 0, got {period}")));
        }
        Ok(Self::Sinusoidal { beta, delta, period })
    }

    /// Sinusoidal when `delta > 0`, constant otherwise.
    pub fn from_params(beta: f64, delta: f64, period: f64) -> Result<Self> {
        if delta == 0.0 {
            Self::constant(beta)
        } else {
            Self::sinusoidal(beta, delta, period)
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Self::Constant { beta } | Self::Sinusoidal { beta, .. } => beta,
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Sinusoidal { delta, .. } => delta,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            Self::Constant { .. } => None,
            Self::Sinusoidal { period, .. } => Some(period),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { beta } => beta,
            Self::Sinusoidal { beta, delta, period } => beta + 0.5 * delta * (1.0 + (2.0 * PI * t / period).sin()),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Sinusoidal { delta, period, .. } => delta * PI / period * (2.0 * PI * t / period).cos(),
        }
    }

    /// Exact global bound on |b'|.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Sinusoidal { delta, period, .. } => delta * PI / period,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta must be >= 1, got {beta}")))
    }
}
