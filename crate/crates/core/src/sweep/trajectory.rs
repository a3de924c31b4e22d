use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sets::ActiveTag;
use crate::state::StateVector;

/// States of one run on a uniform grid `t0 + k·h` (the final step may be
/// shorter when `h` does not divide the horizon).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t0: f64,
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// `‖(x_{k+1} − x_k)/h_k + f(t_k, x_k)‖` for every step.
    pub residuals: Vec<f64>,
    /// Constraints active after every step.
    pub projection_flags: Vec<Vec<ActiveTag>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one time")
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// CSV with header `t,x1,…,xn,residual`; the residual of a row is the
    /// one of the step that ended there, empty on the first row. Numbers
    /// carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.dim() {
            let _ = write!(out, ",x{i}");
        }
        out.push_str(",residual\n");
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "{}", fmt17(*t));
            for c in x.as_slice() {
                let _ = write!(out, ",{}", fmt17(*c));
            }
            out.push(',');
            if k > 0 {
                out.push_str(&fmt17(self.residuals[k - 1]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// One parsed CSV row: time, state coordinates, and residual if present.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub residual: Option<f64>,
}

/// Parses the output of [`Trajectory::to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty trajectory CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "t" || cols[cols.len() - 1] != "residual" {
        return Err(Error::InvalidParameter(format!("bad trajectory header: {header}")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::InvalidParameter(format!("bad number {s:?}: {e}")))
    };
    lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::InvalidParameter(format!("bad row: {line}")));
            }
            let last = fields[fields.len() - 1];
            Ok(CsvRow {
                t: num(fields[0])?,
                x: fields[1..fields.len() - 1]
                    .iter()
                    .map(|s| num(s))
                    .collect::<Result<_>>()?,
                residual: if last.is_empty() { None } else { Some(num(last)?) },
            })
        })
        .collect()
}
