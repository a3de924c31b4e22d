use crate::error::{Error, Result};

/// Data of the linear differential inequality `a′ ≤ λa + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GronwallInputs {
    pub a0: f64,
    pub lambda: f64,
    /// `(t, b(t))` on a strictly increasing grid starting at 0.
    pub b_samples: Vec<(f64, f64)>,
}

/// `e^{λt}a(0) + ∫₀ᵗ e^{λ(t−s)} b(s) ds` on the sample grid, with the
/// integral evaluated by the trapezoidal rule.
pub fn gronwall_envelope(inputs: &GronwallInputs) -> Result<Vec<(f64, f64)>> {
    let s = &inputs.b_samples;
    match s.first() {
        Some((t, _)) if *t == 0.0 => {}
        _ => return Err(Error::InvalidParameter("sample grid must start at t = 0".into())),
    }
    if s.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidParameter(
            "sample times must be strictly increasing".into(),
        ));
    }
    let lam = inputs.lambda;
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(s.len());
    out.push((0.0, inputs.a0));
    for w in s.windows(2) {
        let ((ta, ba), (tb, bb)) = (w[0], w[1]);
        let dt = tb - ta;
        let decay = (lam * dt).exp();
        integral = decay * integral + 0.5 * dt * (decay * ba + bb);
        out.push((tb, (lam * tb).exp() * inputs.a0 + integral));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, t_end: f64, b: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|k| {
                let t = t_end * k as f64 / n as f64;
                (t, b(t))
            })
            .collect()
    }

    #[test]
    fn pure_decay() {
        let env = gronwall_envelope(&GronwallInputs {
            a0: 1.0,
            lambda: -1.0,
            b_samples: grid(100, 5.0, |_| 0.0),
        })
        .unwrap();
        for (t, v) in env {
            assert!((v - (-t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_forcing_without_decay() {
        let env = gronwall_envelope(&GronwallInputs {
            a0: 0.0,
            lambda: 0.0,
            b_samples: grid(50, 3.0, |_| 0.7),
        })
        .unwrap();
        for (t, v) in env {
            assert!((v - 0.7 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_forcing_with_rate() {
        for lam in [-0.8, 0.5] {
            let n = 1000;
            let t_end = 4.0;
            let env = gronwall_envelope(&GronwallInputs {
                a0: 0.0,
                lambda: lam,
                b_samples: grid(n, t_end, |_| 1.0),
            })
            .unwrap();
            let dt = t_end / n as f64;
            for (t, v) in env {
                let exact = ((lam * t).exp() - 1.0) / lam;
                // trapezoid error ≤ t·dt²·max|λ² e^{λs}|/12
                let err = t * dt * dt * lam * lam * (lam * t).exp().max(1.0) / 12.0;
                assert!((v - exact).abs() <= err + 1e-13, "lam={lam} t={t}");
            }
        }
    }

    #[test]
    fn grid_validation() {
        let bad = GronwallInputs {
            a0: 1.0,
            lambda: 0.0,
            b_samples: vec![(0.0, 0.0), (1.0, 0.0), (1.0, 0.0)],
        };
        assert!(gronwall_envelope(&bad).is_err());
        let bad = GronwallInputs {
            a0: 1.0,
            lambda: 0.0,
            b_samples: vec![(0.5, 0.0)],
        };
        assert!(gronwall_envelope(&bad).is_err());
    }
}
