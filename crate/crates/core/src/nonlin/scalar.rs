//! Scalar functions used pointwise, smoothstep cut-offs and the smooth clamp.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3` with `s` clamped to `[0, 1]`.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

pub fn smoothstep_deriv(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (s - 1.0) * (s - 1.0)
}

pub fn smoothstep_second(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    60.0 * s * (s - 1.0) * (2.0 * s - 1.0)
}

/// Degree-9 smoothstep, four times continuously differentiable at both ends.
pub fn smoothstep9(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s.powi(5) * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + 70.0 * s))))
}

pub fn smoothstep9_deriv(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    630.0 * (s * (1.0 - s)).powi(4)
}

pub fn smoothstep9_second(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    2520.0 * (s * (1.0 - s)).powi(3) * (1.0 - 2.0 * s)
}

/// Largest value of `|smoothstep'|`, attained at `s = 1/2`.
pub const SMOOTHSTEP_DERIV_MAX: f64 = 1.875;

/// `1` for `z <= 0`, `0` for `z >= 1/2`.
pub fn cutoff(z: f64) -> f64 {
    1.0 - smoothstep(2.0 * z)
}

pub fn cutoff_deriv(z: f64) -> f64 {
    -2.0 * smoothstep_deriv(2.0 * z)
}

/// Odd smooth clamp: identity on `|u| <= a`, slope decaying to zero over
/// `[a, a + w]` and constant `a + w/2` beyond.
pub fn smooth_clamp(u: f64, a: f64, w: f64) -> f64 {
    let x = u.abs();
    if x <= a {
        return u;
    }
    let s = ((x - a) / w).min(1.0);
    // int_0^s (1 - smoothstep) = s - (s^6 - 3 s^5 + 2.5 s^4)
    let integral = s - s.powi(4) * (s * (s - 3.0) + 2.5);
    u.signum() * (a + w * integral)
}

pub fn smooth_clamp_deriv(u: f64, a: f64, w: f64) -> f64 {
    let x = u.abs();
    if x <= a {
        1.0
    } else {
        1.0 - smoothstep((x - a) / w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFunction {
    Zero,
    Linear { slope: f64 },
    Constant { value: f64 },
    /// `amplitude * sin(frequency * x)`.
    Sine { amplitude: f64, frequency: f64 },
    /// `amplitude * tanh(x)`.
    Tanh { amplitude: f64 },
    /// Piecewise linear through `(x, f)` pairs, constant outside.
    Table { x: Vec<f64>, f: Vec<f64> },
    /// `base(smooth_clamp(x, radius, width))`.
    Cutoff {
        base: Box<ScalarFunction>,
        radius: f64,
        width: f64,
    },
}

impl ScalarFunction {
    pub fn table(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if x.len() != f.len() || x.len() < 2 {
            return Err(Error::validation("table needs at least two (x, f) rows of equal length"));
        }
        for i in 1..x.len() {
            if !(x[i] > x[i - 1]) {
                return Err(Error::validation(format!(
                    "table x values must increase strictly, row {}",
                    i + 1
                )));
            }
        }
        if x.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::validation("table has non-finite entries"));
        }
        Ok(ScalarFunction::Table { x, f })
    }

    pub fn cutoff(base: ScalarFunction, radius: f64, width: f64) -> Self {
        ScalarFunction::Cutoff {
            base: Box::new(base),
            radius,
            width,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            ScalarFunction::Zero => 0.0,
            ScalarFunction::Linear { slope } => slope * u,
            ScalarFunction::Constant { value } => *value,
            ScalarFunction::Sine {
                amplitude,
                frequency,
            } => amplitude * (frequency * u).sin(),
            ScalarFunction::Tanh { amplitude } => amplitude * u.tanh(),
            ScalarFunction::Table { x, f } => {
                let n = x.len();
                if u <= x[0] {
                    return f[0];
                }
                if u >= x[n - 1] {
                    return f[n - 1];
                }
                let i = x.partition_point(|v| *v <= u) - 1;
                let t = (u - x[i]) / (x[i + 1] - x[i]);
                f[i] + t * (f[i + 1] - f[i])
            }
            ScalarFunction::Cutoff {
                base,
                radius,
                width,
            } => base.eval(smooth_clamp(u, *radius, *width)),
        }
    }

    /// Derivative; one-sided (right) slope at table breakpoints.
    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            ScalarFunction::Zero | ScalarFunction::Constant { .. } => 0.0,
            ScalarFunction::Linear { slope } => *slope,
            ScalarFunction::Sine {
                amplitude,
                frequency,
            } => amplitude * frequency * (frequency * u).cos(),
            ScalarFunction::Tanh { amplitude } => amplitude / u.cosh().powi(2),
            ScalarFunction::Table { x, f } => {
                let n = x.len();
                if u < x[0] || u >= x[n - 1] {
                    return 0.0;
                }
                let i = x.partition_point(|v| *v <= u) - 1;
                (f[i + 1] - f[i]) / (x[i + 1] - x[i])
            }
            ScalarFunction::Cutoff {
                base,
                radius,
                width,
            } => {
                base.deriv(smooth_clamp(u, *radius, *width)) * smooth_clamp_deriv(u, *radius, *width)
            }
        }
    }

    /// Upper bound of `|f'|` on `[lo, hi]`.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            ScalarFunction::Zero | ScalarFunction::Constant { .. } => 0.0,
            ScalarFunction::Linear { slope } => slope.abs(),
            ScalarFunction::Sine {
                amplitude,
                frequency,
            } => (amplitude * frequency).abs(),
            ScalarFunction::Tanh { amplitude } => amplitude.abs(),
            ScalarFunction::Table { x, f } => (1..x.len())
                .filter(|&i| x[i] > lo && x[i - 1] < hi)
                .map(|i| ((f[i] - f[i - 1]) / (x[i] - x[i - 1])).abs())
                .fold(0.0, f64::max),
            ScalarFunction::Cutoff {
                base,
                radius,
                width,
            } => {
                let cap = radius + 0.5 * width;
                base.lipschitz_on(smooth_clamp(lo, *radius, *width).max(-cap), smooth_clamp(hi, *radius, *width).min(cap))
            }
        }
    }

    /// Global bound of `|f'|`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz_on(f64::NEG_INFINITY, f64::INFINITY)
    }
}
