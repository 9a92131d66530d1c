//! Diagonal nonlinearity with two equilibria whose linearizations pair up
//! eigenvalues at alternating positions, so that no index separates the
//! spectrum at both equilibria.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::scalar::{cutoff, cutoff_deriv, SMOOTHSTEP_DERIV_MAX};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::spectrum::{critical_index, CriticalIndex, EigenvalueSequence};

/// Default mollifier width as a fraction of `R`.
pub const DEFAULT_MOLLIFIER_FRACTION: f64 = 0.05;

const GL_POINTS: usize = 64;
const PANELS: usize = 8;

fn gauss() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(GL_POINTS))
}

/// `exp(-1 / (1 - s^2))` on `(-1, 1)`.
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// `int_{-1}^{1} bump`.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        (0..2 * PANELS)
            .map(|i| {
                let a = -1.0 + i as f64 / PANELS as f64;
                let b = a + 1.0 / PANELS as f64;
                gauss().integrate(a, b, bump)
            })
            .sum()
    })
}

/// `(int_{-1}^{d} rho, int_{-1}^{d} (d - s) rho)` for the unit-width normalized bump.
fn bump_moments(d: f64) -> (f64, f64) {
    if d <= -1.0 {
        return (0.0, 0.0);
    }
    if d >= 1.0 {
        return (1.0, d);
    }
    let mass = bump_mass();
    let (mut cdf, mut ramp) = (0.0, 0.0);
    let step = (d + 1.0) / PANELS as f64;
    for i in 0..PANELS {
        let a = -1.0 + i as f64 * step;
        cdf += gauss().integrate(a, a + step, bump);
        ramp += gauss().integrate(a, a + step, |s| (d - s) * bump(s));
    }
    (cdf / mass, ramp / mass)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub lipschitz: f64,
    pub delta: f64,
    /// Equilibrium distance; chosen automatically when absent.
    pub radius: Option<f64>,
    pub mollifier_fraction: f64,
}

impl CounterexampleParams {
    pub fn new(lipschitz: f64, delta: f64) -> Self {
        Self {
            lipschitz,
            delta,
            radius: None,
            mollifier_fraction: DEFAULT_MOLLIFIER_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub lipschitz: f64,
    pub delta: f64,
    pub radius: f64,
    /// Mollifier half-width.
    pub width: f64,
    pub lambda1: f64,
    /// Slope of `f_1` near 0.
    pub slope_left: f64,
    /// Slope of `f_1` near `R`.
    pub slope_right: f64,
    pub kink: f64,
    /// Diagonal derivatives at `u = 0` (index 0 is `f_1'(0)`).
    pub f_plus: Vec<f64>,
    /// Diagonal derivatives at `u = R e_1`.
    pub f_minus: Vec<f64>,
    pub n_cr: CriticalIndex,
    /// Entries whose formula value exceeded the clamp `L - delta/2`.
    pub clamped: Vec<usize>,
}

impl Counterexample {
    /// Builds the model for a fixed `R`; validates the inequalities on `L`.
    pub fn new(seq: &EigenvalueSequence, eps: f64, params: &CounterexampleParams, radius: f64, modes: usize) -> Result<Self> {
        let l = params.lipschitz;
        let delta = params.delta;
        if modes < 2 || modes > seq.count() {
            return Err(Error::validation(format!("mode count {modes} out of range")));
        }
        if !(delta > 0.0) || !(l > 0.0) || !(radius > 0.0) {
            return Err(Error::validation("L, delta and R must be positive"));
        }
        let lambda1 = seq.lambda(1);
        if !(l - delta > lambda1) {
            return Err(Error::condition(format!(
                "need L - delta > lambda_1: {l} - {delta} <= {lambda1}"
            )));
        }
        let n_cr = critical_index(seq, eps);
        let last_gap_index = match n_cr {
            CriticalIndex::Unbounded => modes - 1,
            CriticalIndex::Index(k) => k.min(modes - 1),
        };
        if let Some((n, gap)) = (1..=last_gap_index)
            .map(|n| (n, seq.lambda(n + 1) - seq.lambda(n)))
            .find(|(_, g)| *g >= 2.0 * l)
        {
            return Err(Error::condition(format!(
                "need every gap up to the critical index below 2L: lambda_{} - lambda_{n} = {gap} >= {}",
                n + 1,
                2.0 * l
            )));
        }
        let cap = l - delta / 2.0;
        let mut clamped = Vec::new();
        let mut clamp = |idx: usize, v: f64| -> f64 {
            if v.abs() > cap {
                clamped.push(idx + 1);
                v.signum() * cap
            } else {
                v
            }
        };
        let keep = |lower: usize| n_cr.covers(lower);
        let mut f_plus = vec![0.0; modes];
        let mut f_minus = vec![0.0; modes];
        // pairs (2k-1, 2k) at 0 and (2k, 2k+1) at R e_1, 1-based
        let mut lower = 1;
        while lower < modes {
            if keep(lower) {
                let half = (seq.lambda(lower + 1) - seq.lambda(lower)) / 2.0;
                f_plus[lower - 1] = clamp(lower - 1, -half);
                f_plus[lower] = clamp(lower, half);
            }
            lower += 2;
        }
        let mut lower = 2;
        while lower < modes {
            if keep(lower) {
                let half = (seq.lambda(lower + 1) - seq.lambda(lower)) / 2.0;
                f_minus[lower - 1] = clamp(lower - 1, -half);
                f_minus[lower] = clamp(lower, half);
            }
            lower += 2;
        }
        let slope_left = if n_cr.covers(1) {
            f_plus[0]
        } else {
            -((seq.lambda(2) - lambda1) / 2.0).min(cap)
        };
        f_plus[0] = slope_left;
        let slope_right = l - delta;
        f_minus[0] = slope_right;
        let kink = radius * (slope_right - lambda1) / (slope_right - slope_left);
        let width = (params.mollifier_fraction * radius)
            .min(0.5 * kink)
            .min(0.5 * (radius - kink));
        Ok(Self {
            lipschitz: l,
            delta,
            radius,
            width,
            lambda1,
            slope_left,
            slope_right,
            kink,
            f_plus,
            f_minus,
            n_cr,
            clamped,
        })
    }

    pub fn modes(&self) -> usize {
        self.f_plus.len()
    }

    /// Mollified `max{slope_left z, slope_right (z - R) + lambda_1 R}`.
    pub fn f1(&self, z: f64) -> f64 {
        let d = z - self.kink;
        if d <= -self.width {
            self.slope_left * z
        } else if d >= self.width {
            self.slope_right * (z - self.radius) + self.lambda1 * self.radius
        } else {
            let (_, ramp) = bump_moments(d / self.width);
            self.slope_left * z + (self.slope_right - self.slope_left) * self.width * ramp
        }
    }

    pub fn f1_deriv(&self, z: f64) -> f64 {
        let d = z - self.kink;
        if d <= -self.width {
            self.slope_left
        } else if d >= self.width {
            self.slope_right
        } else {
            let (cdf, _) = bump_moments(d / self.width);
            self.slope_left + (self.slope_right - self.slope_left) * cdf
        }
    }

    /// Coefficient multiplying `atan(u_n)` for `n >= 2`.
    fn blend(&self, n: usize, u1: f64) -> f64 {
        let r = self.radius;
        self.f_plus[n] * cutoff(u1 / r) + self.f_minus[n] * cutoff(1.0 - u1 / r)
    }

    fn blend_deriv(&self, n: usize, u1: f64) -> f64 {
        let r = self.radius;
        (self.f_plus[n] * cutoff_deriv(u1 / r) - self.f_minus[n] * cutoff_deriv(1.0 - u1 / r)) / r
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        out[0] = self.f1(u[0]);
        for n in 1..self.modes() {
            out[n] = if self.f_plus[n] == 0.0 && self.f_minus[n] == 0.0 {
                0.0
            } else {
                self.blend(n, u[0]) * u[n].atan()
            };
        }
    }

    pub fn jacobian(&self, u: &[f64]) -> Array2<f64> {
        let m = self.modes();
        let mut j = Array2::zeros((m, m));
        j[[0, 0]] = self.f1_deriv(u[0]);
        for n in 1..m {
            if self.f_plus[n] == 0.0 && self.f_minus[n] == 0.0 {
                continue;
            }
            j[[n, 0]] = self.blend_deriv(n, u[0]) * u[n].atan();
            j[[n, n]] = self.blend(n, u[0]) / (1.0 + u[n] * u[n]);
        }
        j
    }

    /// `||D|| + ||c||` for the Jacobian split into its diagonal and first column.
    pub fn lipschitz_bound(&self) -> f64 {
        let diag = self.slope_left.abs().max(self.slope_right.abs());
        let mut diag_n: f64 = 0.0;
        let mut col_sq = 0.0;
        for n in 1..self.modes() {
            let m = self.f_plus[n].abs().max(self.f_minus[n].abs());
            diag_n = diag_n.max(m);
            col_sq += m * m;
        }
        let cross = 2.0 * SMOOTHSTEP_DERIV_MAX / self.radius * FRAC_PI_2 * col_sq.sqrt();
        diag.max(diag_n) + cross
    }

    /// `0` and `R e_1`.
    pub fn equilibria(&self) -> (Vec<f64>, Vec<f64>) {
        let plus = vec![0.0; self.modes()];
        let mut minus = vec![0.0; self.modes()];
        minus[0] = self.radius;
        (plus, minus)
    }
}
