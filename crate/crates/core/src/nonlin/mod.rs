//! Globally Lipschitz nonlinearities acting on coefficient vectors.

pub mod counterexample;
pub mod nemytskii;
pub mod pencil;
pub mod scalar;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::spectrum::EigenvalueSequence;

pub use counterexample::{Counterexample, CounterexampleParams};
pub use nemytskii::{Nemytskii, SineTransform};
pub use pencil::{equilibrium_spectrum, normal_hyperbolicity_gaps, EquilibriumSpectrum, HyperbolicityVerdict};
pub use scalar::ScalarFunction;

#[derive(Debug, Clone)]
pub enum Variant {
    Zero,
    DiagonalLinear(Vec<f64>),
    /// Linear map acting on modes `n, n+1` (1-based `n`) by a 2x2 block.
    GapBlocker { n: usize, block: [[f64; 2]; 2], delta_rot: f64 },
    Counterexample(Box<Counterexample>),
    NemytskiiSine1D(Box<Nemytskii>),
    /// Cut-off pointwise map shifted by a stationary profile.
    ShiftedCutoff(Box<Nemytskii>),
}

#[derive(Debug, Clone)]
pub struct NonlinearityModel {
    variant: Variant,
    declared_l: f64,
    modes: usize,
}

impl NonlinearityModel {
    pub fn zero(modes: usize) -> Self {
        Self {
            variant: Variant::Zero,
            declared_l: 0.0,
            modes,
        }
    }

    pub fn diagonal_linear(c: Vec<f64>) -> Self {
        let declared_l = c.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let modes = c.len();
        Self {
            variant: Variant::DiagonalLinear(c),
            declared_l,
            modes,
        }
    }

    pub fn diagonal_constant(c: f64, modes: usize) -> Self {
        Self::diagonal_linear(vec![c; modes])
    }

    pub fn nemytskii(f: ScalarFunction, seq: &EigenvalueSequence, modes: usize) -> Result<Self> {
        let n = Nemytskii::new(f, seq, modes)?;
        Ok(Self {
            declared_l: n.lipschitz_bound(),
            variant: Variant::NemytskiiSine1D(Box::new(n)),
            modes,
        })
    }

    /// `F(u) = P[fbar(u + G) - fbar(G)]` with `G` given by sine coefficients.
    pub fn shifted_cutoff(fbar: ScalarFunction, g: &[f64], seq: &EigenvalueSequence) -> Result<Self> {
        let n = Nemytskii::shifted(fbar, g, seq)?;
        Ok(Self {
            declared_l: n.lipschitz_bound(),
            variant: Variant::ShiftedCutoff(Box::new(n)),
            modes: g.len(),
        })
    }

    pub fn from_counterexample(ce: Counterexample) -> Self {
        let modes = ce.modes();
        Self {
            declared_l: ce.lipschitz,
            variant: Variant::Counterexample(Box::new(ce)),
            modes,
        }
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn declared_l(&self) -> f64 {
        self.declared_l
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn kind(&self) -> &'static str {
        match self.variant {
            Variant::Zero => "zero",
            Variant::DiagonalLinear(_) => "diagonal_linear",
            Variant::GapBlocker { .. } => "gap_blocker",
            Variant::Counterexample(_) => "counterexample",
            Variant::NemytskiiSine1D(_) => "nemytskii",
            Variant::ShiftedCutoff(_) => "shifted_cutoff",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.variant, Variant::Zero)
    }

    /// Writes `F(u)` into `out`; both have length `modes`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.variant {
            Variant::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Variant::DiagonalLinear(c) => {
                for ((o, x), c) in out.iter_mut().zip(u).zip(c) {
                    *o = c * x;
                }
            }
            Variant::GapBlocker { n, block, .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let (i, k) = (n - 1, *n);
                out[i] = block[0][0] * u[i] + block[0][1] * u[k];
                out[k] = block[1][0] * u[i] + block[1][1] * u[k];
            }
            Variant::Counterexample(ce) => ce.apply(u, out),
            Variant::NemytskiiSine1D(n) | Variant::ShiftedCutoff(n) => n.apply(u, out),
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.modes];
        self.apply_into(u, &mut out);
        out
    }

    /// Applies `F` to every column of a `(modes, nodes)` array.
    pub fn apply_columns(&self, u: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(u.dim());
        if self.is_zero() {
            return out;
        }
        let mut col = vec![0.0; self.modes];
        let mut res = vec![0.0; self.modes];
        for k in 0..u.ncols() {
            for (c, x) in col.iter_mut().zip(u.column(k).iter()) {
                *c = *x;
            }
            self.apply_into(&col, &mut res);
            for (o, r) in out.column_mut(k).iter_mut().zip(&res) {
                *o = *r;
            }
        }
        out
    }

    /// Jacobian: closed form where available, central differences otherwise.
    pub fn jacobian(&self, u: &[f64]) -> Array2<f64> {
        let m = self.modes;
        match &self.variant {
            Variant::Zero => Array2::zeros((m, m)),
            Variant::DiagonalLinear(c) => Array2::from_diag(&ndarray::Array1::from(c.clone())),
            Variant::GapBlocker { n, block, .. } => {
                let mut j = Array2::zeros((m, m));
                let (i, k) = (n - 1, *n);
                j[[i, i]] = block[0][0];
                j[[i, k]] = block[0][1];
                j[[k, i]] = block[1][0];
                j[[k, k]] = block[1][1];
                j
            }
            Variant::Counterexample(ce) => ce.jacobian(u),
            _ => self.fd_jacobian(u),
        }
    }

    /// Central differences with step `1e-7 max(1, |u_j|)`.
    pub fn fd_jacobian(&self, u: &[f64]) -> Array2<f64> {
        let m = self.modes;
        let mut j = Array2::zeros((m, m));
        let mut x = u.to_vec();
        for c in 0..m {
            let h = 1e-7 * u[c].abs().max(1.0);
            x[c] = u[c] + h;
            let fp = self.apply(&x);
            x[c] = u[c] - h;
            let fm = self.apply(&x);
            x[c] = u[c];
            for r in 0..m {
                j[[r, c]] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    /// Parameters for manifests and reports.
    pub fn describe(&self) -> serde_json::Value {
        match &self.variant {
            Variant::Zero => json!({"kind": "zero", "modes": self.modes}),
            Variant::DiagonalLinear(c) => json!({"kind": "diagonal_linear", "c": c}),
            Variant::GapBlocker { n, delta_rot, block } => {
                json!({"kind": "gap_blocker", "n": n, "delta_rot": delta_rot, "block": block})
            }
            Variant::Counterexample(ce) => json!({
                "kind": "counterexample",
                "L": ce.lipschitz,
                "delta": ce.delta,
                "R": ce.radius,
                "mollifier_width": ce.width,
                "kink": ce.kink,
                "clamped": ce.clamped,
                "cutoff": "quintic smoothstep",
            }),
            Variant::NemytskiiSine1D(n) => json!({
                "kind": "nemytskii",
                "f": n.function(),
                "modes": self.modes,
                "points": n.transform().points(),
            }),
            Variant::ShiftedCutoff(n) => json!({
                "kind": "shifted_cutoff",
                "f": n.function(),
                "modes": self.modes,
                "points": n.transform().points(),
                "shift": n.shift(),
            }),
        }
    }
}

/// Applies `F`, checking the vector length against the model.
pub fn apply(f: &NonlinearityModel, u: &[f64], seq: &EigenvalueSequence) -> Result<Vec<f64>> {
    if u.len() != f.modes() || f.modes() > seq.count() {
        return Err(Error::validation(format!(
            "vector of length {} for a model with {} modes",
            u.len(),
            f.modes()
        )));
    }
    Ok(f.apply(u))
}

/// Linear map on modes `N, N+1` that equalizes their effective eigenvalues,
/// optionally rotated by `delta_rot`.
pub fn build_gap_blocker(seq: &EigenvalueSequence, n: usize, delta_rot: f64, modes: usize) -> Result<NonlinearityModel> {
    if n == 0 || n + 1 > modes || modes > seq.count() {
        return Err(Error::validation(format!("need 1 <= N and N + 1 <= {modes}")));
    }
    if !(delta_rot >= 0.0) {
        return Err(Error::validation("rotation must be >= 0"));
    }
    let half = (seq.lambda(n + 1) - seq.lambda(n)) / 2.0;
    // columns are F e_N and F e_{N+1}
    let block = [[-half, -delta_rot], [delta_rot, half]];
    Ok(NonlinearityModel {
        variant: Variant::GapBlocker { n, block, delta_rot },
        declared_l: half + delta_rot,
        modes,
    })
}

/// Builds the two-equilibrium counterexample; when `R` is not given it
/// starts at 10 and doubles until both the analytic and the sampled
/// Lipschitz constants are below `L`.
pub fn build_counterexample(
    seq: &EigenvalueSequence,
    eps: f64,
    params: &CounterexampleParams,
    modes: usize,
    seed: u64,
) -> Result<NonlinearityModel> {
    let sampler = LipschitzSampler {
        count: 2000,
        radius: None,
        seed,
    };
    if let Some(r) = params.radius {
        let ce = Counterexample::new(seq, eps, params, r, modes)?;
        let bound = ce.lipschitz_bound();
        if bound >= params.lipschitz {
            return Err(Error::condition(format!(
                "R = {r} too small: Lipschitz bound {bound} >= L = {}",
                params.lipschitz
            )));
        }
        return Ok(NonlinearityModel::from_counterexample(ce));
    }
    let mut r = 10.0;
    for _ in 0..40 {
        let ce = Counterexample::new(seq, eps, params, r, modes)?;
        if ce.lipschitz_bound() < params.lipschitz {
            let model = NonlinearityModel::from_counterexample(ce);
            let sampled = lipschitz_estimate(&model, &sampler.with_radius(2.0 * r)).value;
            if sampled < params.lipschitz {
                return Ok(model);
            }
        }
        r *= 2.0;
    }
    Err(Error::condition("no radius R gives a Lipschitz constant below L"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSampler {
    pub count: usize,
    /// Radius of the sampling ball; defaults to a scale set by the model.
    pub radius: Option<f64>,
    pub seed: u64,
}

impl LipschitzSampler {
    pub fn new(count: usize, radius: f64, seed: u64) -> Self {
        Self {
            count,
            radius: Some(radius),
            seed,
        }
    }

    pub fn with_radius(self, radius: f64) -> Self {
        Self {
            radius: Some(radius),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub pairs: usize,
}

fn random_vector(rng: &mut ChaCha8Rng, m: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.random::<f64>();
    v.iter_mut().for_each(|x| *x *= r / norm);
    v
}

fn ratio(f: &NonlinearityModel, a: &[f64], b: &[f64]) -> f64 {
    let fa = f.apply(a);
    let fb = f.apply(b);
    let num = fa.iter().zip(&fb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Largest `|F(a) - F(b)| / |a - b|` over random pairs, close pairs and
/// pairs differing along a single basis vector. Deterministic given the seed.
pub fn lipschitz_estimate(f: &NonlinearityModel, sampler: &LipschitzSampler) -> LipschitzEstimate {
    let m = f.modes();
    let radius = sampler.radius.unwrap_or(match f.variant() {
        Variant::Counterexample(ce) => 2.0 * ce.radius,
        _ => 10.0,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut best: f64 = 0.0;
    let mut pairs = 0;
    let count = sampler.count.max(2);
    for i in 0..count {
        let a = random_vector(&mut rng, m, radius);
        let b = match i % 3 {
            0 => random_vector(&mut rng, m, radius),
            1 => {
                // Fixed step length: shorter steps only add cancellation error.
                let d = random_vector(&mut rng, m, 1.0);
                let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                a.iter().zip(&d).map(|(x, y)| x + 1e-3 * radius * y / dn).collect()
            }
            _ => {
                let mut b = a.clone();
                let k = rng.random_range(0..m);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                b[k] += sign * (1.0 + 9.0 * rng.random::<f64>()) * 5e-4 * radius;
                b
            }
        };
        best = best.max(ratio(f, &a, &b));
        pairs += 1;
    }
    // Each basis direction at the origin and at a random base point.
    for k in 0..m {
        let zero = vec![0.0; m];
        let mut e = zero.clone();
        e[k] = 1.0;
        best = best.max(ratio(f, &zero, &e));
        let a = random_vector(&mut rng, m, radius);
        let mut b = a.clone();
        b[k] += 1e-3 * radius;
        best = best.max(ratio(f, &a, &b));
        pairs += 2;
    }
    if let Variant::Counterexample(ce) = f.variant() {
        // Sweep the first coordinate through the kink and the cut-off band.
        let steps = 400;
        for i in 0..steps {
            let z = -0.1 * ce.radius + 1.2 * ce.radius * i as f64 / steps as f64;
            let mut a = random_vector(&mut rng, m, 2.0);
            a[0] = z;
            let mut b = a.clone();
            b[0] += 1e-3 * ce.width.max(1e-3);
            best = best.max(ratio(f, &a, &b));
            pairs += 1;
        }
    }
    LipschitzEstimate { value: best, pairs }
}
