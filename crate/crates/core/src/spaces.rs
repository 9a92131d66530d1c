//! Time grids, signals on them, weighted-in-time norms and the energy norms
//! of the phase space.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::EigenvalueSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_min: f64,
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, steps: usize) -> Result<Self> {
        if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::validation(format!(
                "time grid needs t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if steps == 0 {
            return Err(Error::validation("time grid needs at least one step"));
        }
        Ok(Self {
            t_min,
            t_max,
            steps,
        })
    }

    /// Grid on `[t_min, t_max]` whose spacing is at most `h`.
    pub fn with_max_spacing(t_min: f64, t_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::validation(format!("spacing must be positive, got {h}")));
        }
        let steps = ((t_max - t_min) / h).ceil().max(1.0) as usize;
        Self::new(t_min, t_max, steps)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn spacing(&self) -> f64 {
        (self.t_max - self.t_min) / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_max
        } else {
            self.t_min + k as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|k| self.t(k)).collect()
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let k = ((t - self.t_min) / self.spacing()).round();
        k.clamp(0.0, self.steps as f64) as usize
    }

    /// Same interval with twice as many steps.
    pub fn refined(&self) -> Self {
        Self {
            steps: 2 * self.steps,
            ..*self
        }
    }
}

/// Per-mode coefficients `u_n(t_k)` stored as a `(modes, nodes)` array.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSignal {
    grid: TimeGrid,
    coeffs: Array2<f64>,
}

impl WeightedSignal {
    pub fn new(grid: TimeGrid, coeffs: Array2<f64>) -> Result<Self> {
        if coeffs.ncols() != grid.nodes() {
            return Err(Error::validation(format!(
                "signal has {} nodes, grid has {}",
                coeffs.ncols(),
                grid.nodes()
            )));
        }
        if coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("signal contains non-finite entries"));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: TimeGrid, modes: usize) -> Self {
        Self {
            grid,
            coeffs: Array2::zeros((modes, grid.nodes())),
        }
    }

    /// Samples `f(mode_index_0_based, t)` on the grid.
    pub fn from_fn(grid: TimeGrid, modes: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let times = grid.times();
        let coeffs = Array2::from_shape_fn((modes, grid.nodes()), |(n, k)| f(n, times[k]));
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<f64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<f64> {
        self.coeffs
    }

    pub fn mode_count(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn mode(&self, n: usize) -> ArrayView1<'_, f64> {
        self.coeffs.row(n)
    }

    /// State vector at node `k`.
    pub fn at(&self, k: usize) -> Array1<f64> {
        self.coeffs.column(k).to_owned()
    }

    pub fn last(&self) -> Array1<f64> {
        self.at(self.grid.steps())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: &self.coeffs * c,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: &self.coeffs - &other.coeffs,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.coeffs.dim() != other.coeffs.dim() {
            return Err(Error::validation("signals live on different grids or mode counts"));
        }
        Ok(())
    }

    /// Central-difference time derivative (one-sided second order at the ends).
    pub fn time_derivative(&self) -> Self {
        let h = self.grid.spacing();
        let k_max = self.grid.steps();
        let mut out = Array2::zeros(self.coeffs.dim());
        for (n, row) in self.coeffs.outer_iter().enumerate() {
            for k in 0..=k_max {
                out[[n, k]] = if k_max < 2 {
                    (row[k_max.min(1)] - row[0]) / h
                } else if k == 0 {
                    (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * h)
                } else if k == k_max {
                    (3.0 * row[k] - 4.0 * row[k - 1] + row[k - 2]) / (2.0 * h)
                } else {
                    (row[k + 1] - row[k - 1]) / (2.0 * h)
                };
            }
        }
        Self {
            grid: self.grid,
            coeffs: out,
        }
    }

    /// Writes columns `t, mode_1, ..., mode_M`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(&mut file)
    }

    pub fn write_csv_to(&self, out: &mut impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.mode_count()).map(|n| format!("mode_{n}")));
        w.write_record(&header)?;
        for k in 0..self.grid.nodes() {
            let mut rec = vec![format_f64(self.grid.t(k))];
            rec.extend(self.coeffs.column(k).iter().map(|x| format_f64(*x)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }
}

/// Position and velocity signals on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSignal {
    pub u: WeightedSignal,
    pub v: WeightedSignal,
}

impl PhaseSignal {
    pub fn new(u: WeightedSignal, v: WeightedSignal) -> Result<Self> {
        if u.grid() != v.grid() || u.coeffs().dim() != v.coeffs().dim() {
            return Err(Error::validation("position and velocity shapes differ"));
        }
        Ok(Self { u, v })
    }

    pub fn zeros(grid: TimeGrid, modes: usize) -> Self {
        Self {
            u: WeightedSignal::zeros(grid, modes),
            v: WeightedSignal::zeros(grid, modes),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        self.u.grid()
    }

    pub fn mode_count(&self) -> usize {
        self.u.mode_count()
    }

    /// Phase-space point at node `k`.
    pub fn state(&self, k: usize, eps: f64) -> EnergyVector {
        EnergyVector {
            u: self.u.coeffs().column(k).to_vec(),
            v: self.v.coeffs().column(k).to_vec(),
            eps,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            u: self.u.add(&other.u)?,
            v: self.v.add(&other.v)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            u: self.u.sub(&other.u)?,
            v: self.v.sub(&other.v)?,
        })
    }
}

/// Shortest round-trip representation, always with a '.' decimal point.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn check_modes(signal: &WeightedSignal, seq: &EigenvalueSequence) -> Result<()> {
    if signal.mode_count() > seq.count() {
        return Err(Error::validation(format!(
            "signal has {} modes, spectrum only {}",
            signal.mode_count(),
            seq.count()
        )));
    }
    Ok(())
}

fn sobolev_weights(seq: &EigenvalueSequence, modes: usize, s: f64) -> Vec<f64> {
    seq.values()[..modes]
        .iter()
        .map(|l| if s == 0.0 { 1.0 } else { l.powf(s) })
        .collect()
}

/// Per-node `sum_n lambda_n^s u_n(t_k)^2`.
fn pointwise_sq(signal: &WeightedSignal, weights: &[f64]) -> Vec<f64> {
    let c = signal.coeffs();
    (0..signal.grid().nodes())
        .map(|k| {
            c.column(k)
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x * x)
                .sum()
        })
        .collect()
}

/// `(int e^{2 theta t} ||u(t)||_{H^s}^2 dt)^{1/2}` by the trapezoid rule.
pub fn weighted_l2_norm(
    signal: &WeightedSignal,
    theta: f64,
    s: f64,
    seq: &EigenvalueSequence,
) -> Result<f64> {
    check_modes(signal, seq)?;
    let weights = sobolev_weights(seq, signal.mode_count(), s);
    let sq = pointwise_sq(signal, &weights);
    let grid = signal.grid();
    let h = grid.spacing();
    let last = grid.steps();
    let mut acc = 0.0;
    for (k, v) in sq.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        // Weight folded into the exponent so tiny values do not underflow early.
        let term = (2.0 * theta * grid.t(k) + v.ln()).exp();
        acc += if k == 0 || k == last { 0.5 * term } else { term };
    }
    Ok((acc * h).sqrt())
}

/// `max_k e^{theta t_k} ||u(t_k)||_{H^s}`.
pub fn weighted_sup_norm(
    signal: &WeightedSignal,
    theta: f64,
    s: f64,
    seq: &EigenvalueSequence,
) -> Result<f64> {
    check_modes(signal, seq)?;
    let weights = sobolev_weights(seq, signal.mode_count(), s);
    let sq = pointwise_sq(signal, &weights);
    let grid = signal.grid();
    Ok(sq
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (theta * grid.t(k) + 0.5 * v.ln()).exp())
        .fold(0.0, f64::max))
}

/// Default backward window length: tails beyond it are far below double precision.
pub fn default_window(theta: f64, margin: f64) -> f64 {
    let mut t = 40.0 / theta;
    if margin > 0.0 {
        t = t.max(30.0 / margin);
    }
    t
}

/// Phase-space point `(u, du/dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyVector {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub eps: f64,
}

impl EnergyVector {
    pub fn new(u: Vec<f64>, v: Vec<f64>, eps: f64) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::validation(format!(
                "state and velocity lengths differ: {} vs {}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::validation("energy vector has non-finite entries"));
        }
        if !(eps >= 0.0) {
            return Err(Error::validation(format!("eps must be >= 0, got {eps}")));
        }
        Ok(Self { u, v, eps })
    }

    pub fn zeros(modes: usize, eps: f64) -> Self {
        Self {
            u: vec![0.0; modes],
            v: vec![0.0; modes],
            eps,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
            eps: self.eps,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
            eps: self.eps,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| c * x).collect(),
            v: self.v.iter().map(|x| c * x).collect(),
            eps: self.eps,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }
}

fn check_energy(xi: &EnergyVector, seq: &EigenvalueSequence) -> Result<()> {
    if xi.u.len() != xi.v.len() || xi.len() > seq.count() {
        return Err(Error::validation(format!(
            "energy vector of length {} does not fit a spectrum of {} modes",
            xi.len(),
            seq.count()
        )));
    }
    Ok(())
}

/// `sqrt(eps ||v||^2 + ||v||_{H^-1}^2 + ||u||_{H^1}^2)`.
pub fn energy_norm(xi: &EnergyVector, seq: &EigenvalueSequence) -> Result<f64> {
    check_energy(xi, seq)?;
    let mut acc = 0.0;
    for (n, (u, v)) in xi.u.iter().zip(&xi.v).enumerate() {
        let l = seq.values()[n];
        acc += xi.eps * v * v + v * v / l + l * u * u;
    }
    Ok(acc.sqrt())
}

/// `sqrt(eps ||v||_{H^1}^2 + ||u||_{H^2}^2 + ||v||^2)`.
pub fn energy1_norm(xi: &EnergyVector, seq: &EigenvalueSequence) -> Result<f64> {
    check_energy(xi, seq)?;
    let mut acc = 0.0;
    for (n, (u, v)) in xi.u.iter().zip(&xi.v).enumerate() {
        let l = seq.values()[n];
        acc += xi.eps * l * v * v + l * l * u * u + v * v;
    }
    Ok(acc.sqrt())
}

/// `||u||_{H^s}` of a coefficient vector.
pub fn sobolev_norm(u: &[f64], s: f64, seq: &EigenvalueSequence) -> f64 {
    u.iter()
        .zip(seq.values())
        .map(|(x, l)| l.powf(s) * x * x)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn squares(count: usize) -> EigenvalueSequence {
        EigenvalueSequence::dirichlet(PI, count).unwrap()
    }

    #[test]
    fn grid_nodes_are_exact() {
        let g = TimeGrid::new(-2.0, 0.0, 8).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.t(3), -2.0 + 3.0 * 0.25);
        assert_eq!(g.t(8), 0.0);
        assert!(TimeGrid::new(0.0, 0.0, 3).is_err());
    }

    #[test]
    fn constant_mode_matches_closed_form() {
        let (theta, t) = (1.3, 4.0);
        let seq = squares(4);
        let g = TimeGrid::new(-t, 0.0, 4000).unwrap();
        let sig = WeightedSignal::from_fn(g, 1, |_, _| 1.0);
        let exact = ((1.0 - (-2.0 * theta * t).exp()) / (2.0 * theta)).sqrt();
        let got = weighted_l2_norm(&sig, theta, 0.0, &seq).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-6);
    }

    #[test]
    fn unit_weight_is_plain_l2() {
        let seq = squares(4);
        let g = TimeGrid::new(0.0, 1.0, 2000).unwrap();
        let sig = WeightedSignal::from_fn(g, 1, |_, t| t);
        let got = weighted_l2_norm(&sig, 0.0, 0.0, &seq).unwrap();
        assert_relative_eq!(got, (1.0f64 / 3.0).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn parseval_across_modes() {
        let seq = squares(4);
        let g = TimeGrid::new(-3.0, 0.0, 300).unwrap();
        let both = WeightedSignal::from_fn(g, 2, |n, t| if n == 0 { t.sin() } else { t.cos() });
        let only0 = WeightedSignal::from_fn(g, 2, |n, t| if n == 0 { t.sin() } else { 0.0 });
        let only1 = WeightedSignal::from_fn(g, 2, |n, t| if n == 1 { t.cos() } else { 0.0 });
        for s in [0.0, 1.0] {
            let a = weighted_l2_norm(&both, 0.7, s, &seq).unwrap();
            let b = weighted_l2_norm(&only0, 0.7, s, &seq).unwrap();
            let c = weighted_l2_norm(&only1, 0.7, s, &seq).unwrap();
            assert_relative_eq!(a * a, b * b + c * c, max_relative = 1e-13);
        }
    }

    #[test]
    fn sup_norm_examples() {
        let seq = squares(4);
        let theta = 2.0;
        let g = TimeGrid::new(-5.0, 0.0, 100).unwrap();
        let sig = WeightedSignal::from_fn(g, 1, |_, t| (-theta * t).exp());
        assert_relative_eq!(weighted_sup_norm(&sig, theta, 0.0, &seq).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(weighted_sup_norm(&WeightedSignal::zeros(g, 3), theta, 0.0, &seq).unwrap(), 0.0);
        let mu = -1.0557280900008412;
        let sig = WeightedSignal::from_fn(g, 1, |_, t| (mu * t).exp());
        assert_relative_eq!(weighted_sup_norm(&sig, theta, 0.0, &seq).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn energy_norm_examples() {
        let seq = squares(4);
        let xi = EnergyVector::new(vec![1.0, 0.0], vec![2.0, 0.0], 0.05).unwrap();
        assert_relative_eq!(energy_norm(&xi, &seq).unwrap(), 5.2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(energy1_norm(&xi, &seq).unwrap(), 5.2f64.sqrt(), epsilon = 1e-14);
        let xi0 = xi.clone().with_eps(0.0);
        assert_relative_eq!(energy_norm(&xi0, &seq).unwrap(), 5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(energy1_norm(&xi0, &seq).unwrap(), 5f64.sqrt(), epsilon = 1e-14);
        assert_eq!(energy_norm(&EnergyVector::zeros(3, 0.1), &seq).unwrap(), 0.0);
        assert_eq!(energy1_norm(&EnergyVector::zeros(3, 0.1), &seq).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_is_second_order() {
        let seq = squares(4);
        let norm = |steps| {
            let g = TimeGrid::new(-3.0, 0.0, steps).unwrap();
            let sig = WeightedSignal::from_fn(g, 2, |n, t| (t * (n + 1) as f64).sin() + 0.3);
            weighted_l2_norm(&sig, 0.8, 1.0, &seq).unwrap()
        };
        let (a, b, c) = (norm(50), norm(100), norm(200));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn csv_export_layout() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let sig = WeightedSignal::from_fn(g, 2, |n, t| n as f64 + t);
        let mut buf = Vec::new();
        sig.write_csv_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,mode_1,mode_2\n0.0,0.0,1.0\n0.5,0.5,1.5\n1.0,1.0,2.0\n");
    }
}
