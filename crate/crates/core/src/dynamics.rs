//! Forward evolution of `eps u'' + u' + A u = F(u)` in the retained modes,
//! invariance checks of constructed charts and energy-estimate audits.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::manifold::{construct_point, ManifoldChart, PerronConfig};
use crate::nonlin::NonlinearityModel;
use crate::propagator::Propagator;
use crate::spaces::{energy_norm, format_f64, EnergyVector, PhaseSignal, TimeGrid, WeightedSignal};
use crate::spectrum::{projector_coefficients, EigenvalueSequence};

/// Default step of the forward integrator.
pub const DEFAULT_STEP: f64 = 5e-3;

/// Steps per window of the collocation method.
const WINDOW_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Two-stage exponential Runge-Kutta: exact linear part, `F` corrected at
    /// the predicted end point. Second order.
    Etd2Rk,
    /// Windowed Picard iteration of the variation-of-constants formula with
    /// `F` interpolated by local cubics. Fourth order.
    Collocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub eps: f64,
    pub dt: f64,
    pub horizon: f64,
    pub method: Method,
    /// Also run at `dt/2` and report the largest energy-norm difference.
    pub error_estimate: bool,
}

impl EvolveConfig {
    pub fn new(eps: f64, dt: f64, horizon: f64) -> Self {
        Self {
            eps,
            dt,
            horizon,
            method: Method::Etd2Rk,
            error_estimate: false,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_error_estimate(mut self) -> Self {
        self.error_estimate = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation(format!("step must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::validation(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::validation(format!("eps must be >= 0, got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: PhaseSignal,
    pub eps: f64,
    pub method: Method,
    /// Largest energy-norm difference against the half-step run.
    pub step_error: Option<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        self.states.grid()
    }

    pub fn state(&self, k: usize) -> EnergyVector {
        self.states.state(k, self.eps)
    }

    pub fn last_state(&self) -> EnergyVector {
        self.state(self.grid().steps())
    }

    pub fn energy_norms(&self, seq: &EigenvalueSequence) -> Result<Vec<f64>> {
        (0..self.grid().nodes())
            .map(|k| energy_norm(&self.state(k), seq))
            .collect()
    }

    /// Columns `t, energy`, then `u_n` and `v_n` when `coefficients` is set.
    pub fn write_csv(&self, path: &Path, seq: &EigenvalueSequence, coefficients: bool) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv_to(&mut out, seq, coefficients)
            .and_then(|_| out.flush().map_err(|e| Error::io(path, e)))
    }

    pub fn write_csv_to(&self, out: &mut impl Write, seq: &EigenvalueSequence, coefficients: bool) -> Result<()> {
        let m = self.states.mode_count();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["t".to_string(), "energy".to_string()];
        if coefficients {
            header.extend((1..=m).map(|n| format!("u_{n}")));
            header.extend((1..=m).map(|n| format!("v_{n}")));
        }
        w.write_record(&header)?;
        let norms = self.energy_norms(seq)?;
        for (k, e) in norms.iter().enumerate() {
            let mut row = vec![format_f64(self.grid().t(k)), format_f64(*e)];
            if coefficients {
                row.extend(self.states.u.coeffs().column(k).iter().map(|x| format_f64(*x)));
                row.extend(self.states.v.coeffs().column(k).iter().map(|x| format_f64(*x)));
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Per-mode exact propagation of the linear part.
struct LinearPart {
    eps: f64,
    lambdas: Vec<f64>,
    props: Vec<Propagator>,
}

impl LinearPart {
    fn new(seq: &EigenvalueSequence, modes: usize, eps: f64, dt: f64) -> Self {
        let lambdas = seq.values()[..modes].to_vec();
        let props = lambdas
            .iter()
            .map(|&l| {
                if eps == 0.0 {
                    Propagator::scalar(-l, dt)
                } else {
                    let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -l / eps, -1.0 / eps]);
                    let b = DVector::from_row_slice(&[0.0, 1.0 / eps]);
                    Propagator::new(&m, &b, dt)
                }
            })
            .collect();
        Self { eps, lambdas, props }
    }

    fn parabolic(&self) -> bool {
        self.eps == 0.0
    }
}

fn check_inputs(xi0: &EnergyVector, f: &NonlinearityModel, seq: &EigenvalueSequence) -> Result<()> {
    if xi0.len() != f.modes() || f.modes() > seq.count() {
        return Err(Error::validation(format!(
            "initial state has {} modes, nonlinearity {}, spectrum {}",
            xi0.len(),
            f.modes(),
            seq.count()
        )));
    }
    Ok(())
}

/// Velocity slaved to the position at `eps = 0`.
fn slaved_velocity(u: &[f64], fu: &[f64], lambdas: &[f64]) -> Vec<f64> {
    u.iter().zip(fu).zip(lambdas).map(|((x, g), l)| g - l * x).collect()
}

pub fn evolve(
    xi0: &EnergyVector,
    f: &NonlinearityModel,
    seq: &EigenvalueSequence,
    cfg: &EvolveConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_inputs(xi0, f, seq)?;
    let grid = TimeGrid::with_max_spacing(0.0, cfg.horizon, cfg.dt)?;
    let states = run(xi0, f, seq, cfg.eps, &grid, cfg.method)?;
    let step_error = if cfg.error_estimate {
        let fine = run(xi0, f, seq, cfg.eps, &grid.refined(), cfg.method)?;
        let mut worst: f64 = 0.0;
        for k in 0..grid.nodes() {
            let d = states.state(k, cfg.eps).sub(&fine.state(2 * k, cfg.eps));
            worst = worst.max(energy_norm(&d, seq)?);
        }
        Some(worst)
    } else {
        None
    };
    Ok(Trajectory {
        states,
        eps: cfg.eps,
        method: cfg.method,
        step_error,
    })
}

/// Integrates on a given grid starting at its first node.
pub(crate) fn run(
    xi0: &EnergyVector,
    f: &NonlinearityModel,
    seq: &EigenvalueSequence,
    eps: f64,
    grid: &TimeGrid,
    method: Method,
) -> Result<PhaseSignal> {
    let m = xi0.len();
    let lin = LinearPart::new(seq, m, eps, grid.spacing());
    let mut u = Array2::zeros((m, grid.nodes()));
    let mut v = Array2::zeros((m, grid.nodes()));
    u.column_mut(0).assign(&Array1::from(xi0.u.clone()));
    if lin.parabolic() {
        let fu = f.apply(&xi0.u);
        v.column_mut(0).assign(&Array1::from(slaved_velocity(&xi0.u, &fu, &lin.lambdas)));
    } else {
        v.column_mut(0).assign(&Array1::from(xi0.v.clone()));
    }
    match method {
        Method::Etd2Rk => etd2rk(&lin, f, grid, &mut u, &mut v)?,
        Method::Collocation => collocation(&lin, f, grid, &mut u, &mut v)?,
    }
    PhaseSignal::new(WeightedSignal::new(*grid, u)?, WeightedSignal::new(*grid, v)?)
}

fn all_finite(u: &[f64], v: &[f64]) -> bool {
    u.iter().chain(v).all(|x| x.is_finite())
}

fn etd2rk(
    lin: &LinearPart,
    f: &NonlinearityModel,
    grid: &TimeGrid,
    u: &mut Array2<f64>,
    v: &mut Array2<f64>,
) -> Result<()> {
    let m = lin.lambdas.len();
    let dt = grid.spacing();
    let mut un = u.column(0).to_vec();
    let mut vn = v.column(0).to_vec();
    let mut fa = vec![0.0; m];
    let mut fnow = vec![0.0; m];
    let mut ua = vec![0.0; m];
    let mut va = vec![0.0; m];
    for k in 0..grid.steps() {
        f.apply_into(&un, &mut fnow);
        for i in 0..m {
            let p = &lin.props[i];
            let phi1 = p.phi_b(1);
            if lin.parabolic() {
                ua[i] = p.transition(0, 0) * un[i] + dt * phi1[0] * fnow[i];
            } else {
                ua[i] = p.transition(0, 0) * un[i] + p.transition(0, 1) * vn[i] + dt * phi1[0] * fnow[i];
                va[i] = p.transition(1, 0) * un[i] + p.transition(1, 1) * vn[i] + dt * phi1[1] * fnow[i];
            }
        }
        f.apply_into(&ua, &mut fa);
        for i in 0..m {
            let phi2 = lin.props[i].phi_b(2);
            let corr = dt * (fa[i] - fnow[i]);
            un[i] = ua[i] + phi2[0] * corr;
            if !lin.parabolic() {
                vn[i] = va[i] + phi2[1] * corr;
            }
        }
        if lin.parabolic() {
            f.apply_into(&un, &mut fa);
            vn = slaved_velocity(&un, &fa, &lin.lambdas);
        }
        if !all_finite(&un, &vn) {
            return Err(Error::NonFinite {
                t_last_valid: grid.t(k),
            });
        }
        u.column_mut(k + 1).assign(&Array1::from(un.clone()));
        v.column_mut(k + 1).assign(&Array1::from(vn.clone()));
    }
    Ok(())
}

fn collocation(
    lin: &LinearPart,
    f: &NonlinearityModel,
    grid: &TimeGrid,
    u: &mut Array2<f64>,
    v: &mut Array2<f64>,
) -> Result<()> {
    let m = lin.lambdas.len();
    let steps = grid.steps();
    if steps < 3 {
        return Err(Error::validation("collocation needs at least 3 steps"));
    }
    // Predictor for every window.
    etd2rk(lin, f, grid, u, v)?;
    let mut start = 0;
    while start < steps {
        let mut end = (start + WINDOW_STEPS).min(steps);
        if steps - end < 3 {
            end = steps;
        }
        let nodes = end - start + 1;
        let mut history = Vec::new();
        loop {
            let window_u = u.slice(ndarray::s![.., start..=end]).to_owned();
            let g = f.apply_columns(&window_u);
            let mut change: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for i in 0..m {
                let p = &lin.props[i];
                if lin.parabolic() {
                    let y = p.run(&[u[[i, start]]], g.row(i));
                    for j in 1..nodes {
                        change = change.max((y[[0, j]] - u[[i, start + j]]).abs());
                        scale = scale.max(y[[0, j]].abs());
                        u[[i, start + j]] = y[[0, j]];
                    }
                } else {
                    let y = p.run(&[u[[i, start]], v[[i, start]]], g.row(i));
                    for j in 1..nodes {
                        change = change.max((y[[0, j]] - u[[i, start + j]]).abs());
                        scale = scale.max(y[[0, j]].abs());
                        u[[i, start + j]] = y[[0, j]];
                        v[[i, start + j]] = y[[1, j]];
                    }
                }
            }
            if !change.is_finite() {
                return Err(Error::NonFinite {
                    t_last_valid: grid.t(start),
                });
            }
            history.push(change);
            if change <= 1e-14 * scale {
                break;
            }
            if history.len() >= 100 {
                return Err(Error::NonConvergence {
                    iterations: history.len(),
                    last: change,
                    history,
                });
            }
        }
        if lin.parabolic() {
            for j in start + 1..=end {
                let col = u.column(j).to_vec();
                let fu = f.apply(&col);
                v.column_mut(j).assign(&Array1::from(slaved_velocity(&col, &fu, &lin.lambdas)));
            }
        }
        start = end;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub t_check: f64,
    pub evolve_step: f64,
    pub perron_step: f64,
    /// `|S(t) M(p) - M(p')|_E / (1 + |p|)` per chart point.
    pub defects: Vec<f64>,
    pub max_defect: f64,
    pub mean_defect: f64,
}

/// Evolves each chart point by `t_check`, projects back to `p'` and compares
/// with a fresh construction of `M(p')`.
pub fn invariance_check(
    chart: &ManifoldChart,
    f: &NonlinearityModel,
    cfg: &PerronConfig,
    seq: &EigenvalueSequence,
    t_check: f64,
    evolve_step: f64,
) -> Result<InvarianceReport> {
    use rayon::prelude::*;
    let proj = projector_coefficients(seq, cfg.n, cfg.eps)?;
    let ecfg = EvolveConfig::new(cfg.eps, evolve_step, t_check);
    let defects: Vec<f64> = chart
        .points
        .par_iter()
        .map(|pt| -> Result<f64> {
            let traj = evolve(&pt.value, f, seq, &ecfg)?;
            let xi = traj.last_state();
            let p_next = proj.apply(&xi.u, &xi.v);
            let fresh = construct_point(&p_next, f, cfg, seq)?;
            let pnorm = pt.p.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(energy_norm(&xi.sub(&fresh.value), seq)? / (1.0 + pnorm))
        })
        .collect::<Result<_>>()?;
    let max_defect = defects.iter().copied().fold(0.0, f64::max);
    let mean_defect = if defects.is_empty() {
        0.0
    } else {
        defects.iter().sum::<f64>() / defects.len() as f64
    };
    Ok(InvarianceReport {
        t_check,
        evolve_step,
        perron_step: cfg.dt,
        defects,
        max_defect,
        mean_defect,
    })
}

/// `ln r <= ln C + K t` as the supporting line of the upper hull of the
/// samples at the middle of the time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub c: f64,
    pub k: f64,
    pub samples: usize,
}

pub fn fit_growth(samples: &[(f64, f64)]) -> Result<GrowthFit> {
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|(t, r)| (*t, r.ln()))
        .collect();
    if pts.is_empty() || pts.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return Err(Error::validation("growth fit needs finite positive samples"));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // Keep the largest value per time.
    let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        match dedup.last_mut() {
            Some(last) if last.0 == p.0 => last.1 = last.1.max(p.1),
            _ => dedup.push(p),
        }
    }
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in dedup {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let n = samples.len();
    if hull.len() == 1 {
        return Ok(GrowthFit {
            c: hull[0].1.exp(),
            k: 0.0,
            samples: n,
        });
    }
    let mid = 0.5 * (hull[0].0 + hull[hull.len() - 1].0);
    let i = hull.windows(2).position(|w| w[1].0 >= mid).unwrap_or(hull.len() - 2);
    let (a, b) = (hull[i], hull[i + 1]);
    let k = (b.1 - a.1) / (b.0 - a.0);
    Ok(GrowthFit {
        c: (a.1 - k * a.0).exp(),
        k,
        samples: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub eps: f64,
    pub window: f64,
    /// `|xi(t)|_E^2 + int_t^{t+1} |u'|^2` against `|xi(0)|_E^2`.
    pub energy: GrowthFit,
    /// The same with `E^1` and `H^1`.
    pub energy1: GrowthFit,
    /// `eps |u'|^2 + |u|_{H^1}^2 + int_t^{t+1} |u'|^2` against its value at 0
    /// without the integral; its rate is bounded by `L^2 / lambda_1`.
    pub energy_part: GrowthFit,
    pub gronwall_rate: f64,
}

/// Trapezoid integrals of a node sequence over `[t_k, t_k + 1]`.
fn unit_window_integrals(vals: &[f64], dt: f64, count: usize) -> Vec<f64> {
    let w = (1.0 / dt).round() as usize;
    (0..count)
        .map(|k| {
            let seg = &vals[k..=k + w];
            dt * (seg.iter().sum::<f64>() - 0.5 * (seg[0] + seg[w]))
        })
        .collect()
}

/// Fits `(C, K)` for the energy bounds over all trajectories on `[0, window]`.
/// Trajectories must reach `window + 1` and share `eps`.
pub fn energy_estimate_audit(
    trajectories: &[Trajectory],
    f: &NonlinearityModel,
    seq: &EigenvalueSequence,
    window: f64,
) -> Result<EnergyAudit> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::validation("energy audit needs at least one trajectory"))?;
    let eps = first.eps;
    let mut e0 = Vec::new();
    let mut e1 = Vec::new();
    let mut ep = Vec::new();
    for tr in trajectories {
        let grid = tr.grid();
        let dt = grid.spacing();
        if tr.eps != eps {
            return Err(Error::validation("trajectories in one audit must share eps"));
        }
        if grid.t_max() + 1e-9 < window + 1.0 || (1.0 / dt - (1.0 / dt).round()).abs() > 1e-6 {
            return Err(Error::validation(format!(
                "trajectory must reach t = {} on a grid dividing 1, has [0, {}] with step {dt}",
                window + 1.0,
                grid.t_max()
            )));
        }
        let lambdas = &seq.values()[..tr.states.mode_count()];
        let count = grid.nearest(window) + 1;
        let u = tr.states.u.coeffs();
        let v = tr.states.v.coeffs();
        let col = |k: usize, s: f64, which: &Array2<f64>| -> f64 {
            which
                .column(k)
                .iter()
                .zip(lambdas)
                .map(|(x, l)| l.powf(s) * x * x)
                .sum::<f64>()
        };
        let nodes = grid.nodes();
        let v0: Vec<f64> = (0..nodes).map(|k| col(k, 0.0, v)).collect();
        let v1: Vec<f64> = (0..nodes).map(|k| col(k, 1.0, v)).collect();
        let int0 = unit_window_integrals(&v0, dt, count);
        let int1 = unit_window_integrals(&v1, dt, count);
        let en = |k: usize| eps * v0[k] + col(k, -1.0, v) + col(k, 1.0, u);
        let en1 = |k: usize| eps * v1[k] + v0[k] + col(k, 2.0, u);
        let part = |k: usize| eps * v0[k] + col(k, 1.0, u);
        let (n0, n1, np) = (en(0), en1(0), part(0));
        if !(n0 > 0.0 && n1 > 0.0 && np > 0.0) {
            return Err(Error::validation("energy audit needs nonzero initial data"));
        }
        for k in 0..count {
            let t = grid.t(k);
            e0.push((t, (en(k) + int0[k]) / n0));
            e1.push((t, (en1(k) + int1[k]) / n1));
            ep.push((t, (part(k) + int0[k]) / np));
        }
    }
    Ok(EnergyAudit {
        eps,
        window,
        energy: fit_growth(&e0)?,
        energy1: fit_growth(&e1)?,
        energy_part: fit_growth(&ep)?,
        gronwall_rate: f.declared_l().powi(2) / seq.lambda(1),
    })
}

/// `|S(t) xi_1 - S(t) xi_2|_E / |xi_1 - xi_2|_E` over pairs of trajectories on
/// a common grid, fitted by `C e^{K t}`.
pub fn semigroup_lipschitz_audit(
    pairs: &[(Trajectory, Trajectory)],
    seq: &EigenvalueSequence,
    window: f64,
) -> Result<GrowthFit> {
    let mut samples = Vec::new();
    for (a, b) in pairs {
        if a.grid() != b.grid() {
            return Err(Error::validation("trajectory pair on different grids"));
        }
        let d0 = energy_norm(&a.state(0).sub(&b.state(0)), seq)?;
        if d0 == 0.0 {
            continue;
        }
        for k in 0..=a.grid().nearest(window) {
            let d = energy_norm(&a.state(k).sub(&b.state(k)), seq)?;
            samples.push((a.grid().t(k), d / d0));
        }
    }
    fit_growth(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::characteristic_roots;
    use approx::assert_relative_eq;

    fn squares(count: usize) -> EigenvalueSequence {
        EigenvalueSequence::dirichlet(std::f64::consts::PI, count).unwrap()
    }

    #[test]
    fn linear_single_mode_matches_closed_form() {
        let seq = EigenvalueSequence::from_values(vec![2.0, 3.0]).unwrap();
        let eps = 0.05;
        let r = characteristic_roots(2.0, eps).unwrap();
        let (mp, mm) = (r.mu_plus.re, r.mu_minus.re);
        let (u0, v0) = (1.0, 0.3);
        // u = P e^{mp t} + Q e^{mm t}
        let q = (v0 - mp * u0) / (mm - mp);
        let p = u0 - q;
        for method in [Method::Etd2Rk, Method::Collocation] {
            let cfg = EvolveConfig::new(eps, 0.01, 5.0).with_method(method);
            let xi0 = EnergyVector::new(vec![u0, 0.0], vec![v0, 0.0], eps).unwrap();
            let tr = evolve(&xi0, &NonlinearityModel::zero(2), &seq, &cfg).unwrap();
            for k in (0..tr.grid().nodes()).step_by(37) {
                let t = tr.grid().t(k);
                let exact = p * (mp * t).exp() + q * (mm * t).exp();
                let dexact = p * mp * (mp * t).exp() + q * mm * (mm * t).exp();
                assert!((tr.states.u.coeffs()[[0, k]] - exact).abs() < 1e-8);
                assert!((tr.states.v.coeffs()[[0, k]] - dexact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn complex_roots_decay_at_half_inverse_eps() {
        let seq = EigenvalueSequence::from_values(vec![5.0, 6.0]).unwrap();
        let cfg = EvolveConfig::new(0.1, 0.01, 3.0);
        let xi0 = EnergyVector::new(vec![1.0, 0.0], vec![0.0; 2], 0.1).unwrap();
        let tr = evolve(&xi0, &NonlinearityModel::zero(2), &seq, &cfg).unwrap();
        // eps u'^2 + lambda u^2 + eps*lambda*u*... : use the exact envelope of
        // u = e^{-5t}(cos wt + 5/w sin wt), w = sqrt(50 - 25) = 5
        for k in (0..tr.grid().nodes()).step_by(23) {
            let t = tr.grid().t(k);
            let exact = (-5.0 * t).exp() * ((5.0 * t).cos() + (5.0 * t).sin());
            assert!((tr.states.u.coeffs()[[0, k]] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn parabolic_mode_is_scalar_exponential() {
        let seq = squares(3);
        let cfg = EvolveConfig::new(0.0, 0.02, 2.0);
        let xi0 = EnergyVector::new(vec![1.0, -0.5, 0.25], vec![0.0; 3], 0.0).unwrap();
        let tr = evolve(&xi0, &NonlinearityModel::zero(3), &seq, &cfg).unwrap();
        let last = tr.last_state();
        for n in 0..3 {
            let l = seq.lambda(n + 1);
            assert_relative_eq!(last.u[n], xi0.u[n] * (-2.0 * l).exp(), max_relative = 1e-12);
            assert_relative_eq!(last.v[n], -l * last.u[n], max_relative = 1e-12);
        }
    }

    #[test]
    fn second_and_fourth_order() {
        let seq = squares(8);
        let f = NonlinearityModel::nemytskii(crate::nonlin::ScalarFunction::Sine { amplitude: 1.0, frequency: 1.0 }, &seq, 8).unwrap();
        let mut u0 = vec![0.0; 8];
        u0[0] = 1.0;
        u0[1] = 0.5;
        let xi0 = EnergyVector::new(u0, vec![0.0; 8], 0.05).unwrap();
        let reference = evolve(&xi0, &f, &seq, &EvolveConfig::new(0.05, 1e-3, 1.0).with_method(Method::Collocation)).unwrap().last_state();
        let err = |dt: f64, m: Method| {
            let s = evolve(&xi0, &f, &seq, &EvolveConfig::new(0.05, dt, 1.0).with_method(m)).unwrap().last_state();
            energy_norm(&s.sub(&reference), &seq).unwrap()
        };
        let order = (err(0.04, Method::Etd2Rk) / err(0.02, Method::Etd2Rk)).log2();
        assert!(order >= 1.9, "etd2rk order {order}");
        // the fast tail oscillations are resolved only below dt ~ 0.01
        let order = (err(0.01, Method::Collocation) / err(0.005, Method::Collocation)).log2();
        assert!(order >= 3.5, "collocation order {order}");
    }

    #[test]
    fn stiff_limit_stays_bounded() {
        let seq = squares(8);
        let f = NonlinearityModel::diagonal_constant(0.5, 8);
        let xi0 = EnergyVector::new(vec![1.0; 8], vec![3.0; 8], 1e-6).unwrap();
        let tr = evolve(&xi0, &f, &seq, &EvolveConfig::new(1e-6, DEFAULT_STEP, 2.0)).unwrap();
        for k in 0..tr.grid().nodes() {
            let s = tr.state(k);
            let hm1: f64 = s.v.iter().zip(seq.values()).map(|(v, l)| v * v / l).sum::<f64>().sqrt();
            assert!(hm1.is_finite() && hm1 < 100.0);
        }
    }

    #[test]
    fn nonfinite_state_is_reported() {
        let seq = squares(2);
        let f = NonlinearityModel::diagonal_linear(vec![1e6, 0.0]);
        let xi0 = EnergyVector::new(vec![1.0, 0.0], vec![0.0; 2], 0.0).unwrap();
        let err = evolve(&xi0, &f, &seq, &EvolveConfig::new(0.0, 0.01, 100.0)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn growth_fit_on_exact_exponential() {
        let s: Vec<(f64, f64)> = (0..50).map(|i| {
            let t = i as f64 * 0.1;
            (t, 2.0 * (0.7 * t).exp())
        }).collect();
        let g = fit_growth(&s).unwrap();
        assert_relative_eq!(g.k, 0.7, epsilon = 1e-9);
        assert_relative_eq!(g.c, 2.0, epsilon = 1e-9);
        for (t, r) in &s {
            assert!(*r <= g.c * (g.k * t).exp() * (1.0 + 1e-12));
        }
    }
}
