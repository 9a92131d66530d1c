//! Perron construction of the manifold: backward solutions of
//! `u = S p + L F(u)` in the weighted space, the map `M(p) = (u(0), u'(0))`,
//! charts, the eps -> 0 comparison and exponential tracking.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::dynamics::{self, Method};
use crate::error::{Error, Result};
use crate::linsolve::{default_step, LinearSolver};
use crate::nonlin::scalar::{smoothstep9, smoothstep9_deriv, smoothstep9_second};
use crate::nonlin::NonlinearityModel;
use crate::spaces::{
    default_window, energy1_norm, energy_norm, format_f64, weighted_l2_norm, EnergyVector, PhaseSignal, TimeGrid,
    WeightedSignal,
};
use crate::spectrum::{gap_report, projector_coefficients, EigenvalueSequence, ModeRoots, MIN_TAIL_MODES};

/// Relative fixed-point tolerance: increments below `FP_TOL * (1 + |p|)` stop.
pub const FP_TOL: f64 = 1e-10;
pub const FP_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronConfig {
    pub n: usize,
    pub eps: f64,
    pub theta: f64,
    /// Lipschitz constant the gap conditions were checked with.
    pub lipschitz: f64,
    /// `2L / gap`.
    pub contraction: f64,
    pub modes: usize,
    /// `min(theta + mu+_N, -Re mu+_{N+1} - theta)`.
    pub margin: f64,
    /// Backward window `[-window, 0]`.
    pub window: f64,
    pub steps: usize,
    pub dt: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Tracking window `[-track_past, track_future]`, solved on a grid that
    /// extends `track_buffer` further to the right.
    pub track_past: f64,
    pub track_future: f64,
    pub track_buffer: f64,
}

impl PerronConfig {
    /// Checks the gap conditions for `(N, eps, L)` and fills in default grids.
    /// `L = 0` is accepted and treated as the linear limit.
    pub fn new(seq: &EigenvalueSequence, n: usize, eps: f64, lipschitz: f64, modes: usize) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::validation(format!("Lipschitz constant must be >= 0, got {lipschitz}")));
        }
        if modes > seq.count() || modes < n + MIN_TAIL_MODES {
            return Err(Error::validation(format!(
                "mode count {modes} must satisfy N + {MIN_TAIL_MODES} = {} <= modes <= {}",
                n + MIN_TAIL_MODES,
                seq.count()
            )));
        }
        let report = gap_report(seq, n, eps, lipschitz.max(f64::MIN_POSITIVE))?;
        if !report.admissible() {
            return Err(Error::condition(report.failures().join("; ")));
        }
        let theta = report.theta.expect("admissible report has theta");
        let contraction = 2.0 * lipschitz / report.gap;
        if contraction >= 1.0 {
            return Err(Error::condition(format!("contraction 2L/gap = {contraction} >= 1")));
        }
        let mu_n = report
            .mu_plus_n
            .ok_or_else(|| Error::condition(format!("mu+_{n} is not real")))?;
        let margin = (theta + mu_n).min(-report.mu_plus_n1_re - theta);
        let window = default_window(theta, margin);
        let mut cfg = Self {
            n,
            eps,
            theta,
            lipschitz,
            contraction,
            modes,
            margin,
            window,
            steps: 0,
            dt: 0.0,
            fp_tol: FP_TOL,
            fp_max_iter: FP_MAX_ITER,
            track_past: window,
            track_future: 16.0 / theta,
            track_buffer: 14.0 / margin,
        };
        cfg.set_step(default_step(theta));
        Ok(cfg)
    }

    fn set_step(&mut self, dt: f64) {
        self.steps = (self.window / dt).ceil().max(3.0) as usize;
        self.dt = self.window / self.steps as f64;
    }

    /// Step at most `dt`, adjusted to divide the window.
    pub fn with_step(mut self, dt: f64) -> Self {
        self.set_step(dt);
        self
    }

    pub fn with_window(mut self, window: f64) -> Self {
        let dt = self.dt;
        self.window = window;
        self.set_step(dt);
        self
    }

    pub fn with_tracking(mut self, future: f64, buffer: f64) -> Self {
        self.track_future = future;
        self.track_buffer = buffer;
        self
    }

    /// Same setup with half the step.
    pub fn refined(&self) -> Self {
        let mut c = self.clone();
        c.steps *= 2;
        c.dt = c.window / c.steps as f64;
        c
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(-self.window, 0.0, self.steps).expect("positive window")
    }

    pub fn solver(&self, seq: &EigenvalueSequence) -> Result<LinearSolver> {
        LinearSolver::new(seq, self.n, self.eps, self.theta, self.modes, self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `S p`.
    Homogeneous,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    pub p: Vec<f64>,
    /// `M(p)`.
    pub value: EnergyVector,
    pub iterations: usize,
    /// Largest ratio of consecutive increments.
    pub contraction_observed: f64,
    /// Weighted increments per iteration.
    pub increments: Vec<f64>,
    /// Last increment, i.e. `|u - S p - L F(u)|`.
    pub fixed_point_residual: f64,
    /// Weighted norm of `eps u'' + u' + A u - F(u)` with `u''` by differences.
    pub equation_residual: f64,
    /// `|a v(0) + b u(0) - p|`.
    pub boundary_defect: f64,
    /// `|M(p)|_{E^1} / |p|`, 0 at `p = 0`.
    pub energy1_ratio: f64,
    #[serde(skip)]
    pub trajectory: Option<PhaseSignal>,
}

/// Reusable Perron iteration for one configuration and nonlinearity.
pub struct PerronSolver<'a> {
    cfg: &'a PerronConfig,
    f: &'a NonlinearityModel,
    seq: &'a EigenvalueSequence,
    solver: LinearSolver,
    grid: TimeGrid,
    times: Vec<f64>,
}

impl<'a> PerronSolver<'a> {
    pub fn new(cfg: &'a PerronConfig, f: &'a NonlinearityModel, seq: &'a EigenvalueSequence) -> Result<Self> {
        if f.modes() != cfg.modes {
            return Err(Error::validation(format!(
                "nonlinearity has {} modes, configuration {}",
                f.modes(),
                cfg.modes
            )));
        }
        if f.declared_l() > cfg.lipschitz * (1.0 + 1e-12) {
            return Err(Error::condition(format!(
                "declared L = {} exceeds the L = {} the gap was checked with",
                f.declared_l(),
                cfg.lipschitz
            )));
        }
        let grid = cfg.grid();
        Ok(Self {
            cfg,
            f,
            seq,
            solver: cfg.solver(seq)?,
            times: grid.times(),
            grid,
        })
    }

    pub fn linear_solver(&self) -> &LinearSolver {
        &self.solver
    }

    fn norm(&self, a: Array2<f64>) -> Result<f64> {
        weighted_l2_norm(&WeightedSignal::new(self.grid, a)?, self.cfg.theta, 0.0, self.seq)
    }

    pub fn solve(&self, p: &[f64], guess: InitialGuess, keep_trajectory: bool) -> Result<ManifoldPoint> {
        let cfg = self.cfg;
        if p.len() != cfg.n || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation(format!(
                "p must have N = {} finite components, has {}",
                cfg.n,
                p.len()
            )));
        }
        let pnorm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tol = cfg.fp_tol * (1.0 + pnorm);
        let (su, sv) = self.solver.homogeneous_raw(p, &self.times);
        let mut u = match guess {
            InitialGuess::Homogeneous => su.clone(),
            InitialGuess::Zero => Array2::zeros(su.dim()),
        };
        let mut v;
        let mut increments = Vec::new();
        loop {
            let h = self.f.apply_columns(&u);
            let (mut nu, mut nv) = self.solver.apply_raw(&h);
            nu += &su;
            nv += &sv;
            let inc = self.norm(&nu - &u)?;
            u = nu;
            v = nv;
            if !inc.is_finite() {
                return Err(Error::NonConvergence {
                    iterations: increments.len() + 1,
                    last: inc,
                    history: increments,
                });
            }
            increments.push(inc);
            if inc < tol {
                break;
            }
            if increments.len() >= cfg.fp_max_iter {
                return Err(Error::NonConvergence {
                    iterations: increments.len(),
                    last: inc,
                    history: increments,
                });
            }
        }
        let contraction_observed = increments
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max);
        let sol = PhaseSignal::new(WeightedSignal::new(self.grid, u)?, WeightedSignal::new(self.grid, v)?)?;
        let h = WeightedSignal::new(self.grid, self.f.apply_columns(sol.u.coeffs()))?;
        let equation_residual = weighted_l2_norm(&self.solver.residual(&sol, &h)?, cfg.theta, 0.0, self.seq)?;
        let boundary_defect = self
            .solver
            .boundary_value(&sol)
            .iter()
            .zip(p)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let value = sol.state(self.grid.steps(), cfg.eps);
        let energy1_ratio = if pnorm > 0.0 {
            energy1_norm(&value, self.seq)? / pnorm
        } else {
            0.0
        };
        Ok(ManifoldPoint {
            p: p.to_vec(),
            value,
            iterations: increments.len(),
            contraction_observed,
            fixed_point_residual: *increments.last().expect("at least one iteration"),
            increments,
            equation_residual,
            boundary_defect,
            energy1_ratio,
            trajectory: keep_trajectory.then_some(sol),
        })
    }
}

/// `M(p)` by Perron iteration started from `S p`.
pub fn construct_point(
    p: &[f64],
    f: &NonlinearityModel,
    cfg: &PerronConfig,
    seq: &EigenvalueSequence,
) -> Result<ManifoldPoint> {
    PerronSolver::new(cfg, f, seq)?.solve(p, InitialGuess::Homogeneous, false)
}

/// `(pp xi, qq xi)` with `pp xi = (p, mu+ p)` on the first N modes, where
/// `p = a v + b u`.
pub fn graph_split(
    xi: &EnergyVector,
    seq: &EigenvalueSequence,
    n: usize,
    eps: f64,
) -> Result<(EnergyVector, EnergyVector)> {
    if xi.len() < n {
        return Err(Error::validation(format!("state has {} modes, N = {n}", xi.len())));
    }
    let proj = projector_coefficients(seq, n, eps)?;
    let p = proj.apply(&xi.u, &xi.v);
    let mut plus = EnergyVector::zeros(xi.len(), eps);
    for (k, pk) in p.iter().enumerate() {
        let mu = ModeRoots::new(seq.lambda(k + 1), eps)?.mu_plus().re;
        plus.u[k] = *pk;
        plus.v[k] = mu * pk;
    }
    let minus = xi.clone().with_eps(eps).sub(&plus);
    Ok((plus, minus))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSampling {
    /// Points per half axis; each axis carries `2 * axis_points` nonzero points.
    pub axis_points: usize,
    pub axis_radius: f64,
    pub random_points: usize,
    pub ball_radius: f64,
    pub seed: u64,
}

impl Default for ChartSampling {
    fn default() -> Self {
        Self {
            axis_points: 2,
            axis_radius: 1.0,
            random_points: 8,
            ball_radius: 1.0,
            seed: 0,
        }
    }
}

impl ChartSampling {
    /// Origin, axis points, then random points in the ball, in that order.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; n]];
        for i in 0..n {
            for k in 1..=self.axis_points {
                let s = self.axis_radius * k as f64 / self.axis_points as f64;
                for sign in [1.0, -1.0] {
                    let mut p = vec![0.0; n];
                    p[i] = sign * s;
                    out.push(p);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_points {
            let dir: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            // Uniform in the ball: radius ~ U^{1/n}.
            let r = self.ball_radius * rng.random::<f64>().powf(1.0 / n as f64);
            out.push(dir.iter().map(|x| x * r / norm).collect());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldChart {
    pub config: PerronConfig,
    pub nonlinearity: serde_json::Value,
    pub sampling: ChartSampling,
    pub points: Vec<ManifoldPoint>,
    /// `qq M(p)`: the graph over `pp`-space, since `pp M(p) = (p, mu+ p)`.
    pub graph: Vec<EnergyVector>,
    pub cache_key: String,
}

/// Hex digest identifying a chart build.
pub fn chart_key(f: &NonlinearityModel, cfg: &PerronConfig, seq: &EigenvalueSequence, sampling: &ChartSampling) -> String {
    let payload = json!({
        "config": cfg,
        "nonlinearity": f.describe(),
        "lambda": &seq.values()[..cfg.modes],
        "sampling": sampling,
    });
    let digest = Sha256::digest(payload.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds (or loads from `cache_dir`) the chart over the sampled points.
pub fn build_chart(
    f: &NonlinearityModel,
    cfg: &PerronConfig,
    seq: &EigenvalueSequence,
    sampling: &ChartSampling,
    cache_dir: Option<&Path>,
) -> Result<ManifoldChart> {
    let key = chart_key(f, cfg, seq, sampling);
    let cache_path = cache_dir.map(|d| d.join(format!("chart-{key}.json")));
    if let Some(path) = &cache_path {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(chart) = serde_json::from_str::<ManifoldChart>(&text) {
                if chart.cache_key == key {
                    return Ok(chart);
                }
            }
        }
    }
    let solver = PerronSolver::new(cfg, f, seq)?;
    let samples = sampling.points(cfg.n);
    let points: Vec<ManifoldPoint> = samples
        .par_iter()
        .map(|p| solver.solve(p, InitialGuess::Homogeneous, false))
        .collect::<Result<_>>()?;
    let graph = points
        .iter()
        .map(|pt| graph_split(&pt.value, seq, cfg.n, cfg.eps).map(|(_, q)| q))
        .collect::<Result<_>>()?;
    let chart = ManifoldChart {
        config: cfg.clone(),
        nonlinearity: f.describe(),
        sampling: sampling.clone(),
        points,
        graph,
        cache_key: key,
    };
    if let (Some(dir), Some(path)) = (cache_dir, &cache_path) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        std::fs::write(path, serde_json::to_string(&chart)?).map_err(|e| Error::io(path, e))?;
    }
    Ok(chart)
}

impl ManifoldChart {
    /// Columns `p_1..p_N, u_1..u_M, v_1..v_M` and the per-point diagnostics.
    pub fn write_csv_to(&self, out: &mut impl std::io::Write) -> Result<()> {
        let (n, m) = (self.config.n, self.config.modes);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|k| format!("p_{k}")).collect();
        header.extend((1..=m).map(|k| format!("u_{k}")));
        header.extend((1..=m).map(|k| format!("v_{k}")));
        header.extend(
            ["iterations", "contraction", "fixed_point_residual", "boundary_defect", "energy1_ratio"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header)?;
        for pt in &self.points {
            let mut row: Vec<String> = pt.p.iter().map(|x| format_f64(*x)).collect();
            row.extend(pt.value.u.iter().map(|x| format_f64(*x)));
            row.extend(pt.value.v.iter().map(|x| format_f64(*x)));
            row.push(pt.iterations.to_string());
            row.push(format_f64(pt.contraction_observed));
            row.push(format_f64(pt.fixed_point_residual));
            row.push(format_f64(pt.boundary_defect));
            row.push(format_f64(pt.energy1_ratio));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn max_contraction(&self) -> f64 {
        self.points.iter().map(|p| p.contraction_observed).fold(0.0, f64::max)
    }

    pub fn max_boundary_defect(&self) -> f64 {
        self.points.iter().map(|p| p.boundary_defect).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzOfM {
    pub value: f64,
    pub pairs: usize,
}

/// `max |M(p_i) - M(p_j)|_E / |p_i - p_j|` over all pairs of chart points.
pub fn lipschitz_of_m(points: &[ManifoldPoint], seq: &EigenvalueSequence) -> Result<LipschitzOfM> {
    let mut best: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dp = points[i]
                .p
                .iter()
                .zip(&points[j].p)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if dp == 0.0 {
                continue;
            }
            let dm = energy_norm(&points[i].value.sub(&points[j].value), seq)?;
            best = best.max(dm / dp);
            pairs += 1;
        }
    }
    Ok(LipschitzOfM { value: best, pairs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsEntry {
    pub eps: f64,
    pub theta: Option<f64>,
    /// `|M_eps(p) - M_0(p)|_{E_eps}`.
    pub distance: Option<f64>,
    pub iterations: Option<usize>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsComparison {
    pub p: Vec<f64>,
    pub entries: Vec<EpsEntry>,
    /// Least-squares slope of `ln d` against `ln eps`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// `d / eps` at the smallest compared eps.
    pub leading_coefficient: Option<f64>,
    pub limit: ManifoldPoint,
}

/// Least-squares line through `(x, y)`; `None` with fewer than 2 distinct x.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Distances between `M_eps(p)` and the parabolic `M_0(p)` for each positive
/// eps in the list (zero entries are ignored; the limit is always computed).
pub fn compare_epsilon(
    p: &[f64],
    f: &NonlinearityModel,
    eps_list: &[f64],
    n: usize,
    seq: &EigenvalueSequence,
) -> Result<EpsComparison> {
    let l = f.declared_l();
    let modes = f.modes();
    let cfg0 = PerronConfig::new(seq, n, 0.0, l, modes)?;
    let limit = construct_point(p, f, &cfg0, seq)?;
    let entries: Vec<EpsEntry> = eps_list
        .par_iter()
        .filter(|e| **e > 0.0)
        .map(|&eps| -> Result<EpsEntry> {
            let cfg = match PerronConfig::new(seq, n, eps, l, modes) {
                Ok(c) => c,
                Err(Error::Condition(msg)) => {
                    return Ok(EpsEntry {
                        eps,
                        theta: None,
                        distance: None,
                        iterations: None,
                        skipped: Some(msg),
                    })
                }
                Err(e) => return Err(e),
            };
            let pt = construct_point(p, f, &cfg, seq)?;
            let diff = pt.value.sub(&limit.value).with_eps(eps);
            Ok(EpsEntry {
                eps,
                theta: Some(cfg.theta),
                distance: Some(energy_norm(&diff, seq)?),
                iterations: Some(pt.iterations),
                skipped: None,
            })
        })
        .collect::<Result<_>>()?;
    let logs: Vec<(f64, f64)> = entries
        .iter()
        .filter_map(|e| e.distance.filter(|d| *d > 0.0).map(|d| (e.eps.ln(), d.ln())))
        .collect();
    let fit = linear_fit(&logs);
    let leading_coefficient = entries
        .iter()
        .filter(|e| e.distance.is_some())
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .map(|e| e.distance.unwrap() / e.eps);
    Ok(EpsComparison {
        p: p.to_vec(),
        entries,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        leading_coefficient,
        limit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    /// `w(0) = v(0)`: the shadow point.
    pub shadow: EnergyVector,
    /// `a v'(0) + b v(0)` of the shadow.
    pub shadow_p: Vec<f64>,
    /// `|M(shadow_p) - shadow|_E`.
    pub shadow_manifold_defect: f64,
    /// `(t, |xi_u(t) - xi_w(t)|_E)` on `[0, track_future]`.
    pub distances: Vec<(f64, f64)>,
    /// Fitted exponential rate on `[1, track_future]` above the noise floor.
    pub rate: Option<f64>,
    pub fit_points: usize,
    pub noise_floor: f64,
    pub max_distance_after_one: f64,
    pub theta: f64,
    pub iterations: usize,
    pub contraction_observed: f64,
    /// Head-window increments per iteration.
    pub increments: Vec<f64>,
    pub cutoff: String,
}

/// Solves `v = L Phi(v, u)` on the full line with the degree-9 smoothstep cut-off
/// `phi` (0 for `t <= 0`, 1 for `t >= 1`) and returns the shadow of `xi0`.
pub fn tracking_shadow(
    xi0: &EnergyVector,
    f: &NonlinearityModel,
    cfg: &PerronConfig,
    seq: &EigenvalueSequence,
) -> Result<TrackingReport> {
    let dt = cfg.dt;
    let m = cfg.modes;
    if xi0.len() != m {
        return Err(Error::validation(format!("initial state has {} modes, configuration {m}", xi0.len())));
    }
    let eps = cfg.eps;
    let past = (cfg.track_past / dt).ceil() as usize;
    let future = ((cfg.track_future + cfg.track_buffer) / dt).ceil().max(3.0) as usize;
    let grid = TimeGrid::new(-(past as f64) * dt, future as f64 * dt, past + future)?;
    let fwd_grid = TimeGrid::new(0.0, future as f64 * dt, future)?;
    let traj = dynamics::run(&xi0.clone().with_eps(eps), f, seq, eps, &fwd_grid, Method::Collocation)?;
    let solver = LinearSolver::new(seq, cfg.n, eps, cfg.theta, m, grid.spacing())?;
    let nodes = grid.nodes();
    // phi, phi', phi'' at the nodes; node `past` is t = 0.
    let tloc = |k: usize| (k as f64 - past as f64) * dt;
    let mut phi_u = Array2::zeros((m, nodes));
    let mut fixed = Array2::zeros((m, nodes));
    let fu = f.apply_columns(traj.u.coeffs());
    for k in past..nodes {
        let j = k - past;
        let t = tloc(k);
        let (p0, p1, p2) = (smoothstep9(t), smoothstep9_deriv(t), smoothstep9_second(t));
        for i in 0..m {
            let u = traj.u.coeffs()[[i, j]];
            let ut = traj.v.coeffs()[[i, j]];
            phi_u[[i, k]] = p0 * u;
            fixed[[i, k]] = -p0 * fu[[i, j]] - (eps * p2 + p1) * u - 2.0 * eps * p1 * ut;
        }
    }
    // Increments are measured up to track_future only: past it the weight
    // amplifies the cancellation error in F(u + v) - F(u) beyond any tolerance.
    let end = past + (cfg.track_future / dt).round() as usize;
    let end = end.min(nodes - 1);
    let head = TimeGrid::new(grid.t_min(), tloc(end), end)?;
    let norm = |a: Array2<f64>| -> Result<f64> {
        let a = a.slice(ndarray::s![.., ..=end]).to_owned();
        weighted_l2_norm(&WeightedSignal::new(head, a)?, cfg.theta, 0.0, seq)
    };
    // F(phi u + v) - phi F(u) loses absolute accuracy of order eps_mach |u|;
    // below that floor the iteration runs until it stops contracting.
    let f_phi = f.apply_columns(&phi_u);
    let floor = 256.0 * f64::EPSILON * norm(phi_u.mapv(f64::abs) + f_phi.mapv(f64::abs))?;
    let tol = cfg.fp_tol * (1.0 + norm(f_phi + &fixed)?);
    let mut v = Array2::<f64>::zeros((m, nodes));
    let mut vt;
    let mut increments: Vec<f64> = Vec::new();
    loop {
        let arg = &phi_u + &v;
        let forcing = f.apply_columns(&arg) + &fixed;
        let (nv, nvt) = solver.apply_raw(&forcing);
        let inc = norm(&nv - &v)?;
        v = nv;
        vt = nvt;
        if !inc.is_finite() || increments.len() + 1 >= cfg.fp_max_iter {
            increments.push(inc);
            return Err(Error::NonConvergence {
                iterations: increments.len(),
                last: inc,
                history: increments,
            });
        }
        let stalled = inc < floor && increments.last().is_some_and(|&prev| inc > 0.75 * prev);
        increments.push(inc);
        // Roundoff carried back from the buffer end can also hold the increment
        // flat well above `floor`; a true contraction never stays above 0.9.
        let flat = inc < 1e4 * tol
            && increments.len() >= 4
            && increments[increments.len() - 4..].windows(2).all(|w| w[1] > 0.9 * w[0]);
        let stalled = stalled || flat;
        if (inc < tol || stalled) && increments.len() >= 2 {
            break;
        }
    }
    let state = |k: usize| EnergyVector {
        u: v.column(k).to_vec(),
        v: vt.column(k).to_vec(),
        eps,
    };
    let shadow = state(past);
    let proj = projector_coefficients(seq, cfg.n, eps)?;
    let shadow_p = proj.apply(&shadow.u, &shadow.v);
    let on_manifold = construct_point(&shadow_p, f, cfg, seq)?;
    let shadow_manifold_defect = energy_norm(&on_manifold.value.sub(&shadow), seq)?;
    // xi_u - xi_w = (1 - phi) xi_u - phi' (u, 0) ... written out per node.
    let mut distances = Vec::new();
    let mut scale: f64 = 0.0;
    for k in past..=end {
        let j = k - past;
        let t = tloc(k);
        let (p0, p1) = (smoothstep9(t), smoothstep9_deriv(t));
        let mut d = EnergyVector::zeros(m, eps);
        for i in 0..m {
            let u = traj.u.coeffs()[[i, j]];
            let ut = traj.v.coeffs()[[i, j]];
            d.u[i] = u - (p0 * u + v[[i, k]]);
            d.v[i] = ut - (p1 * u + p0 * ut + vt[[i, k]]);
        }
        if t <= 1.0 {
            scale = scale.max(energy_norm(&traj.state(j, eps), seq)?);
        }
        distances.push((t, energy_norm(&d, seq)?));
    }
    let noise_floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let fit_pts: Vec<(f64, f64)> = distances
        .iter()
        .filter(|(t, d)| *t >= 1.0 - 1e-12 && *d > noise_floor)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    let max_distance_after_one = distances
        .iter()
        .filter(|(t, _)| *t >= 1.0 - 1e-12)
        .map(|(_, d)| *d)
        .fold(0.0, f64::max);
    let contraction_observed = increments
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    Ok(TrackingReport {
        shadow,
        shadow_p,
        shadow_manifold_defect,
        rate: linear_fit(&fit_pts).map(|(s, _)| -s),
        fit_points: fit_pts.len(),
        noise_floor,
        distances,
        max_distance_after_one,
        theta: cfg.theta,
        iterations: increments.len(),
        contraction_observed,
        increments,
        cutoff: "smoothstep 126t^5 - 420t^6 + 540t^7 - 315t^8 + 70t^9 on [0, 1]".into(),
    })
}
