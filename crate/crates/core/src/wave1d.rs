//! Damped wave equation on an interval: cut-off of the pointwise
//! nonlinearity, stationary shift `-G'' = fbar(G) + g`, the shifted map
//! `F(u) = fbar(u + G) - fbar(G)`, gap scan and manifold checks.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{invariance_check, InvarianceReport, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::manifold::{build_chart, tracking_shadow, ChartSampling, ManifoldChart, PerronConfig, TrackingReport};
use crate::nonlin::{lipschitz_estimate, LipschitzSampler, NonlinearityModel, ScalarFunction, SineTransform};
use crate::spaces::{format_f64, EnergyVector};
use crate::spectrum::{gap_scan, EigenvalueSequence, OperatorModel, SpectralGapReport, MIN_TAIL_MODES};

pub const INVARIANCE_LIMIT: f64 = 1e-5;
pub const RATE_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePipelineConfig {
    pub f: ScalarFunction,
    /// Sine coefficients of the forcing; missing entries are zero.
    pub forcing: Vec<f64>,
    /// A-priori bound `R`; the cut-off acts beyond `cut_factor * R`.
    pub radius: f64,
    pub cut_factor: f64,
    /// Transition width as a fraction of `R`.
    pub width_fraction: f64,
    pub eps: f64,
    /// Lipschitz constant used in the gap conditions; defaults to `sup |fbar'|`.
    pub lipschitz: Option<f64>,
    pub operator: OperatorModel,
    pub modes: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub sampling: ChartSampling,
    pub track_samples: usize,
    pub invariance_time: f64,
    pub seed: u64,
}

impl Default for WavePipelineConfig {
    fn default() -> Self {
        Self {
            f: ScalarFunction::Sine {
                amplitude: 1.0,
                frequency: 1.0,
            },
            forcing: vec![1.0],
            radius: 1.0,
            cut_factor: 2.0,
            width_fraction: 0.1,
            eps: 1e-3,
            lipschitz: None,
            operator: OperatorModel::Dirichlet1D { length: PI },
            modes: 16,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            sampling: ChartSampling::default(),
            track_samples: 4,
            invariance_time: 1.0,
            seed: 0,
        }
    }
}

/// `f(smooth_clamp(u, a, w))` with `a = cut_factor * R`, `w = width_fraction * R`.
pub fn cutoff_function(f: &ScalarFunction, radius: f64, cut_factor: f64, width_fraction: f64) -> Result<ScalarFunction> {
    if !(radius > 0.0) || !(cut_factor > 0.0) || !(width_fraction > 0.0) {
        return Err(Error::validation("cut-off radius, factor and width must be positive"));
    }
    Ok(ScalarFunction::cutoff(f.clone(), cut_factor * radius, width_fraction * radius))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffAudit {
    pub plateau: f64,
    pub width: f64,
    /// `max |fbar - f|` over samples with `|u| <= plateau`.
    pub max_mismatch: f64,
    pub sup_fbar_deriv: f64,
    /// `sup |f'|` over `|u| <= plateau + width`.
    pub sup_f_deriv: f64,
    pub ok: bool,
}

pub fn audit_cutoff(f: &ScalarFunction, fbar: &ScalarFunction, plateau: f64, width: f64) -> CutoffAudit {
    let samples = 4001;
    let grid = |lo: f64, hi: f64| (0..samples).map(move |i| lo + (hi - lo) * i as f64 / (samples - 1) as f64);
    let max_mismatch = grid(-plateau, plateau)
        .map(|u| (fbar.eval(u) - f.eval(u)).abs())
        .fold(0.0, f64::max);
    let outer = 2.0 * (plateau + width);
    let sup_fbar_deriv = grid(-outer, outer).map(|u| fbar.deriv(u).abs()).fold(0.0, f64::max);
    let edge = plateau + width;
    let sup_f_deriv = grid(-edge, edge)
        .map(|u| f.deriv(u).abs())
        .fold(f.lipschitz_on(-edge, edge), f64::max);
    CutoffAudit {
        plateau,
        width,
        max_mismatch,
        sup_fbar_deriv,
        sup_f_deriv,
        ok: max_mismatch == 0.0 && sup_fbar_deriv <= sup_f_deriv + 1e-9,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolution {
    /// Sine coefficients of `G`.
    pub coeffs: Vec<f64>,
    /// `|A G - P fbar(G) - g|`.
    pub residual: f64,
    pub method: String,
    pub seed: Option<String>,
    pub iterations: usize,
    /// Residuals (Newton) or increments (fixed point) per iteration.
    pub history: Vec<f64>,
    /// Failed starts, in order.
    pub attempts: Vec<String>,
}

struct Elliptic<'a> {
    fbar: &'a ScalarFunction,
    g: Vec<f64>,
    lambda: Vec<f64>,
    tr: SineTransform,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Elliptic<'_> {
    fn nodal(&self, c: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.tr.points()];
        self.tr.synthesize(c, &mut x);
        x
    }

    fn project_f(&self, c: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = self.nodal(c).iter().map(|x| self.fbar.eval(*x)).collect();
        let mut out = vec![0.0; c.len()];
        self.tr.analyze(&vals, &mut out);
        out
    }

    fn residual(&self, c: &[f64]) -> Vec<f64> {
        let pf = self.project_f(c);
        (0..c.len()).map(|k| self.lambda[k] * c[k] - pf[k] - self.g[k]).collect()
    }

    fn jacobian(&self, c: &[f64]) -> DMatrix<f64> {
        let m = c.len();
        let d: Vec<f64> = self.nodal(c).iter().map(|x| self.fbar.deriv(*x)).collect();
        let b = self.tr.basis();
        let w = self.tr.weight();
        DMatrix::from_fn(m, m, |r, k| {
            let s: f64 = (0..d.len()).map(|j| b[[j, r]] * d[j] * b[[j, k]]).sum();
            if r == k {
                self.lambda[r] - w * s
            } else {
                -w * s
            }
        })
    }

    fn inverse_a(&self, h: &[f64]) -> Vec<f64> {
        h.iter().zip(&self.lambda).map(|(x, l)| x / l).collect()
    }

    /// Damped Newton; `Err` carries the reason.
    fn newton(&self, start: Vec<f64>, tol: f64, max_iter: usize) -> std::result::Result<(Vec<f64>, Vec<f64>), String> {
        let mut c = start;
        let mut r = self.residual(&c);
        let mut rn = norm(&r);
        let mut history = vec![rn];
        for _ in 0..max_iter {
            if rn <= tol {
                return Ok((c, history));
            }
            let rhs = DVector::from_vec(r.clone());
            let step = self
                .jacobian(&c)
                .lu()
                .solve(&rhs)
                .ok_or_else(|| "singular Jacobian".to_string())?;
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(x, d)| x - alpha * d).collect();
                let tr = self.residual(&trial);
                let tn = norm(&tr);
                if tn.is_finite() && tn < (1.0 - 1e-4 * alpha) * rn {
                    c = trial;
                    r = tr;
                    rn = tn;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-6 {
                    return Err(format!("line search failed at residual {rn:.3e}"));
                }
            }
            history.push(rn);
        }
        if rn <= tol {
            Ok((c, history))
        } else {
            Err(format!("{max_iter} iterations, residual {rn:.3e}"))
        }
    }

    fn fixed_point(&self, tol: f64, max_iter: usize) -> std::result::Result<(Vec<f64>, Vec<f64>), String> {
        let mut c = vec![0.0; self.g.len()];
        let mut history = Vec::new();
        for _ in 0..max_iter {
            let pf = self.project_f(&c);
            let rhs: Vec<f64> = pf.iter().zip(&self.g).map(|(a, b)| a + b).collect();
            let next = self.inverse_a(&rhs);
            let inc = norm(&next.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>());
            c = next;
            history.push(inc);
            if !inc.is_finite() {
                return Err("fixed point diverged".into());
            }
            if norm(&self.residual(&c)) <= tol {
                return Ok((c, history));
            }
        }
        Err(format!("fixed point: {max_iter} iterations"))
    }
}

fn elliptic<'a>(fbar: &'a ScalarFunction, g: &[f64], seq: &EigenvalueSequence) -> Result<Elliptic<'a>> {
    let m = g.len();
    Ok(Elliptic {
        fbar,
        g: g.to_vec(),
        lambda: seq.values()[..m].to_vec(),
        tr: SineTransform::new(seq, m)?,
    })
}

/// Solves `A G = P fbar(G) + g` on the truncated system. Newton from the
/// seeds zero, `A^{-1} g`, `+r`, `-r` (small random `r`), then the plain
/// iteration `G <- A^{-1}(P fbar(G) + g)`.
pub fn solve_elliptic_shift(
    fbar: &ScalarFunction,
    g: &[f64],
    seq: &EigenvalueSequence,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EllipticSolution> {
    let e = elliptic(fbar, g, seq)?;
    let m = g.len();
    let a_inv_g = e.inverse_a(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.1 * (1.0 + norm(&a_inv_g));
    let r: Vec<f64> = (0..m).map(|_| scale * (rng.random::<f64>() * 2.0 - 1.0) / m as f64).collect();
    let seeds = [
        ("zero", vec![0.0; m]),
        ("inverse_forcing", a_inv_g),
        ("random_plus", r.clone()),
        ("random_minus", r.iter().map(|x| -x).collect()),
    ];
    let mut attempts = Vec::new();
    for (name, start) in seeds {
        match e.newton(start, tol, max_iter) {
            Ok((coeffs, history)) => {
                return Ok(EllipticSolution {
                    residual: norm(&e.residual(&coeffs)),
                    coeffs,
                    method: "newton".into(),
                    seed: Some(name.into()),
                    iterations: history.len() - 1,
                    history,
                    attempts,
                })
            }
            Err(why) => attempts.push(format!("newton from {name}: {why}")),
        }
    }
    match e.fixed_point(tol, 100 * max_iter) {
        Ok((coeffs, history)) => Ok(EllipticSolution {
            residual: norm(&e.residual(&coeffs)),
            coeffs,
            method: "fixed_point".into(),
            seed: None,
            iterations: history.len(),
            history,
            attempts,
        }),
        Err(why) => {
            attempts.push(why);
            Err(Error::SeedsExhausted { attempts })
        }
    }
}

/// The plain iteration alone, starting from zero.
pub fn fixed_point_shift(
    fbar: &ScalarFunction,
    g: &[f64],
    seq: &EigenvalueSequence,
    tol: f64,
    max_iter: usize,
) -> Result<EllipticSolution> {
    let e = elliptic(fbar, g, seq)?;
    let (coeffs, history) = e
        .fixed_point(tol, max_iter)
        .map_err(|why| Error::SeedsExhausted { attempts: vec![why] })?;
    Ok(EllipticSolution {
        residual: norm(&e.residual(&coeffs)),
        coeffs,
        method: "fixed_point".into(),
        seed: None,
        iterations: history.len(),
        history,
        attempts: Vec::new(),
    })
}

fn is_zero_function(f: &ScalarFunction) -> bool {
    match f {
        ScalarFunction::Zero => true,
        ScalarFunction::Cutoff { base, .. } => is_zero_function(base),
        _ => false,
    }
}

/// `F(u) = P[fbar(u + G) - fbar(G)]`; the zero model when `fbar` is zero.
pub fn shift_nonlinearity(fbar: &ScalarFunction, g: &[f64], seq: &EigenvalueSequence) -> Result<NonlinearityModel> {
    if is_zero_function(fbar) {
        return Ok(NonlinearityModel::zero(g.len()));
    }
    NonlinearityModel::shifted_cutoff(fbar.clone(), g, seq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftAudit {
    pub kind: String,
    pub declared_lipschitz: f64,
    pub sampled_lipschitz: f64,
    /// `|F(0)|`.
    pub value_at_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingSummary {
    pub rate: Option<f64>,
    pub theta: f64,
    pub max_distance_after_one: f64,
    pub shadow_manifold_defect: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSummary {
    pub points: usize,
    pub max_contraction: f64,
    pub bound_contraction: f64,
    pub max_boundary_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    pub schema_version: u32,
    pub config: WavePipelineConfig,
    pub cutoff: CutoffAudit,
    pub lipschitz: f64,
    pub elliptic: Option<EllipticSolution>,
    pub shift: Option<ShiftAudit>,
    pub gap_scan: Vec<SpectralGapReport>,
    pub chosen_n: Option<usize>,
    pub verdict: String,
    pub notes: Vec<String>,
    pub chart: Option<ChartSummary>,
    pub invariance: Option<InvarianceReport>,
    pub tracking: Vec<TrackingSummary>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

pub struct WaveOutcome {
    pub report: WaveReport,
    pub chart: Option<ManifoldChart>,
    pub tracks: Vec<TrackingReport>,
}

impl WaveOutcome {
    /// `report.json`, and `chart.csv` and `trajectories.csv` when a chart exists.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(&self.report)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        if let Some(chart) = &self.chart {
            chart.write_csv(&dir.join("chart.csv"))?;
        }
        if !self.tracks.is_empty() {
            let path = dir.join("trajectories.csv");
            let mut buf = Vec::new();
            {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(&mut buf);
                w.write_record(["sample", "t", "distance_to_shadow"])?;
                for (i, tr) in self.tracks.iter().enumerate() {
                    for (t, d) in &tr.distances {
                        w.write_record([i.to_string(), format_f64(*t), format_f64(*d)])?;
                    }
                }
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
            std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Random initial state with coefficients decaying like `1/k^2` (position)
/// and `1/k` (velocity).
pub fn random_state(rng: &mut ChaCha8Rng, modes: usize, eps: f64, scale: f64) -> EnergyVector {
    let mut xi = EnergyVector::zeros(modes, eps);
    for k in 0..modes {
        let kk = (k + 1) as f64;
        xi.u[k] = scale * (2.0 * rng.random::<f64>() - 1.0) / (kk * kk);
        xi.v[k] = scale * (2.0 * rng.random::<f64>() - 1.0) / kk;
    }
    xi
}

fn check(name: &str, pass: bool, value: f64, limit: f64) -> Check {
    Check {
        name: name.into(),
        pass,
        value,
        limit,
    }
}

pub fn run_pipeline(cfg: &WavePipelineConfig) -> Result<WaveOutcome> {
    if cfg.forcing.len() > cfg.modes {
        return Err(Error::validation(format!(
            "forcing has {} coefficients for {} modes",
            cfg.forcing.len(),
            cfg.modes
        )));
    }
    let seq = EigenvalueSequence::new(cfg.operator.clone(), cfg.modes)?;
    let fbar = cutoff_function(&cfg.f, cfg.radius, cfg.cut_factor, cfg.width_fraction)?;
    let cutoff = audit_cutoff(&cfg.f, &fbar, cfg.cut_factor * cfg.radius, cfg.width_fraction * cfg.radius);
    let lbar = fbar.lipschitz();
    let lipschitz = cfg.lipschitz.unwrap_or(lbar);
    if lbar > lipschitz + 1e-12 {
        return Err(Error::validation(format!(
            "cut-off nonlinearity has Lipschitz constant {lbar} > L = {lipschitz}"
        )));
    }
    let mut g = cfg.forcing.clone();
    g.resize(cfg.modes, 0.0);
    let mut notes = Vec::new();
    let mut checks = vec![check("cutoff_fidelity", cutoff.ok, cutoff.max_mismatch, 0.0)];

    let (elliptic, model) = if seq.is_sine_basis() {
        let sol = solve_elliptic_shift(&fbar, &g, &seq, cfg.newton_tol, cfg.newton_max_iter, cfg.seed)?;
        checks.push(check("elliptic_residual", sol.residual <= cfg.newton_tol, sol.residual, cfg.newton_tol));
        let model = shift_nonlinearity(&fbar, &sol.coeffs, &seq)?;
        (Some(sol), Some(model))
    } else {
        notes.push("operator has no sine basis: elliptic shift and pointwise map skipped".into());
        (None, None)
    };
    let shift = model.as_ref().map(|f| {
        let at_zero = norm(&f.apply(&vec![0.0; cfg.modes]));
        let sampled = lipschitz_estimate(f, &LipschitzSampler::new(600, 4.0 * cfg.cut_factor * cfg.radius, cfg.seed)).value;
        ShiftAudit {
            kind: f.kind().into(),
            declared_lipschitz: f.declared_l(),
            sampled_lipschitz: sampled,
            value_at_zero: at_zero,
        }
    });
    if let Some(s) = &shift {
        checks.push(check("shift_vanishes_at_zero", s.value_at_zero <= 1e-12, s.value_at_zero, 1e-12));
        checks.push(check(
            "shift_lipschitz",
            s.sampled_lipschitz <= s.declared_lipschitz + 1e-6,
            s.sampled_lipschitz,
            s.declared_lipschitz + 1e-6,
        ));
    }

    let scan: Vec<SpectralGapReport> = gap_scan(&seq, lipschitz.max(f64::MIN_POSITIVE), cfg.eps)?
        .into_iter()
        .filter(|r| r.n + MIN_TAIL_MODES <= cfg.modes)
        .collect();
    let mut report = WaveReport {
        schema_version: 1,
        config: cfg.clone(),
        cutoff,
        lipschitz,
        elliptic,
        shift,
        gap_scan: scan.clone(),
        chosen_n: None,
        verdict: String::new(),
        notes,
        chart: None,
        invariance: None,
        tracking: Vec::new(),
        checks: Vec::new(),
        all_pass: false,
    };
    let Some(first) = scan.first() else {
        report.verdict = format!("no admissible N at this (L, eps) = ({lipschitz}, {})", cfg.eps);
        report.all_pass = checks.iter().all(|c| c.pass);
        report.checks = checks;
        return Ok(WaveOutcome {
            report,
            chart: None,
            tracks: Vec::new(),
        });
    };
    let Some(f) = model else {
        return Err(Error::Unsupported(
            "manifold construction for the wave problem needs the Dirichlet sine basis".into(),
        ));
    };
    let n = first.n;
    report.chosen_n = Some(n);
    let pcfg = PerronConfig::new(&seq, n, cfg.eps, lipschitz, cfg.modes)?;
    let sampling = ChartSampling {
        seed: cfg.seed,
        ..cfg.sampling.clone()
    };
    let chart = build_chart(&f, &pcfg, &seq, &sampling, None)?;
    let max_contraction = chart.max_contraction();
    checks.push(check(
        "contraction",
        max_contraction <= pcfg.contraction + 0.02,
        max_contraction,
        pcfg.contraction + 0.02,
    ));
    checks.push(check("boundary_identity", chart.max_boundary_defect() <= 1e-8, chart.max_boundary_defect(), 1e-8));
    report.chart = Some(ChartSummary {
        points: chart.points.len(),
        max_contraction,
        bound_contraction: pcfg.contraction,
        max_boundary_defect: chart.max_boundary_defect(),
    });
    let inv = invariance_check(&chart, &f, &pcfg, &seq, cfg.invariance_time, DEFAULT_STEP)?;
    checks.push(check("invariance", inv.max_defect <= INVARIANCE_LIMIT, inv.max_defect, INVARIANCE_LIMIT));
    report.invariance = Some(inv);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7261_636b);
    let starts: Vec<EnergyVector> = (0..cfg.track_samples)
        .map(|_| random_state(&mut rng, cfg.modes, cfg.eps, cfg.radius))
        .collect();
    let tracks: Vec<TrackingReport> = {
        use rayon::prelude::*;
        starts
            .par_iter()
            .map(|xi| tracking_shadow(xi, &f, &pcfg, &seq))
            .collect::<Result<_>>()?
    };
    let min_rate = tracks.iter().map(|t| t.rate.unwrap_or(f64::NEG_INFINITY)).fold(f64::INFINITY, f64::min);
    if !tracks.is_empty() {
        let limit = RATE_FRACTION * pcfg.theta;
        checks.push(check("tracking_rate", min_rate >= limit, min_rate, limit));
    }
    report.tracking = tracks
        .iter()
        .map(|t| TrackingSummary {
            rate: t.rate,
            theta: t.theta,
            max_distance_after_one: t.max_distance_after_one,
            shadow_manifold_defect: t.shadow_manifold_defect,
            iterations: t.iterations,
        })
        .collect();
    report.all_pass = checks.iter().all(|c| c.pass);
    report.verdict = if report.all_pass {
        format!("manifold of dimension {n} constructed; all checks pass")
    } else {
        format!("manifold of dimension {n} constructed; some checks fail")
    };
    report.checks = checks;
    Ok(WaveOutcome {
        report,
        chart: Some(chart),
        tracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn squares(count: usize) -> EigenvalueSequence {
        EigenvalueSequence::dirichlet(PI, count).unwrap()
    }

    #[test]
    fn zero_map_gives_inverse_forcing() {
        let seq = squares(8);
        let g = [1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let sol = solve_elliptic_shift(&ScalarFunction::Zero, &g, &seq, 1e-12, 20, 0).unwrap();
        for k in 0..8 {
            assert_relative_eq!(sol.coeffs[k], g[k] / seq.lambda(k + 1), epsilon = 1e-14);
        }
        assert_eq!(sol.seed.as_deref(), Some("zero"));
        assert!(shift_nonlinearity(&ScalarFunction::Zero, &sol.coeffs, &seq).unwrap().is_zero());
    }

    #[test]
    fn constant_map_is_promoted_by_quadrature() {
        let seq = squares(8);
        let g = vec![0.0; 8];
        let c = 0.7;
        let sol = solve_elliptic_shift(&ScalarFunction::Constant { value: c }, &g, &seq, 1e-12, 20, 0).unwrap();
        // midpoint sum of sin(k x) over q nodes on (0, pi):
        // (pi/q) / sin(k pi / (2q)) for odd k, zero for even k
        let q = 32.0;
        for k in 1..=8 {
            let ck = if k % 2 == 1 {
                c * (2.0 / PI).sqrt() * (PI / q) / (k as f64 * PI / (2.0 * q)).sin()
            } else {
                0.0
            };
            assert!((sol.coeffs[k - 1] - ck / seq.lambda(k)).abs() < 1e-13, "mode {k}");
        }
    }

    #[test]
    fn fixed_point_rate() {
        let seq = squares(8);
        let f = ScalarFunction::Tanh { amplitude: 0.6 };
        let g = [2.0, -1.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0];
        let sol = fixed_point_shift(&f, &g, &seq, 1e-12, 500).unwrap();
        for w in sol.history.windows(2).filter(|w| w[0] > 1e-13) {
            assert!(w[1] <= 0.6 * w[0] + 1e-15, "{:?}", w);
        }
        let newton = solve_elliptic_shift(&f, &g, &seq, 1e-12, 50, 0).unwrap();
        let diff: f64 = newton.coeffs.iter().zip(&sol.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn shifted_map_vanishes_at_zero() {
        let seq = squares(8);
        let fbar = cutoff_function(&ScalarFunction::Sine { amplitude: 1.0, frequency: 1.0 }, 1.0, 2.0, 0.1).unwrap();
        let g = [0.3, -0.2, 0.1, 0.05, 0.0, 0.0, 0.0, 0.0];
        let f = shift_nonlinearity(&fbar, &g, &seq).unwrap();
        assert!(f.apply(&[0.0; 8]).iter().all(|x| x.abs() <= 1e-12));
        let est = lipschitz_estimate(&f, &LipschitzSampler::new(400, 5.0, 2));
        assert!(est.value <= f.declared_l() + 1e-6);
    }

    #[test]
    fn cutoff_agrees_on_plateau() {
        let f = ScalarFunction::Sine { amplitude: 2.0, frequency: 0.5 };
        let fbar = cutoff_function(&f, 3.0, 2.0, 0.1).unwrap();
        let audit = audit_cutoff(&f, &fbar, 6.0, 0.3);
        assert!(audit.ok, "{audit:?}");
        assert!(fbar.eval(100.0) == fbar.eval(7.0));
    }

    #[test]
    fn linear_growth_spectrum_has_no_gap() {
        let cfg = WavePipelineConfig {
            operator: OperatorModel::Custom {
                values: (1..=16).map(|n| n as f64).collect(),
            },
            lipschitz: Some(1.0),
            ..Default::default()
        };
        let out = run_pipeline(&cfg).unwrap();
        assert!(out.report.gap_scan.is_empty());
        assert!(out.report.verdict.starts_with("no admissible N"));
        assert!(out.chart.is_none());
    }
}
