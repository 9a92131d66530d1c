//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Run with `cargo test -p inertial-core --test acceptance`.

use std::f64::consts::PI;
use std::time::Instant;

use inertial::config::RunConfig;
use inertial::dynamics::{energy_estimate_audit, evolve, invariance_check, EvolveConfig, DEFAULT_STEP};
use inertial::linsolve::{default_step, symbol_min, LinearSolver, SymbolCase};
use inertial::manifold::{build_chart, compare_epsilon, construct_point, tracking_shadow, ChartSampling, PerronConfig};
use inertial::nonlin::{
    build_counterexample, build_gap_blocker, equilibrium_spectrum, lipschitz_estimate, normal_hyperbolicity_gaps,
    LipschitzSampler, NonlinearityModel, ScalarFunction, Variant,
};
use inertial::spaces::{energy_norm, weighted_l2_norm, EnergyVector, TimeGrid, WeightedSignal};
use inertial::spectrum::{characteristic_roots, gap_report, projector_coefficients, EigenvalueSequence};
use inertial::wave1d::random_state;
use inertial::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Modes retained in the acceptance runs; see `truncation_spot_check`.
const MODES: usize = 16;
const EPS: f64 = 0.05;

fn squares(count: usize) -> EigenvalueSequence {
    EigenvalueSequence::dirichlet(PI, count).unwrap()
}

fn sine() -> ScalarFunction {
    ScalarFunction::Sine {
        amplitude: 1.0,
        frequency: 1.0,
    }
}

/// Reference: lambda = n^2, N = 1, L = 1, eps = 0.05, so 2L/gap = 2/3.
fn reference() -> (EigenvalueSequence, NonlinearityModel, PerronConfig) {
    let seq = squares(MODES);
    let f = NonlinearityModel::nemytskii(sine(), &seq, MODES).unwrap();
    let cfg = PerronConfig::new(&seq, 1, EPS, 1.0, MODES).unwrap();
    (seq, f, cfg)
}

struct Admissible {
    seq: EigenvalueSequence,
    n: usize,
    eps: f64,
    theta: f64,
    gap: f64,
}

/// Random sequence (scaled squares or random increments), N in 1..=4,
/// eps under the eps condition and L under half the gap.
fn random_admissible(rng: &mut ChaCha8Rng) -> Admissible {
    loop {
        let count = 24;
        let seq = if rng.random::<bool>() {
            EigenvalueSequence::dirichlet(rng.random_range(0.5..3.0), count).unwrap()
        } else {
            let mut v = Vec::with_capacity(count);
            let mut x = rng.random_range(0.1..2.0);
            for _ in 0..count {
                v.push(x);
                x += rng.random_range(0.2..5.0);
            }
            EigenvalueSequence::from_values(v).unwrap()
        };
        let n = rng.random_range(1..=4);
        let (a, b) = (seq.lambda(n), seq.lambda(n + 1));
        let eps = rng.random_range(0.01..1.0) / (3.0 * b + a);
        let gap = b - a;
        let l = rng.random_range(0.0..0.99) * gap / 2.0;
        let Ok(rep) = gap_report(&seq, n, eps, l.max(f64::MIN_POSITIVE)) else {
            continue;
        };
        if let (true, Some(theta)) = (rep.admissible(), rep.theta) {
            return Admissible {
                seq,
                n,
                eps,
                theta,
                gap,
            };
        }
    }
}

fn criterion_1() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst_margin = f64::INFINITY;
    let mut worst_equality: f64 = 0.0;
    let mut worst_grid: f64 = 0.0;
    let mut case_ok = true;
    let configs = 120;
    for _ in 0..configs {
        let c = random_admissible(&mut rng);
        let (a, b) = (c.seq.lambda(c.n), c.seq.lambda(c.n + 1));
        for k in 1..=c.seq.count() {
            let r = symbol_min(c.seq.lambda(k), c.theta, c.eps, a, b);
            worst_margin = worst_margin.min(r.min_abs - c.gap / 2.0);
            worst_grid = worst_grid.max((r.min_abs - r.grid_check).abs() / r.min_abs);
            if k == c.n || k == c.n + 1 {
                case_ok &= r.case_tag == SymbolCase::I;
                worst_equality = worst_equality.max((r.min_abs - c.gap / 2.0).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_margin >= -1e-9 && case_ok && worst_equality <= 1e-9 && worst_grid <= 1e-6 && secs < 10.0;
    Ok((
        pass,
        format!(
            "{configs} configs: min(|R| - gap/2) = {worst_margin:.3e}, Case I at N, N+1 = {case_ok}, \
             equality error {worst_equality:.1e}, grid rel. error {worst_grid:.1e}, {secs:.2} s"
        ),
    ))
}

/// Slowest decay of the response outside the support of a probe, in the
/// weighted frame: mode N backward, mode N+1 forward, and the fast factor.
fn layer_rate(c: &Admissible) -> Result<f64> {
    let mu_n = characteristic_roots(c.seq.lambda(c.n), c.eps)?.mu_plus.re;
    let mu_n1 = characteristic_roots(c.seq.lambda(c.n + 1), c.eps)?.mu_plus.re;
    Ok((c.theta + mu_n).min(-mu_n1 - c.theta).min(0.5 / c.eps - c.theta))
}

/// `|L h| / |h|` in the theta-weighted norm, for `h` supported on `[-t, t]`.
/// The grid is padded so that the response outside the support has decayed
/// by `e^-30`, i.e. the norm of `L h` is taken on the whole line.
fn operator_ratios(c: &Admissible, t: f64, probes: &[&dyn Fn(usize, f64) -> f64]) -> Result<Vec<f64>> {
    let modes = c.n + 8;
    let pad = 30.0 / layer_rate(c)?;
    let grid = TimeGrid::with_max_spacing(-t - pad, t + pad, default_step(c.theta))?;
    let solver = LinearSolver::new(&c.seq, c.n, c.eps, c.theta, modes, grid.spacing())?;
    probes
        .iter()
        .map(|probe| {
            let h = WeightedSignal::from_fn(grid, modes, |k, s| if s.abs() <= t { probe(k, s) } else { 0.0 });
            let (u, _) = solver.apply_raw(h.coeffs());
            let nu = weighted_l2_norm(&WeightedSignal::new(grid, u)?, c.theta, 0.0, &c.seq)?;
            let nh = weighted_l2_norm(&h, c.theta, 0.0, &c.seq)?;
            Ok(nu / nh)
        })
        .collect()
}

fn criterion_2() -> Result<(bool, String)> {
    let seq = squares(MODES);
    let rep = gap_report(&seq, 1, EPS, 1.0)?;
    let reference = Admissible {
        theta: rep.theta.unwrap(),
        gap: rep.gap,
        seq,
        n: 1,
        eps: EPS,
    };
    let th = reference.theta;
    let on_mode = |mode: usize| move |k: usize, s: f64| if k == mode { (-th * s).exp() } else { 0.0 };
    let (p0, p1) = (on_mode(0), on_mode(1));
    let tight = operator_ratios(&reference, 40.0 / th, &[&p0, &p1])?;
    let tight = tight.iter().copied().fold(0.0, f64::max) / (2.0 / reference.gap);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut probe_max: f64 = 0.0;
    let mut probes = 0;
    let mut cases = vec![reference];
    cases.extend((0..24).map(|_| random_admissible(&mut rng)));
    for c in &cases {
        let th = c.theta;
        let t = 40.0 / th;
        let modes = c.n + 8;
        let amp: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let freq: Vec<f64> = (0..modes).map(|_| rng.random_range(0.0..3.0)).collect();
        let phase: Vec<f64> = (0..modes).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let seed: u64 = rng.random();
        let constant = |k: usize, s: f64| if k + 1 == c.n || k == c.n { (-th * s).exp() } else { 0.0 };
        let oscillating = |k: usize, s: f64| amp[k] * (freq[k] * s + phase[k]).cos() * (-th * s).exp();
        let bump = |k: usize, s: f64| amp[k] * (-(s / (0.2 * t)).powi(2)).exp() * (-th * s).exp();
        // Hashed per-sample noise so the probe is a plain function of (k, s).
        let noise = |k: usize, s: f64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed ^ (k as u64) << 40 ^ s.to_bits());
            amp[k] * r.random_range(-1.0..1.0) * (-th * s).exp()
        };
        let ratios = operator_ratios(c, t, &[&constant, &oscillating, &bump, &noise])?;
        probes += ratios.len();
        probe_max = ratios.iter().map(|r| r / (2.0 / c.gap)).fold(probe_max, f64::max);
    }
    let pass = tight >= 0.99 && probe_max <= 1.01;
    Ok((
        pass,
        format!(
            "reference, probe on [-40/theta, 40/theta]: constant probe reaches {tight:.4} of 2/gap (need >= 0.99); \
             max over {probes} probes in {} configs {probe_max:.4} of 2/gap (need <= 1.01)",
            cases.len()
        ),
    ))
}

fn criterion_3() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..200 {
        let c = random_admissible(&mut rng);
        let proj = projector_coefficients(&c.seq, c.n, c.eps)?;
        for k in 0..c.n {
            let r = characteristic_roots(c.seq.lambda(k + 1), c.eps)?;
            let e1 = (proj.a[k] * r.mu_plus.re + proj.b[k] - 1.0).abs();
            let e0 = (proj.a[k] * r.mu_minus.re + proj.b[k]).abs();
            worst = worst.max(e1).max(e0);
            count += 1;
        }
    }
    Ok((
        worst <= 1e-12,
        format!("{count} (eps, lambda) pairs: max |a mu+ + b - 1|, |a mu- + b| = {worst:.2e} (need <= 1e-12)"),
    ))
}

struct Shared {
    /// Every Perron run of the suite: (label, observed contraction, bound, boundary defect).
    runs: Vec<(String, f64, f64, f64)>,
}

fn criterion_4(shared: &mut Shared) -> Result<(bool, String)> {
    let seq = squares(MODES);
    let f = NonlinearityModel::zero(MODES);
    let mut worst: f64 = 0.0;
    for (n, eps) in [(1usize, EPS), (2, 0.02), (1, 1e-3)] {
        let cfg = PerronConfig::new(&seq, n, eps, 0.0, MODES)?;
        let mut rng = ChaCha8Rng::seed_from_u64(4 + n as u64);
        for _ in 0..4 {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let m = construct_point(&p, &f, &cfg, &seq)?;
            let mut exact = EnergyVector::zeros(MODES, eps);
            for (k, pk) in p.iter().enumerate() {
                exact.u[k] = *pk;
                exact.v[k] = characteristic_roots(seq.lambda(k + 1), eps)?.mu_plus.re * pk;
            }
            let pn = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst = worst.max(energy_norm(&m.value.sub(&exact), &seq)? / pn);
            shared
                .runs
                .push((format!("zero N={n} eps={eps}"), m.contraction_observed, 0.0, m.boundary_defect));
        }
    }
    let boundary = shared.runs.iter().map(|r| r.3).fold(0.0, f64::max);
    let pass = worst <= 1e-8 && boundary <= 1e-8;
    Ok((
        pass,
        format!(
            "F = 0: max |M(p) - (p, mu+ p)| / |p| = {worst:.2e}; boundary identity over {} constructed points {boundary:.2e} (need <= 1e-8)",
            shared.runs.len()
        ),
    ))
}

fn criterion_5(shared: &Shared) -> (bool, String) {
    let nonlinear: Vec<_> = shared.runs.iter().filter(|r| r.2 > 0.0).collect();
    let worst = nonlinear
        .iter()
        .map(|r| r.1 - r.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let reference = nonlinear
        .iter()
        .filter(|r| r.0.starts_with("reference"))
        .map(|r| r.1)
        .fold(0.0, f64::max);
    (
        worst <= 0.02 && reference > 0.0,
        format!(
            "{} nonlinear Perron runs: max(observed - 2L/gap) = {worst:+.4} (need <= 0.02); reference max observed {reference:.4} vs 2/3",
            nonlinear.len()
        ),
    )
}

fn criterion_6() -> Result<(bool, String)> {
    let seq = squares(MODES);
    let eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let diag = compare_epsilon(&[1.0], &NonlinearityModel::diagonal_constant(0.5, MODES), &eps, 1, &seq)?;
    let nem = compare_epsilon(&[1.0], &NonlinearityModel::nemytskii(sine(), &seq, MODES)?, &eps, 1, &seq)?;
    let p = 0.8;
    let zero = compare_epsilon(&[p], &NonlinearityModel::zero(MODES), &eps, 1, &seq)?;
    let s_diag = diag.slope.unwrap_or(f64::NAN);
    let s_nem = nem.slope.unwrap_or(f64::NAN);
    let lead = zero.leading_coefficient.unwrap_or(f64::NAN);
    let expected = seq.lambda(1).powf(1.5) * p;
    let in_range = |s: f64| (0.9..=1.1).contains(&s);
    let pass = in_range(s_diag) && in_range(s_nem) && ((lead - expected) / expected).abs() <= 0.05;
    Ok((
        pass,
        format!(
            "slopes: diagonal c = 0.5 {s_diag:.4}, sine {s_nem:.4} (need [0.9, 1.1]); F = 0 d/eps at 1e-4 = {lead:.5} vs {expected:.5}"
        ),
    ))
}

fn criterion_7(shared: &mut Shared) -> Result<(bool, String)> {
    let (seq, f, cfg) = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let limit = 0.95 * cfg.theta;
    let mut min_rate = f64::INFINITY;
    for _ in 0..20 {
        let xi = random_state(&mut rng, MODES, EPS, 1.0);
        let r = tracking_shadow(&xi, &f, &cfg, &seq)?;
        min_rate = min_rate.min(r.rate.unwrap_or(f64::NEG_INFINITY));
    }
    // Resident data: the distance is pure discretization error, fourth order
    // in the step and largest just after t = 0; two halvings bring it below 1e-8.
    let fine = cfg.refined().refined();
    let mut resident: f64 = 0.0;
    for p in [0.8, -1.5] {
        let m = construct_point(&[p], &f, &fine, &seq)?;
        shared.runs.push((
            "reference resident".into(),
            m.contraction_observed,
            fine.contraction,
            m.boundary_defect,
        ));
        let r = tracking_shadow(&m.value, &f, &fine, &seq)?;
        resident = resident.max(r.distances.iter().map(|d| d.1).fold(0.0, f64::max));
    }
    let pass = min_rate >= limit && resident <= 1e-8;
    Ok((
        pass,
        format!(
            "20 random states: min rate {min_rate:.4} (need >= 0.95 theta = {limit:.4}); resident data at step {:.2e}: max distance on [0, T+] {resident:.2e} (need <= 1e-8)",
            fine.dt
        ),
    ))
}

fn criterion_8(shared: &mut Shared) -> Result<(bool, String)> {
    let (seq, f, cfg) = reference();
    let chart = build_chart(&f, &cfg, &seq, &ChartSampling::default(), None)?;
    for p in &chart.points {
        shared.runs.push((
            "reference chart".into(),
            p.contraction_observed,
            cfg.contraction,
            p.boundary_defect,
        ));
    }
    let coarse = invariance_check(&chart, &f, &cfg, &seq, 1.0, DEFAULT_STEP)?;
    let fine_cfg = cfg.refined();
    let fine_chart = build_chart(&f, &fine_cfg, &seq, &ChartSampling::default(), None)?;
    let fine = invariance_check(&fine_chart, &f, &fine_cfg, &seq, 1.0, DEFAULT_STEP / 2.0)?;
    // A second nonlinearity with its own bound.
    let diag = NonlinearityModel::diagonal_constant(0.5, MODES);
    let dcfg = PerronConfig::new(&seq, 1, EPS, 0.5, MODES)?;
    let dchart = build_chart(&diag, &dcfg, &seq, &ChartSampling::default(), None)?;
    for p in &dchart.points {
        shared
            .runs
            .push(("diagonal chart".into(), p.contraction_observed, dcfg.contraction, p.boundary_defect));
    }
    let ratio = coarse.max_defect / fine.max_defect;
    let pass = coarse.max_defect <= 1e-5 && ratio >= 3.0;
    Ok((
        pass,
        format!(
            "{} points: defect {:.3e} (need <= 1e-5), halved steps {:.3e}, reduction x{ratio:.2} (need >= 3)",
            chart.points.len(),
            coarse.max_defect,
            fine.max_defect
        ),
    ))
}

fn criterion_9() -> Result<(bool, String)> {
    let run = RunConfig::default();
    let seq = run.sequence()?;
    let modes = run.modes;
    let f = build_counterexample(&seq, run.eps, &run.counterexample, modes, run.seed)?;
    let Variant::Counterexample(ce) = f.variant() else {
        unreachable!()
    };
    let sampled = lipschitz_estimate(&f, &LipschitzSampler::new(4000, 2.0 * ce.radius, 9)).value;
    let (up, um) = ce.equilibria();
    let sp = equilibrium_spectrum(&f, &up, run.eps, &seq, None)?;
    let sm = equilibrium_spectrum(&f, &um, run.eps, &seq, None)?;
    let eq_res = sp.equilibrium_residual.max(sm.equilibrium_residual);
    let odd = (1..sp.nu.len()).step_by(2).all(|n| sp.collisions.contains(&n));
    let even = (2..sm.nu.len()).step_by(2).all(|n| sm.collisions.contains(&n));
    let spread = sp.collision_spread.max(sm.collision_spread);
    let verdict = normal_hyperbolicity_gaps(&[sp, sm]);
    let delta_rot = run.counterexample_delta_rot;
    let blocker = build_gap_blocker(&seq, 1, delta_rot, modes)?;
    let sb = equilibrium_spectrum(&blocker, &vec![0.0; modes], run.eps, &seq, None)?;
    let pair = sb.kappa[..2].iter().all(|k| (k.im.abs() - delta_rot).abs() <= 1e-12) && sb.kappa[0].im * sb.kappa[1].im < 0.0;
    let pass = sampled < ce.lipschitz
        && eq_res <= 1e-10
        && odd
        && even
        && spread <= 1e-12
        && verdict.intersection.is_empty()
        && pair;
    Ok((
        pass,
        format!(
            "{modes} modes, R = {}: sampled L {sampled:.4} < {}; equilibrium residual {eq_res:.1e}; \
             odd/even collisions {odd}/{even}, spread {spread:.1e}; intersection {:?}; \
             rotation {delta_rot} gives kappa {:.4}{:+.4}i",
            ce.radius, ce.lipschitz, verdict.intersection, sb.kappa[0].re, sb.kappa[0].im
        ),
    ))
}

fn criterion_10() -> Result<(bool, String)> {
    let seq = squares(MODES);
    let l = 2.0;
    let models = [
        ("diagonal c = L", NonlinearityModel::diagonal_constant(l, MODES)),
        ("sine", NonlinearityModel::nemytskii(sine(), &seq, MODES)?),
    ];
    let mut worst_drift: f64 = 0.0;
    let mut worst_k_ratio: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, f) in &models {
        let mut fits = Vec::new();
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let trs = (0..4)
                .map(|s| {
                    let mut xi = EnergyVector::zeros(MODES, eps);
                    xi.u[s] = 1.0;
                    xi.u[s + 1] = 0.5;
                    xi.v[s] = -0.5;
                    evolve(&xi, f, &seq, &EvolveConfig::new(eps, DEFAULT_STEP, 6.0))
                })
                .collect::<Result<Vec<_>>>()?;
            fits.push(energy_estimate_audit(&trs, f, &seq, 5.0)?);
        }
        for w in fits.windows(2) {
            for (a, b) in [(w[0].energy, w[1].energy), (w[0].energy1, w[1].energy1)] {
                let dc = (a.c - b.c).abs() / a.c.max(b.c);
                // K is compared on the scale of the Gronwall rate so that K near 0 is meaningful.
                let dk = (a.k - b.k).abs() / a.k.abs().max(b.k.abs()).max(w[0].gronwall_rate);
                worst_drift = worst_drift.max(dc).max(dk);
            }
        }
        if *name == "diagonal c = L" {
            for a in &fits {
                worst_k_ratio = worst_k_ratio.max(a.energy_part.k / a.gronwall_rate);
            }
        }
        let last = fits.last().unwrap();
        detail.push(format!(
            "{name}: (C, K) = ({:.3}, {:.3}), E1 ({:.3}, {:.3})",
            last.energy.c, last.energy.k, last.energy1.c, last.energy1.k
        ));
    }
    let pass = worst_drift <= 0.10 && worst_k_ratio <= 1.10;
    Ok((
        pass,
        format!(
            "{}; max drift per eps halving {:.1}% (need <= 10%); diagonal K / (L^2/lambda_1) = {worst_k_ratio:.3} (need <= 1.10)",
            detail.join("; "),
            100.0 * worst_drift
        ),
    ))
}

/// Doubling the retained modes must leave the reference point unchanged to
/// the accuracy the criteria use.
fn truncation_spot_check() -> Result<(bool, String)> {
    let mut values = Vec::new();
    for modes in [MODES, 2 * MODES] {
        let seq = squares(modes);
        let f = NonlinearityModel::nemytskii(sine(), &seq, modes)?;
        let cfg = PerronConfig::new(&seq, 1, EPS, 1.0, modes)?;
        values.push((construct_point(&[0.8], &f, &cfg, &seq)?.value, seq));
    }
    let (a, _) = &values[0];
    let (b, seq) = &values[1];
    let mut padded = EnergyVector::zeros(b.len(), EPS);
    padded.u[..a.len()].copy_from_slice(&a.u);
    padded.v[..a.len()].copy_from_slice(&a.v);
    let d = energy_norm(&padded.sub(b), seq)?;
    Ok((d <= 1e-3, format!("|M_16(0.8) - M_32(0.8)| = {d:.2e}")))
}

fn report(id: &str, r: Result<(bool, String)>) -> bool {
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("CRITERION {id:>2} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

// Runs without the libtest harness so the criterion lines are never captured.
fn main() {
    let start = Instant::now();
    let mut shared = Shared { runs: Vec::new() };
    let mut results = Vec::new();
    results.push(report("1", criterion_1()));
    results.push(report("2", criterion_2()));
    results.push(report("3", criterion_3()));
    results.push(report("4", criterion_4(&mut shared)));
    let c7 = criterion_7(&mut shared);
    let c8 = criterion_8(&mut shared);
    results.push(report("5", Ok(criterion_5(&shared))));
    results.push(report("6", criterion_6()));
    results.push(report("7", c7));
    results.push(report("8", c8));
    results.push(report("9", criterion_9()));
    results.push(report("10", criterion_10()));
    println!("truncation check: {}", truncation_spot_check().map(|r| r.1).unwrap_or_else(|e| e.to_string()));
    println!("acceptance total {:.1} s", start.elapsed().as_secs_f64());
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(i, _)| i + 1)
        .collect();
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}

