//! Command-line front end: `inertial <subcommand> [--config PATH] ...`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{NChoice, RawConfig, RunConfig};
use crate::dynamics::invariance_check;
use crate::error::{Error, Result};
use crate::manifold::{build_chart, compare_epsilon, lipschitz_of_m, tracking_shadow, PerronConfig, TrackingReport};
use crate::nonlin::{
    build_gap_blocker, equilibrium_spectrum, lipschitz_estimate, normal_hyperbolicity_gaps, LipschitzSampler,
    NonlinearityModel, Variant,
};
use crate::spaces::format_f64;
use crate::spectrum::{characteristic_roots, critical_index, gap_report, gap_scan, EigenvalueSequence, MIN_TAIL_MODES};
use crate::wave1d::{random_state, run_pipeline, RATE_FRACTION};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUT_ENV: &str = "INERTIAL_OUT";

#[derive(Debug, Parser)]
#[command(name = "inertial", version, about = "Inertial manifolds for damped hyperbolic relaxations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Configuration file (flat key = value).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to $INERTIAL_OUT/<command> or ./out/<command>.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral gap report, weight and characteristic roots.
    Analyze(Common),
    /// Perron construction over a sample of p, with an invariance check.
    Construct(Common),
    /// Exponential tracking of random initial states.
    Track(Common),
    /// Distance between the relaxed and the parabolic manifold over eps.
    #[command(name = "compare-eps")]
    CompareEps(Common),
    /// Two-equilibrium model without a common spectral gap.
    Counterexample(Common),
    /// Damped wave pipeline with cut-off, elliptic shift and checks.
    Wave1d(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Construct(_) => "construct",
            Command::Track(_) => "track",
            Command::CompareEps(_) => "compare-eps",
            Command::Counterexample(_) => "counterexample",
            Command::Wave1d(_) => "wave1d",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Analyze(c)
            | Command::Construct(c)
            | Command::Track(c)
            | Command::CompareEps(c)
            | Command::Counterexample(c)
            | Command::Wave1d(c) => c,
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Validation(_) | Error::Unsupported(_) | Error::ParabolicLimit { .. } => 2,
        Error::Condition(_) => 3,
        Error::NonConvergence { .. } | Error::SeedsExhausted { .. } | Error::NonFinite { .. } => 4,
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 1,
    }
}

struct Session {
    command: &'static str,
    cfg: RunConfig,
    config_text: Option<String>,
    out: PathBuf,
    verbose: bool,
    files: Vec<String>,
    timings: Vec<(String, f64)>,
    clock: Instant,
}

impl Session {
    fn note(&self, msg: &str) {
        if self.verbose {
            eprintln!("[{}] {msg}", self.command);
        }
    }

    fn lap(&mut self, stage: &str) {
        let secs = self.clock.elapsed().as_secs_f64();
        self.note(&format!("{stage} done after {secs:.2} s"));
        self.timings.push((stage.to_string(), secs));
        self.clock = Instant::now();
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let path = self.out.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write_bytes(name, text.as_bytes())
    }

    fn register(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    fn finish(mut self) -> Result<()> {
        let digest = |bytes: &[u8]| -> String { Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect() };
        let resolved = serde_json::to_string(&self.cfg)?;
        self.files.sort();
        let manifest = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "inertial",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": digest(self.config_text.as_deref().unwrap_or("").as_bytes()),
            "resolved_config_sha256": digest(resolved.as_bytes()),
            "seed": self.cfg.seed,
            "files": self.files,
        });
        let timings: serde_json::Map<String, serde_json::Value> =
            self.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let path = self.out.join("timings.json");
        std::fs::write(&path, serde_json::to_string_pretty(&timings)? + "\n").map_err(|e| Error::io(&path, e))?;
        let path = self.out.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn output_dir(common: &Common, cfg: &RunConfig, command: &str) -> PathBuf {
    if let Some(o) = &common.out {
        return o.clone();
    }
    if let Some(o) = &cfg.output_dir {
        return o.clone();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => Path::new(&root).join(command),
        _ => Path::new("out").join(command),
    }
}

/// Runs a parsed command; `Ok` carries the exit code (3 for failing verdicts).
pub fn execute(command: &Command) -> Result<i32> {
    let common = command.common();
    if let Some(n) = common.threads {
        // A second call in the same process keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let (cfg, text) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let raw = RawConfig::parse(&text, &path.display().to_string(), base)?;
            (RunConfig::from_raw(&raw)?, Some(text))
        }
        None => (RunConfig::default(), None),
    };
    let cfg = match common.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    let out = output_dir(common, &cfg, command.name());
    let mut s = Session {
        command: command.name(),
        cfg,
        config_text: text,
        out,
        verbose: common.verbose,
        files: Vec::new(),
        timings: Vec::new(),
        clock: Instant::now(),
    };
    let code = match command {
        Command::Analyze(_) => analyze(&mut s)?,
        Command::Construct(_) => construct(&mut s)?,
        Command::Track(_) => track(&mut s)?,
        Command::CompareEps(_) => compare(&mut s)?,
        Command::Counterexample(_) => counterexample(&mut s)?,
        Command::Wave1d(_) => wave(&mut s)?,
    };
    s.finish()?;
    Ok(code)
}

/// `L` from the config, else the model's declared constant.
fn lipschitz_of(cfg: &RunConfig, f: &NonlinearityModel) -> f64 {
    cfg.lipschitz.unwrap_or_else(|| f.declared_l())
}

/// Resolves `N`: the configured value, or the smallest admissible one.
fn resolve_n(cfg: &RunConfig, seq: &EigenvalueSequence, l: f64) -> Result<usize> {
    match cfg.n {
        NChoice::Fixed(n) => Ok(n),
        NChoice::Auto => gap_scan(seq, l.max(f64::MIN_POSITIVE), cfg.eps)?
            .into_iter()
            .map(|r| r.n)
            .find(|n| n + MIN_TAIL_MODES <= cfg.modes)
            .ok_or_else(|| Error::condition(format!("no admissible N at (L, eps) = ({l}, {})", cfg.eps))),
    }
}

fn perron_config(cfg: &RunConfig, seq: &EigenvalueSequence, n: usize, l: f64) -> Result<PerronConfig> {
    let mut p = PerronConfig::new(seq, n, cfg.eps, l, cfg.modes)?;
    if let Some(w) = cfg.perron.window {
        p = p.with_window(w);
    }
    if let Some(dt) = cfg.perron.dt {
        p = p.with_step(dt);
    }
    if let Some(t) = cfg.perron.tol {
        p.fp_tol = t;
    }
    if let Some(m) = cfg.perron.max_iter {
        p.fp_max_iter = m;
    }
    if cfg.track.future.is_some() || cfg.track.buffer.is_some() {
        let future = cfg.track.future.unwrap_or(p.track_future);
        let buffer = cfg.track.buffer.unwrap_or(p.track_buffer);
        p = p.with_tracking(future, buffer);
    }
    Ok(p)
}

fn analyze(s: &mut Session) -> Result<i32> {
    let cfg = s.cfg.clone();
    let seq = cfg.sequence()?;
    let l = match cfg.lipschitz {
        Some(l) => l,
        None => cfg.nonlinearity(&seq)?.declared_l(),
    };
    let lp = l.max(f64::MIN_POSITIVE);
    let scan: Vec<_> = gap_scan(&seq, lp, cfg.eps)?
        .into_iter()
        .filter(|r| r.n + MIN_TAIL_MODES <= cfg.modes)
        .collect();
    let n = match cfg.n {
        NChoice::Fixed(n) => Some(n),
        NChoice::Auto => scan.first().map(|r| r.n),
    };
    let report = n.map(|n| gap_report(&seq, n, cfg.eps, lp)).transpose()?;
    let mut reasons = report.as_ref().map(|r| r.failures()).unwrap_or_default();
    if n.is_none() {
        reasons.push("no admissible N within the truncation".into());
    }
    if let Some(n) = n {
        if n + MIN_TAIL_MODES > cfg.modes {
            reasons.push(format!("truncation: need at least N + {MIN_TAIL_MODES} = {} modes", n + MIN_TAIL_MODES));
        }
    }
    let pass = reasons.is_empty();
    let show = n.map(|n| n + 3).unwrap_or(4).min(cfg.modes);
    let roots: Vec<serde_json::Value> = (1..=show)
        .map(|k| {
            let lam = seq.lambda(k);
            match characteristic_roots(lam, cfg.eps) {
                Ok(r) => json!({"n": k, "lambda": lam, "mu_plus": [r.mu_plus.re, r.mu_plus.im],
                    "mu_minus": [r.mu_minus.re, r.mu_minus.im], "real": r.is_real()}),
                Err(_) => json!({"n": k, "lambda": lam, "mu_plus": [-lam, 0.0], "mu_minus": null, "real": true}),
            }
        })
        .collect();
    let verdict = if pass { "PASS" } else { "FAIL" };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "eps": cfg.eps,
        "lipschitz": l,
        "n": n,
        "report": report,
        "admissible": scan.iter().map(|r| r.n).collect::<Vec<_>>(),
        "scan": scan,
        "roots": roots,
        "n_cr": critical_index(&seq, cfg.eps),
        "verdict": verdict,
        "reasons": reasons,
    });
    s.lap("analyze");
    s.write_json("analyze.json", &doc)?;
    println!("eps           {}", format_f64(cfg.eps));
    println!("L             {}", format_f64(l));
    match (&n, &report) {
        (Some(n), Some(r)) => {
            println!("N             {n}");
            println!("lambda_N      {}", format_f64(r.lambda_n));
            println!("lambda_N+1    {}", format_f64(r.lambda_n1));
            println!("gap           {}", format_f64(r.gap));
            println!(
                "theta         {}",
                r.theta.map(|t| format!("{t:.7}")).unwrap_or_else(|| "undefined".into())
            );
            println!("kappa         {:.7}", r.contraction);
        }
        _ => println!("N             none"),
    }
    println!("admissible N  {:?}", scan.iter().map(|r| r.n).take(10).collect::<Vec<_>>());
    println!("{:>4} {:>14} {:>26} {:>26}", "n", "lambda", "mu+", "mu-");
    for r in &roots {
        let fmt = |v: &serde_json::Value| match v.as_array() {
            Some(a) => format!("{:.6} {:+.6}i", a[0].as_f64().unwrap_or(f64::NAN), a[1].as_f64().unwrap_or(f64::NAN)),
            None => "-".into(),
        };
        println!(
            "{:>4} {:>14} {:>26} {:>26}",
            r["n"].as_u64().unwrap_or(0),
            format_f64(r["lambda"].as_f64().unwrap_or(f64::NAN)),
            fmt(&r["mu_plus"]),
            fmt(&r["mu_minus"])
        );
    }
    println!("verdict       {verdict}");
    for r in &reasons {
        println!("reason        {r}");
    }
    Ok(if pass { 0 } else { 3 })
}

fn construct(s: &mut Session) -> Result<i32> {
    let cfg = s.cfg.clone();
    let seq = cfg.sequence()?;
    let f = cfg.nonlinearity(&seq)?;
    let l = lipschitz_of(&cfg, &f);
    let n = resolve_n(&cfg, &seq, l)?;
    let pcfg = perron_config(&cfg, &seq, n, l)?;
    s.note(&format!("N = {n}, theta = {:.6}, {} steps", pcfg.theta, pcfg.steps));
    let cache = cfg.chart_cache.then(|| s.out.join("cache"));
    let chart = build_chart(&f, &pcfg, &seq, &cfg.chart, cache.as_deref())?;
    s.lap("chart");
    let lip = lipschitz_of_m(&chart.points, &seq)?;
    let inv = if cfg.invariance.enabled {
        let r = invariance_check(&chart, &f, &pcfg, &seq, cfg.invariance.time, cfg.invariance.step)?;
        s.lap("invariance");
        Some(r)
    } else {
        None
    };
    let mut buf = Vec::new();
    chart.write_csv_to(&mut buf)?;
    s.write_bytes("chart.csv", &buf)?;
    if cache.is_some() {
        s.note("chart cache enabled");
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "nonlinearity": f.describe(),
        "perron": pcfg,
        "points": chart.points.len(),
        "max_contraction": chart.max_contraction(),
        "contraction_bound": pcfg.contraction,
        "max_boundary_defect": chart.max_boundary_defect(),
        "max_fixed_point_residual": chart.points.iter().map(|p| p.fixed_point_residual).fold(0.0, f64::max),
        "lipschitz_of_m": lip,
        "invariance": inv,
        "cache_key": chart.cache_key,
    });
    s.write_json("construct.json", &summary)?;
    println!("N                    {n}");
    println!("theta                {:.7}", pcfg.theta);
    println!("points               {}", chart.points.len());
    println!("max contraction      {:.6} (bound {:.6})", chart.max_contraction(), pcfg.contraction);
    println!("max boundary defect  {:.3e}", chart.max_boundary_defect());
    println!("Lipschitz of M       {:.6}", lip.value);
    if let Some(r) = &inv {
        println!("invariance defect    {:.3e}", r.max_defect);
    }
    Ok(0)
}

fn track(s: &mut Session) -> Result<i32> {
    let cfg = s.cfg.clone();
    let seq = cfg.sequence()?;
    let f = cfg.nonlinearity(&seq)?;
    let l = lipschitz_of(&cfg, &f);
    let n = resolve_n(&cfg, &seq, l)?;
    let pcfg = perron_config(&cfg, &seq, n, l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<_> = (0..cfg.track.samples)
        .map(|_| random_state(&mut rng, cfg.modes, cfg.eps, cfg.track.scale))
        .collect();
    let reports: Vec<TrackingReport> = starts
        .par_iter()
        .map(|xi| tracking_shadow(xi, &f, &pcfg, &seq))
        .collect::<Result<_>>()?;
    s.lap("tracking");
    let limit = RATE_FRACTION * pcfg.theta;
    let min_rate = reports.iter().map(|r| r.rate.unwrap_or(f64::NEG_INFINITY)).fold(f64::INFINITY, f64::min);
    let summaries: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "rate": r.rate,
                "fit_points": r.fit_points,
                "max_distance_after_one": r.max_distance_after_one,
                "shadow_p": r.shadow_p,
                "shadow_manifold_defect": r.shadow_manifold_defect,
                "iterations": r.iterations,
                "contraction_observed": r.contraction_observed,
            })
        })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "theta": pcfg.theta,
        "rate_limit": limit,
        "min_rate": if reports.is_empty() { None } else { Some(min_rate) },
        "cutoff": reports.first().map(|r| r.cutoff.clone()),
        "samples": summaries,
    });
    s.write_json("tracking.json", &doc)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["sample", "t", "distance_to_shadow"])?;
    for (i, r) in reports.iter().enumerate() {
        for (t, d) in &r.distances {
            w.write_record([i.to_string(), format_f64(*t), format_f64(*d)])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::io("trajectories.csv", e.into_error()))?;
    s.write_bytes("trajectories.csv", &bytes)?;
    println!("theta     {:.7}", pcfg.theta);
    println!("samples   {}", reports.len());
    if !reports.is_empty() {
        println!("min rate  {min_rate:.6} (need >= {limit:.6})");
    }
    Ok(0)
}

fn compare(s: &mut Session) -> Result<i32> {
    let cfg = s.cfg.clone();
    let seq = cfg.sequence()?;
    let f = cfg.nonlinearity(&seq)?;
    let l = lipschitz_of(&cfg, &f);
    let n = resolve_n(&cfg, &seq, l)?;
    let p = cfg.compare.p.clone().unwrap_or_else(|| vec![1.0; n]);
    if p.len() != n {
        return Err(Error::validation(format!("compare.p has {} entries, N = {n}", p.len())));
    }
    let cmp = compare_epsilon(&p, &f, &cfg.compare.eps, n, &seq)?;
    s.lap("compare");
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["eps", "theta", "distance", "iterations", "skipped"])?;
    for e in &cmp.entries {
        w.write_record([
            format_f64(e.eps),
            e.theta.map(format_f64).unwrap_or_default(),
            e.distance.map(format_f64).unwrap_or_default(),
            e.iterations.map(|i| i.to_string()).unwrap_or_default(),
            e.skipped.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("compare.csv", e.into_error()))?;
    s.write_bytes("compare.csv", &bytes)?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "p": p,
        "slope": cmp.slope,
        "intercept": cmp.intercept,
        "leading_coefficient": cmp.leading_coefficient,
        "entries": cmp.entries,
        "limit": cmp.limit.value,
    });
    s.write_json("compare.json", &doc)?;
    println!("{:>12} {:>16}", "eps", "distance");
    for e in &cmp.entries {
        let d = e.distance.map(|d| format!("{d:.6e}")).unwrap_or_else(|| "skipped".into());
        println!("{:>12} {:>16}", format_f64(e.eps), d);
    }
    match cmp.slope {
        Some(sl) => println!("slope     {sl:.6}"),
        None => println!("slope     undefined"),
    }
    if let Some(c) = cmp.leading_coefficient {
        println!("d/eps     {c:.6}");
    }
    Ok(0)
}

fn counterexample(s: &mut Session) -> Result<i32> {
    let cfg = s.cfg.clone();
    let seq = cfg.sequence()?;
    let f = crate::nonlin::build_counterexample(&seq, cfg.eps, &cfg.counterexample, cfg.modes, cfg.seed)?;
    let Variant::Counterexample(ce) = f.variant() else {
        unreachable!("builder returns the counterexample variant")
    };
    let (up, um) = ce.equilibria();
    let sp = equilibrium_spectrum(&f, &up, cfg.eps, &seq, None)?;
    let sm = equilibrium_spectrum(&f, &um, cfg.eps, &seq, None)?;
    let verdict = normal_hyperbolicity_gaps(&[sp.clone(), sm.clone()]);
    let sampled = lipschitz_estimate(&f, &LipschitzSampler::new(3000, 2.0 * ce.radius, cfg.seed));
    let blocker = build_gap_blocker(&seq, 1, cfg.counterexample_delta_rot, cfg.modes)?;
    let sb = equilibrium_spectrum(&blocker, &vec![0.0; cfg.modes], cfg.eps, &seq, None)?;
    s.lap("counterexample");
    let eq_res = |u: &[f64]| -> f64 {
        let fu = f.apply(u);
        u.iter()
            .zip(seq.values())
            .zip(&fu)
            .map(|((x, l), y)| (l * x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "model": f.describe(),
        "lipschitz": ce.lipschitz,
        "lipschitz_bound": ce.lipschitz_bound(),
        "sampled_lipschitz": sampled,
        "radius": ce.radius,
        "n_cr": ce.n_cr,
        "equilibrium_residuals": [eq_res(&up), eq_res(&um)],
        "collisions_plus": sp.collisions,
        "collisions_minus": sm.collisions,
        "admissible_plus": verdict.per_equilibrium[0],
        "admissible_minus": verdict.per_equilibrium[1],
        "admissible_N_intersection": verdict.intersection,
        "no_candidate": verdict.no_candidate,
        "spectrum_plus": sp,
        "spectrum_minus": sm,
        "gap_blocker": {
            "delta_rot": cfg.counterexample_delta_rot,
            "nu_1": [sb.nu[0].re, sb.nu[0].im],
            "nu_2": [sb.nu[1].re, sb.nu[1].im],
        },
    });
    s.write_json("counterexample.json", &doc)?;
    println!("R                          {}", format_f64(ce.radius));
    println!("sampled Lipschitz          {:.6} (L = {})", sampled.value, format_f64(ce.lipschitz));
    println!("collisions at u+           {:?}", &sp.collisions[..sp.collisions.len().min(8)]);
    println!("collisions at u-           {:?}", &sm.collisions[..sm.collisions.len().min(8)]);
    println!("admissible_N_intersection  {:?}", verdict.intersection);
    Ok(0)
}

fn wave(s: &mut Session) -> Result<i32> {
    let outcome = run_pipeline(&s.cfg.wave)?;
    s.lap("pipeline");
    outcome.write(&s.out)?;
    s.register("report.json");
    if outcome.chart.is_some() {
        s.register("chart.csv");
    }
    if !outcome.tracks.is_empty() {
        s.register("trajectories.csv");
    }
    let r = &outcome.report;
    println!("verdict  {}", r.verdict);
    for c in &r.checks {
        println!("{:<24} {:<4} {:.3e} (limit {:.3e})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.value, c.limit);
    }
    Ok(if r.all_pass { 0 } else { 3 })
}
