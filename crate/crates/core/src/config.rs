//! Flat `key = value` configuration with dotted namespaces.
//!
//! Values are numbers, `true`/`false`, bracketed number lists `[1, 2.5]`, or
//! strings (bare or double-quoted). `#` starts a comment. Unknown keys and
//! repeated keys are errors reported with their line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::ChartSampling;
use crate::nonlin::{build_counterexample, build_gap_blocker, CounterexampleParams, NonlinearityModel, ScalarFunction};
use crate::spectrum::{EigenvalueSequence, OperatorModel, DEFAULT_MODES};
use crate::wave1d::WavePipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Num,
    Int,
    Bool,
    Str,
    List,
    /// Number or list.
    NumOrList,
    /// Integer or `auto`.
    IntOrAuto,
    Path,
}

const KEYS: &[(&str, Kind)] = &[
    ("operator.kind", Kind::Str),
    ("operator.length", Kind::Num),
    ("operator.dimension", Kind::Int),
    ("operator.scale", Kind::Num),
    ("operator.values", Kind::List),
    ("operator.values_file", Kind::Path),
    ("operator.modes", Kind::Int),
    ("eps", Kind::Num),
    ("lipschitz", Kind::Num),
    ("n", Kind::IntOrAuto),
    ("seed", Kind::Int),
    ("output.dir", Kind::Path),
    ("nonlinearity.kind", Kind::Str),
    ("nonlinearity.c", Kind::NumOrList),
    ("nonlinearity.n", Kind::Int),
    ("nonlinearity.delta_rot", Kind::Num),
    ("nonlinearity.function", Kind::Str),
    ("nonlinearity.amplitude", Kind::Num),
    ("nonlinearity.frequency", Kind::Num),
    ("nonlinearity.slope", Kind::Num),
    ("nonlinearity.value", Kind::Num),
    ("nonlinearity.table", Kind::Path),
    ("counterexample.lipschitz", Kind::Num),
    ("counterexample.delta", Kind::Num),
    ("counterexample.radius", Kind::Num),
    ("counterexample.mollifier_fraction", Kind::Num),
    ("counterexample.delta_rot", Kind::Num),
    ("perron.dt", Kind::Num),
    ("perron.window", Kind::Num),
    ("perron.tol", Kind::Num),
    ("perron.max_iter", Kind::Int),
    ("chart.axis_points", Kind::Int),
    ("chart.axis_radius", Kind::Num),
    ("chart.random_points", Kind::Int),
    ("chart.ball_radius", Kind::Num),
    ("chart.cache", Kind::Bool),
    ("invariance.enabled", Kind::Bool),
    ("invariance.time", Kind::Num),
    ("invariance.step", Kind::Num),
    ("track.samples", Kind::Int),
    ("track.scale", Kind::Num),
    ("track.future", Kind::Num),
    ("track.buffer", Kind::Num),
    ("compare.eps", Kind::List),
    ("compare.p", Kind::List),
    ("wave.radius", Kind::Num),
    ("wave.cut_factor", Kind::Num),
    ("wave.width_fraction", Kind::Num),
    ("wave.forcing", Kind::List),
    ("wave.forcing_file", Kind::Path),
    ("wave.newton_tol", Kind::Num),
    ("wave.newton_max_iter", Kind::Int),
    ("wave.track_samples", Kind::Int),
    ("wave.invariance_time", Kind::Num),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Value,
    line: usize,
}

/// Parsed but untyped configuration.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    source: String,
    base_dir: PathBuf,
    entries: BTreeMap<String, Entry>,
}

fn config_error(location: String, message: impl Into<String>) -> Error {
    Error::Config {
        location,
        message: message.into(),
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        })
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(text: &str) -> std::result::Result<Value, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("missing value".into());
    }
    if let Some(inner) = t.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or("list is missing the closing ']'")?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        return inner
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("list entry '{s}' is not a finite number"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Value::List);
    }
    if let Some(inner) = t.strip_prefix('"') {
        let inner = inner.strip_suffix('"').ok_or("string is missing the closing quote")?;
        return Ok(Value::Str(inner.to_string()));
    }
    match t {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    if let Ok(v) = t.parse::<f64>() {
        if !v.is_finite() {
            return Err(format!("'{t}' is not a finite number"));
        }
        return Ok(Value::Num(v));
    }
    if t.chars().any(char::is_whitespace) {
        return Err(format!("unquoted value '{t}' contains spaces"));
    }
    Ok(Value::Str(t.to_string()))
}

fn check_kind(kind: Kind, value: &Value) -> std::result::Result<(), String> {
    let ok = match (kind, value) {
        (Kind::Num, Value::Num(_)) => true,
        (Kind::Int | Kind::IntOrAuto, Value::Num(v)) => *v >= 0.0 && v.fract() == 0.0 && *v <= 9.007e15,
        (Kind::IntOrAuto, Value::Str(s)) => s == "auto",
        (Kind::Bool, Value::Bool(_)) => true,
        (Kind::Str | Kind::Path, Value::Str(_)) => true,
        (Kind::List, Value::List(_)) => true,
        (Kind::NumOrList, Value::Num(_) | Value::List(_)) => true,
        _ => false,
    };
    if ok {
        return Ok(());
    }
    let want = match kind {
        Kind::Num => "a number",
        Kind::Int => "a nonnegative integer",
        Kind::Bool => "true or false",
        Kind::Str => "a string",
        Kind::List => "a list [a, b, ...]",
        Kind::NumOrList => "a number or a list",
        Kind::IntOrAuto => "a nonnegative integer or 'auto'",
        Kind::Path => "a file path",
    };
    Err(format!("expected {want}"))
}

impl RawConfig {
    pub fn parse(text: &str, source: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let loc = || format!("{source}:{line}");
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_error(loc(), format!("expected 'key = value', got '{body}'")))?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(config_error(loc(), format!("malformed key '{key}'")));
            }
            let kind = KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| config_error(loc(), format!("unknown key '{key}'")))?;
            let value = parse_value(value).map_err(|m| config_error(loc(), format!("{key}: {m}")))?;
            check_kind(kind, &value).map_err(|m| config_error(loc(), format!("{key}: {m}")))?;
            if let Some(prev) = entries.insert(key.to_string(), Entry { value, line }) {
                return Err(config_error(loc(), format!("key '{key}' already set on line {}", prev.line)));
            }
        }
        Ok(Self {
            source: source.to_string(),
            base_dir: base_dir.to_path_buf(),
            entries,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn location(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some(e) => format!("{}:{} ({key})", self.source, e.line),
            None => format!("{} ({key})", self.source),
        }
    }

    /// Error attributed to the line that set `key`.
    pub fn error(&self, key: &str, message: impl Into<String>) -> Error {
        config_error(self.location(key), message)
    }

    fn value(&self, key: &str) -> Option<&Value> {
        debug_assert!(KEYS.iter().any(|(k, _)| *k == key), "undeclared key {key}");
        self.entries.get(key).map(|e| &e.value)
    }

    pub fn num(&self, key: &str, default: f64) -> f64 {
        self.opt_num(key).unwrap_or(default)
    }

    pub fn opt_num(&self, key: &str) -> Option<f64> {
        match self.value(key) {
            Some(Value::Num(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn int(&self, key: &str, default: usize) -> usize {
        self.opt_num(key).map(|v| v as usize).unwrap_or(default)
    }

    pub fn boolean(&self, key: &str, default: bool) -> bool {
        match self.value(key) {
            Some(Value::Bool(b)) => *b,
            _ => default,
        }
    }

    pub fn string(&self, key: &str) -> Option<&str> {
        match self.value(key) {
            Some(Value::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self, key: &str) -> Option<&[f64]> {
        match self.value(key) {
            Some(Value::List(v)) => Some(v),
            _ => None,
        }
    }

    /// Path relative to the config file; must exist.
    pub fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        let Some(s) = self.string(key) else {
            return Ok(None);
        };
        let p = self.base_dir.join(s);
        if !p.exists() {
            return Err(self.error(key, format!("file '{}' does not exist", p.display())));
        }
        Ok(Some(p))
    }

    /// Positive finite number.
    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.num(key, default);
        if !(v > 0.0) {
            return Err(self.error(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn opt_positive(&self, key: &str) -> Result<Option<f64>> {
        match self.opt_num(key) {
            Some(v) if !(v > 0.0) => Err(self.error(key, format!("must be positive, got {v}"))),
            other => Ok(other),
        }
    }
}

/// Reads numbers from a CSV file: all fields of all rows, header allowed.
pub fn read_number_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Config {
                    location: format!("{}:{}", path.display(), i + 1),
                    message: "non-numeric field".into(),
                })
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NChoice {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearitySpec {
    Zero,
    Diagonal { c: Vec<f64> },
    GapBlocker { n: usize, delta_rot: f64 },
    Counterexample,
    Nemytskii { function: ScalarFunction },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronOverrides {
    pub dt: Option<f64>,
    pub window: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceSettings {
    pub enabled: bool,
    pub time: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackSettings {
    pub samples: usize,
    pub scale: f64,
    pub future: Option<f64>,
    pub buffer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSettings {
    pub eps: Vec<f64>,
    pub p: Option<Vec<f64>>,
}

/// Typed configuration for every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub operator: OperatorModel,
    pub modes: usize,
    pub eps: f64,
    /// Lipschitz constant for the gap conditions; the model's declared value when absent.
    pub lipschitz: Option<f64>,
    pub n: NChoice,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub nonlinearity: NonlinearitySpec,
    pub counterexample: CounterexampleParams,
    pub counterexample_delta_rot: f64,
    pub perron: PerronOverrides,
    pub chart: ChartSampling,
    pub chart_cache: bool,
    pub invariance: InvarianceSettings,
    pub track: TrackSettings,
    pub compare: CompareSettings,
    pub wave: WavePipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_raw(&RawConfig::default()).expect("defaults are valid")
    }
}

fn scalar_function(raw: &RawConfig) -> Result<ScalarFunction> {
    let name = raw.string("nonlinearity.function").unwrap_or("sine");
    Ok(match name {
        "zero" => ScalarFunction::Zero,
        "linear" => ScalarFunction::Linear {
            slope: raw.num("nonlinearity.slope", 1.0),
        },
        "constant" => ScalarFunction::Constant {
            value: raw.num("nonlinearity.value", 0.0),
        },
        "sine" => ScalarFunction::Sine {
            amplitude: raw.num("nonlinearity.amplitude", 1.0),
            frequency: raw.num("nonlinearity.frequency", 1.0),
        },
        "tanh" => ScalarFunction::Tanh {
            amplitude: raw.num("nonlinearity.amplitude", 1.0),
        },
        "table" => {
            let path = raw
                .path("nonlinearity.table")?
                .ok_or_else(|| raw.error("nonlinearity.function", "function 'table' needs nonlinearity.table"))?;
            let rows = read_number_columns(&path)?;
            if rows.iter().any(|r| r.len() != 2) {
                return Err(raw.error("nonlinearity.table", "table rows must have two columns x, f"));
            }
            let (x, f) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
            ScalarFunction::table(x, f).map_err(|e| raw.error("nonlinearity.table", e.to_string()))?
        }
        other => {
            return Err(raw.error(
                "nonlinearity.function",
                format!("unknown function '{other}' (zero, linear, constant, sine, tanh, table)"),
            ))
        }
    })
}

fn operator(raw: &RawConfig) -> Result<OperatorModel> {
    let kind = raw.string("operator.kind").unwrap_or("dirichlet1d");
    Ok(match kind {
        "dirichlet1d" => OperatorModel::Dirichlet1D {
            length: raw.positive("operator.length", PI)?,
        },
        "torus" => OperatorModel::Torus {
            dimension: raw.int("operator.dimension", 1),
            scale: raw.positive("operator.scale", 1.0)?,
        },
        "sphere" => OperatorModel::Sphere {
            dimension: raw.int("operator.dimension", 2),
        },
        "custom" => {
            let values = match (raw.list("operator.values"), raw.path("operator.values_file")?) {
                (Some(v), None) => v.to_vec(),
                (None, Some(p)) => read_number_columns(&p)?.into_iter().flatten().collect(),
                (Some(_), Some(_)) => {
                    return Err(raw.error("operator.values_file", "set operator.values or operator.values_file, not both"))
                }
                (None, None) => return Err(raw.error("operator.kind", "custom operator needs operator.values")),
            };
            OperatorModel::Custom { values }
        }
        other => {
            return Err(raw.error(
                "operator.kind",
                format!("unknown operator '{other}' (dirichlet1d, torus, sphere, custom)"),
            ))
        }
    })
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let operator = operator(raw)?;
        let default_modes = match &operator {
            OperatorModel::Custom { values } => values.len().min(DEFAULT_MODES),
            _ => DEFAULT_MODES,
        };
        let modes = raw.int("operator.modes", default_modes);
        if modes < 2 {
            return Err(raw.error("operator.modes", format!("need at least 2 modes, got {modes}")));
        }
        // Surface operator errors (unsorted custom lists, ...) at parse time.
        EigenvalueSequence::new(operator.clone(), modes).map_err(|e| raw.error("operator.kind", e.to_string()))?;
        let eps = raw.num("eps", 0.05);
        if !(eps >= 0.0) {
            return Err(raw.error("eps", format!("must be >= 0, got {eps}")));
        }
        let lipschitz = match raw.opt_num("lipschitz") {
            Some(v) if !(v >= 0.0) => return Err(raw.error("lipschitz", format!("must be >= 0, got {v}"))),
            other => other,
        };
        let n = match raw.value("n") {
            Some(Value::Str(_)) => NChoice::Auto,
            Some(Value::Num(v)) if *v >= 1.0 => NChoice::Fixed(*v as usize),
            Some(_) => return Err(raw.error("n", "must be >= 1 or 'auto'")),
            None => NChoice::Fixed(1),
        };
        let nonlinearity = match raw.string("nonlinearity.kind").unwrap_or("nemytskii") {
            "zero" => NonlinearitySpec::Zero,
            "diagonal" => {
                let c = match raw.value("nonlinearity.c") {
                    Some(Value::Num(v)) => vec![*v; modes],
                    Some(Value::List(v)) => {
                        let mut c = v.clone();
                        if c.len() > modes {
                            return Err(raw.error("nonlinearity.c", format!("{} entries for {modes} modes", c.len())));
                        }
                        c.resize(modes, 0.0);
                        c
                    }
                    _ => vec![0.5; modes],
                };
                NonlinearitySpec::Diagonal { c }
            }
            "gap_blocker" => NonlinearitySpec::GapBlocker {
                n: raw.int("nonlinearity.n", 1).max(1),
                delta_rot: raw.num("nonlinearity.delta_rot", 0.0),
            },
            "counterexample" => NonlinearitySpec::Counterexample,
            "nemytskii" => NonlinearitySpec::Nemytskii {
                function: scalar_function(raw)?,
            },
            other => {
                return Err(raw.error(
                    "nonlinearity.kind",
                    format!("unknown nonlinearity '{other}' (zero, diagonal, gap_blocker, counterexample, nemytskii)"),
                ))
            }
        };
        let counterexample = CounterexampleParams {
            lipschitz: raw.positive("counterexample.lipschitz", 3.0)?,
            delta: raw.positive("counterexample.delta", 0.5)?,
            radius: raw.opt_positive("counterexample.radius")?,
            mollifier_fraction: raw.positive("counterexample.mollifier_fraction", 0.05)?,
        };
        let perron = PerronOverrides {
            dt: raw.opt_positive("perron.dt")?,
            window: raw.opt_positive("perron.window")?,
            tol: raw.opt_positive("perron.tol")?,
            max_iter: raw.opt_num("perron.max_iter").map(|v| v as usize),
        };
        let seed = raw.opt_num("seed").map(|v| v as u64).unwrap_or(0);
        let chart = ChartSampling {
            axis_points: raw.int("chart.axis_points", 2),
            axis_radius: raw.positive("chart.axis_radius", 1.0)?,
            random_points: raw.int("chart.random_points", 8),
            ball_radius: raw.positive("chart.ball_radius", 1.0)?,
            seed,
        };
        let invariance = InvarianceSettings {
            enabled: raw.boolean("invariance.enabled", true),
            time: raw.positive("invariance.time", 1.0)?,
            step: raw.positive("invariance.step", crate::dynamics::DEFAULT_STEP)?,
        };
        let track = TrackSettings {
            samples: raw.int("track.samples", 20),
            scale: raw.positive("track.scale", 1.0)?,
            future: raw.opt_positive("track.future")?,
            buffer: raw.opt_positive("track.buffer")?,
        };
        let compare_eps = raw
            .list("compare.eps")
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4]);
        if compare_eps.iter().any(|e| !(*e > 0.0)) {
            return Err(raw.error("compare.eps", "entries must be positive"));
        }
        let compare = CompareSettings {
            eps: compare_eps,
            p: raw.list("compare.p").map(<[f64]>::to_vec),
        };
        let mut forcing = match (raw.list("wave.forcing"), raw.path("wave.forcing_file")?) {
            (Some(v), None) => v.to_vec(),
            (None, Some(p)) => read_number_columns(&p)?.into_iter().flatten().collect(),
            (Some(_), Some(_)) => return Err(raw.error("wave.forcing_file", "set wave.forcing or wave.forcing_file, not both")),
            (None, None) => vec![1.0],
        };
        if forcing.len() > modes {
            return Err(raw.error("wave.forcing", format!("{} coefficients for {modes} modes", forcing.len())));
        }
        forcing.resize(modes, 0.0);
        let wave_f = match &nonlinearity {
            NonlinearitySpec::Nemytskii { function } => function.clone(),
            NonlinearitySpec::Zero => ScalarFunction::Zero,
            _ => ScalarFunction::Sine {
                amplitude: 1.0,
                frequency: 1.0,
            },
        };
        let wave = WavePipelineConfig {
            f: wave_f,
            forcing,
            radius: raw.positive("wave.radius", 1.0)?,
            cut_factor: raw.positive("wave.cut_factor", 2.0)?,
            width_fraction: raw.positive("wave.width_fraction", 0.1)?,
            eps,
            lipschitz,
            operator: operator.clone(),
            modes,
            newton_tol: raw.positive("wave.newton_tol", 1e-10)?,
            newton_max_iter: raw.int("wave.newton_max_iter", 50),
            sampling: chart.clone(),
            track_samples: raw.int("wave.track_samples", 4),
            invariance_time: raw.positive("wave.invariance_time", 1.0)?,
            seed,
        };
        Ok(Self {
            operator,
            modes,
            eps,
            lipschitz,
            n,
            seed,
            output_dir: raw.string("output.dir").map(|s| raw.base_dir.join(s)),
            nonlinearity,
            counterexample,
            counterexample_delta_rot: raw.num("counterexample.delta_rot", 0.1),
            perron,
            chart,
            chart_cache: raw.boolean("chart.cache", false),
            invariance,
            track,
            compare,
            wave,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(&RawConfig::from_file(path)?)
    }

    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.chart.seed = seed;
        self.wave.seed = seed;
        self.wave.sampling.seed = seed;
        self
    }

    pub fn sequence(&self) -> Result<EigenvalueSequence> {
        EigenvalueSequence::new(self.operator.clone(), self.modes)
    }

    pub fn nonlinearity(&self, seq: &EigenvalueSequence) -> Result<NonlinearityModel> {
        match &self.nonlinearity {
            NonlinearitySpec::Zero => Ok(NonlinearityModel::zero(self.modes)),
            NonlinearitySpec::Diagonal { c } => Ok(NonlinearityModel::diagonal_linear(c.clone())),
            NonlinearitySpec::GapBlocker { n, delta_rot } => build_gap_blocker(seq, *n, *delta_rot, self.modes),
            NonlinearitySpec::Counterexample => {
                build_counterexample(seq, self.eps, &self.counterexample, self.modes, self.seed)
            }
            NonlinearitySpec::Nemytskii { function } => NonlinearityModel::nemytskii(function.clone(), seq, self.modes),
        }
    }
}
