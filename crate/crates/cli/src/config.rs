//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dbar_core::exact::{fmt_rational_compact, parse_rational};
use dbar_core::experiments::{ExperimentConfig, QuadratureConfig, Tolerances};
use dbar_core::{Rational, WeightSequence};
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Solve,
    Sweep,
    Lempert,
    Mc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Lempert => "lempert",
            Command::Mc => "mc",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "verify" => Command::Verify,
            "solve" => Command::Solve,
            "sweep" => Command::Sweep,
            "lempert" => Command::Lempert,
            "mc" => Command::Mc,
            "" => return Err("command is empty".into()),
            other => return Err(format!("unknown command `{other}` (expected verify, solve, sweep, lempert or mc)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightsSpec {
    /// `a_k = c r^{k-1}`, materialized for `k ≤ len`.
    Geometric { c: Rational, r: Rational, len: usize },
    Explicit(Vec<Rational>),
}

impl WeightsSpec {
    pub fn build(&self) -> dbar_core::Result<WeightSequence> {
        match self {
            WeightsSpec::Geometric { c, r, len } => WeightSequence::geometric(c.clone(), r.clone(), *len),
            WeightsSpec::Explicit(v) => WeightSequence::explicit(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    fn name(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoConfig {
    pub form: Option<PathBuf>,
    pub output: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub weights: WeightsSpec,
    pub n_range: Vec<usize>,
    pub s: usize,
    pub t: usize,
    pub degree_cap: u32,
    pub seed: u64,
    pub case_count: usize,
    pub samples: usize,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub r0: Rational,
    pub hermite_cap: u32,
    pub mc_sigma: f64,
    pub lempert_rel_residual: f64,
    pub lempert_p: u32,
    pub io: IoConfig,
}

impl RunConfig {
    /// Defaults for every key except `command`.
    pub fn with_command(command: Command) -> Self {
        let e = ExperimentConfig::default();
        Self {
            command,
            weights: WeightsSpec::Geometric { c: BigRational::new(1.into(), 4.into()), r: BigRational::new(1.into(), 2.into()), len: 64 },
            n_range: e.n_range,
            s: e.s,
            t: e.t,
            degree_cap: e.degree_cap,
            seed: e.seed,
            case_count: e.case_count,
            samples: e.samples,
            jobs: 0,
            radial_nodes: e.quadrature.radial_nodes,
            angular_nodes: e.quadrature.angular_nodes,
            r0: e.quadrature.r0,
            hermite_cap: e.quadrature.hermite_cap,
            mc_sigma: e.tolerances.mc_sigma,
            lempert_rel_residual: e.tolerances.lempert_rel_residual,
            lempert_p: 2,
            io: IoConfig { form: None, output: PathBuf::from("dbar-out"), format: OutputFormat::Both },
        }
    }

    pub fn experiment(&self) -> dbar_core::Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            weights: self.weights.build()?,
            n_range: self.n_range.clone(),
            s: self.s,
            t: self.t,
            degree_cap: self.degree_cap,
            seed: self.seed,
            case_count: self.case_count,
            samples: self.samples,
            quadrature: QuadratureConfig {
                radial_nodes: self.radial_nodes,
                angular_nodes: self.angular_nodes,
                r0: self.r0.clone(),
                hermite_cap: self.hermite_cap,
            },
            tolerances: Tolerances { mc_sigma: self.mc_sigma, lempert_rel_residual: self.lempert_rel_residual },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Validation,
}

/// A located configuration problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub kind: ErrorKind,
    pub key: String,
    /// 1-based line, 0 when the problem is not tied to a line.
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Parse => "parse error",
            ErrorKind::Validation => "validation error",
        };
        if self.line > 0 {
            write!(f, "{kind} at line {} ({}): {}", self.line, self.key, self.reason)
        } else {
            write!(f, "{kind} ({}): {}", self.key, self.reason)
        }
    }
}

const KEYS: [&str; 26] = [
    "command",
    "weights.kind",
    "weights.c",
    "weights.r",
    "weights.N",
    "weights.values",
    "experiment.n_range",
    "experiment.s",
    "experiment.t",
    "experiment.degree_cap",
    "experiment.seed",
    "experiment.case_count",
    "experiment.samples",
    "experiment.jobs",
    "quadrature.radial_nodes",
    "quadrature.angular_nodes",
    "quadrature.r0",
    "quadrature.hermite_cap",
    "tolerances.mc_sigma",
    "tolerances.lempert_rel_residual",
    "lempert.p",
    "io.form",
    "io.output",
    "io.format",
    // accepted aliases
    "weights.n",
    "experiment.n",
];

fn canonical(key: &str) -> &str {
    match key {
        "weights.n" => "weights.N",
        "experiment.n" => "experiment.n_range",
        k => k,
    }
}

/// `key -> (line, value)` after comment stripping; later duplicates are errors.
fn tokenize(text: &str, errors: &mut Vec<ConfigError>) -> BTreeMap<String, (usize, String)> {
    let mut out: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            errors.push(ConfigError { kind: ErrorKind::Parse, key: body.to_string(), line, reason: "expected `key = value`".into() });
            continue;
        };
        let key = k.trim();
        if !KEYS.contains(&key) {
            errors.push(ConfigError { kind: ErrorKind::Parse, key: key.to_string(), line, reason: "unknown key".into() });
            continue;
        }
        let key = canonical(key).to_string();
        if let Some((first, _)) = out.get(&key) {
            errors.push(ConfigError { kind: ErrorKind::Parse, key, line, reason: format!("duplicate key (first set at line {first})") });
            continue;
        }
        out.insert(key, (line, v.trim().to_string()));
    }
    out
}

fn parse_usize_list(v: &str) -> Result<Vec<usize>, String> {
    let v = v.trim().trim_start_matches('[').trim_end_matches(']');
    if let Some((lo, hi)) = v.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| format!("invalid range start `{lo}`"))?;
        let hi = hi.trim().trim_start_matches('=');
        let hi: usize = hi.trim().parse().map_err(|_| format!("invalid range end `{hi}`"))?;
        return Ok((lo..=hi).collect());
    }
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("invalid integer `{s}`")))
        .collect()
}

struct Reader<'a> {
    tokens: &'a BTreeMap<String, (usize, String)>,
    errors: &'a mut Vec<ConfigError>,
}

impl Reader<'_> {
    fn get<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> T {
        match self.tokens.get(key) {
            None => default,
            Some((line, v)) => match parse(v) {
                Ok(x) => x,
                Err(reason) => {
                    self.errors.push(ConfigError { kind: ErrorKind::Parse, key: key.into(), line: *line, reason });
                    default
                }
            },
        }
    }

    fn num<T: FromStr>(&mut self, key: &str, default: T) -> T {
        self.get(key, default, |v| v.parse::<T>().map_err(|_| format!("invalid number `{v}`")))
    }

    fn rational(&mut self, key: &str, default: Rational) -> Rational {
        self.get(key, default, |v| parse_rational(v).map_err(|e| e.to_string()))
    }

    fn line(&self, key: &str) -> usize {
        self.tokens.get(key).map_or(0, |(l, _)| *l)
    }
}

/// Parses and validates; every problem found is reported.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    parse_config_with(text, &[])
}

/// As [`parse_config`], with `(key, value)` pairs replacing file entries.
pub fn parse_config_with(text: &str, overrides: &[(&str, String)]) -> Result<RunConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut tokens = tokenize(text, &mut errors);
    for (k, v) in overrides {
        let line = tokens.get(*k).map_or(0, |(l, _)| *l);
        tokens.insert(canonical(k).to_string(), (line, v.clone()));
    }
    let command = match tokens.get("command") {
        None => {
            errors.push(ConfigError { kind: ErrorKind::Parse, key: "command".into(), line: 0, reason: "command is missing".into() });
            None
        }
        Some((line, v)) => match v.parse::<Command>() {
            Ok(c) => Some(c),
            Err(reason) => {
                errors.push(ConfigError { kind: ErrorKind::Parse, key: "command".into(), line: *line, reason });
                None
            }
        },
    };
    let mut cfg = RunConfig::with_command(command.unwrap_or(Command::Verify));
    let mut rd = Reader { tokens: &tokens, errors: &mut errors };

    let kind = rd.get("weights.kind", "geometric".to_string(), |v| match v {
        "geometric" | "explicit" => Ok(v.to_string()),
        _ => Err(format!("unknown weights kind `{v}` (expected geometric or explicit)")),
    });
    if kind == "geometric" {
        let WeightsSpec::Geometric { c, r, len } = cfg.weights.clone() else { unreachable!() };
        cfg.weights = WeightsSpec::Geometric {
            c: rd.rational("weights.c", c),
            r: rd.rational("weights.r", r),
            len: rd.num("weights.N", len),
        };
    } else {
        let values = rd.get("weights.values", Vec::new(), |v| {
            v.split(',').map(|x| parse_rational(x.trim()).map_err(|e| e.to_string())).collect()
        });
        cfg.weights = WeightsSpec::Explicit(values);
    }
    cfg.n_range = rd.get("experiment.n_range", cfg.n_range.clone(), parse_usize_list);
    cfg.s = rd.num("experiment.s", cfg.s);
    cfg.t = rd.num("experiment.t", cfg.t);
    cfg.degree_cap = rd.num("experiment.degree_cap", cfg.degree_cap);
    cfg.seed = rd.num("experiment.seed", cfg.seed);
    cfg.case_count = rd.num("experiment.case_count", cfg.case_count);
    cfg.samples = rd.num("experiment.samples", cfg.samples);
    cfg.jobs = rd.num("experiment.jobs", cfg.jobs);
    cfg.radial_nodes = rd.num("quadrature.radial_nodes", cfg.radial_nodes);
    cfg.angular_nodes = rd.num("quadrature.angular_nodes", cfg.angular_nodes);
    cfg.r0 = rd.rational("quadrature.r0", cfg.r0.clone());
    cfg.hermite_cap = rd.num("quadrature.hermite_cap", cfg.hermite_cap);
    cfg.mc_sigma = rd.num("tolerances.mc_sigma", cfg.mc_sigma);
    cfg.lempert_rel_residual = rd.num("tolerances.lempert_rel_residual", cfg.lempert_rel_residual);
    cfg.lempert_p = rd.num("lempert.p", cfg.lempert_p);
    cfg.io.form = rd.get("io.form", None, |v| Ok((!v.is_empty()).then(|| PathBuf::from(v))));
    cfg.io.output = rd.get("io.output", cfg.io.output.clone(), |v| {
        if v.is_empty() {
            Err("output directory is empty".into())
        } else {
            Ok(PathBuf::from(v))
        }
    });
    cfg.io.format = rd.get("io.format", cfg.io.format, |v| match v {
        "json" => Ok(OutputFormat::Json),
        "csv" => Ok(OutputFormat::Csv),
        "both" => Ok(OutputFormat::Both),
        _ => Err(format!("unknown format `{v}` (expected json, csv or both)")),
    });

    if errors.is_empty() {
        validate(&cfg, &tokens, &mut errors);
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

fn validate(cfg: &RunConfig, tokens: &BTreeMap<String, (usize, String)>, errors: &mut Vec<ConfigError>) {
    let rd = Reader { tokens, errors: &mut Vec::new() };
    let mut fail = |key: &str, reason: String| {
        errors.push(ConfigError { kind: ErrorKind::Validation, key: key.into(), line: rd.line(key), reason });
    };
    match &cfg.weights {
        WeightsSpec::Geometric { c, r, len } => {
            if !(c > &Rational::zero() && r > &Rational::zero() && r < &Rational::one()) {
                fail("weights.c", "geometric weights need c > 0 and 0 < r < 1".into());
            } else if c / (Rational::one() - r) >= Rational::one() {
                fail(
                    "weights.c",
                    format!(
                        "sum of weights c/(1-r) = {} is not < 1; the weight sequence must be positive with sum below 1",
                        fmt_rational_compact(&(c / (Rational::one() - r)))
                    ),
                );
            }
            if *len == 0 {
                fail("weights.N", "at least one weight must be materialized".into());
            }
        }
        WeightsSpec::Explicit(values) => {
            if values.is_empty() || values.iter().any(|v| v <= &Rational::zero()) {
                fail("weights.values", "explicit weights must be a nonempty list of positive rationals".into());
            } else {
                let total: Rational = values.iter().sum();
                if total >= Rational::one() {
                    fail(
                        "weights.values",
                        format!("sum of weights {} is not < 1; the weight sequence must be positive with sum below 1", fmt_rational_compact(&total)),
                    );
                }
            }
        }
    }
    if cfg.n_range.is_empty() || cfg.n_range[0] == 0 || cfg.n_range.windows(2).any(|p| p[0] >= p[1]) {
        fail("experiment.n_range", "must be a nonempty, strictly increasing list of positive integers".into());
    }
    let len = match &cfg.weights {
        WeightsSpec::Geometric { len, .. } => *len,
        WeightsSpec::Explicit(v) => v.len(),
    };
    if let Some(&max_n) = cfg.n_range.last() {
        if max_n > len {
            fail("experiment.n_range", format!("dimension {max_n} exceeds the {len} materialized weights"));
        }
    }
    if !(cfg.r0 > Rational::zero() && cfg.r0 < Rational::one()) {
        fail("quadrature.r0", "cutoff radius must lie in (0, 1)".into());
    }
    if cfg.radial_nodes == 0 || cfg.angular_nodes == 0 {
        fail("quadrature.radial_nodes", "node counts must be positive".into());
    }
    if !(cfg.mc_sigma > 0.0) || !cfg.mc_sigma.is_finite() {
        fail("tolerances.mc_sigma", "must be a positive finite number".into());
    }
    if !(cfg.lempert_rel_residual >= 0.0) || !cfg.lempert_rel_residual.is_finite() {
        fail("tolerances.lempert_rel_residual", "must be a nonnegative finite number".into());
    }
    if cfg.lempert_p == 0 {
        fail("lempert.p", "must be a positive integer".into());
    }
    if matches!(cfg.command, Command::Solve | Command::Mc) {
        match &cfg.io.form {
            None => fail("io.form", format!("`{}` needs an input form", cfg.command.name())),
            Some(p) if !p.is_file() => fail("io.form", format!("input form `{}` does not exist", p.display())),
            Some(_) => {}
        }
    }
}

/// Canonical text; `parse_config(render_config(c)) == c`.
pub fn render_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("command", cfg.command.name().into());
    match &cfg.weights {
        WeightsSpec::Geometric { c, r, len } => {
            put("weights.kind", "geometric".into());
            put("weights.c", fmt_rational_compact(c));
            put("weights.r", fmt_rational_compact(r));
            put("weights.N", len.to_string());
        }
        WeightsSpec::Explicit(v) => {
            put("weights.kind", "explicit".into());
            put("weights.values", v.iter().map(fmt_rational_compact).collect::<Vec<_>>().join(", "));
        }
    }
    put("experiment.n_range", cfg.n_range.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "));
    put("experiment.s", cfg.s.to_string());
    put("experiment.t", cfg.t.to_string());
    put("experiment.degree_cap", cfg.degree_cap.to_string());
    put("experiment.seed", cfg.seed.to_string());
    put("experiment.case_count", cfg.case_count.to_string());
    put("experiment.samples", cfg.samples.to_string());
    put("experiment.jobs", cfg.jobs.to_string());
    put("quadrature.radial_nodes", cfg.radial_nodes.to_string());
    put("quadrature.angular_nodes", cfg.angular_nodes.to_string());
    put("quadrature.r0", fmt_rational_compact(&cfg.r0));
    put("quadrature.hermite_cap", cfg.hermite_cap.to_string());
    put("tolerances.mc_sigma", format!("{:?}", cfg.mc_sigma));
    put("tolerances.lempert_rel_residual", format!("{:?}", cfg.lempert_rel_residual));
    put("lempert.p", cfg.lempert_p.to_string());
    if let Some(p) = &cfg.io.form {
        put("io.form", p.display().to_string());
    }
    put("io.output", cfg.io.output.display().to_string());
    put("io.format", cfg.io.format.name().into());
    out
}
