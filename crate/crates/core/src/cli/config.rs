//! Run configuration: defaults, flat `key = value` files, presets and the
//! scattered-data text format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{Domain, Point};
use crate::error::{Error, Result};
use crate::experiments::TestFunction;
use crate::solver::{InnerSolver, SolverParams, DEFAULT_MAX_OUTER};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MLASSO_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "mlasso-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mlasso,
    Lsq,
    Aglasso,
}

impl Method {
    pub const ALL: [Method; 3] = [Self::Mlasso, Self::Lsq, Self::Aglasso];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mlasso => "mlasso",
            Self::Lsq => "lsq",
            Self::Aglasso => "aglasso",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mlasso" => Ok(Self::Mlasso),
            "lsq" | "mba" => Ok(Self::Lsq),
            "aglasso" => Ok(Self::Aglasso),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Named rule expanding to one weight per level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetSchedule {
    /// The same weight on every level.
    Uniform(f64),
    /// `hi` on the first and last level, `lo` in between.
    UShape { hi: f64, lo: f64 },
}

impl PresetSchedule {
    pub fn expand(&self, levels: usize) -> Vec<f64> {
        match *self {
            Self::Uniform(c) => vec![c; levels],
            Self::UShape { hi, lo } => (0..levels)
                .map(|j| if j == 0 || j + 1 == levels { hi } else { lo })
                .collect(),
        }
    }
}

impl fmt::Display for PresetSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform(c) => write!(f, "uniform({c:?})"),
            Self::UShape { hi, lo } => write!(f, "u-shape({hi:?},{lo:?})"),
        }
    }
}

impl FromStr for PresetSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse preset '{s}'"));
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args = parse_list(inner).map_err(|_| bad())?;
        match (
            s[..open].trim().to_ascii_lowercase().as_str(),
            args.as_slice(),
        ) {
            ("uniform", &[c]) => Ok(Self::Uniform(c)),
            ("u-shape" | "ushape", &[hi, lo]) => {
                if hi < lo {
                    return Err(Error::Config(format!(
                        "u-shape needs outer weight >= inner weight, got {hi} < {lo}"
                    )));
                }
                Ok(Self::UShape { hi, lo })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    Explicit(Vec<f64>),
    Preset(PresetSchedule),
}

impl LambdaSpec {
    pub fn resolve(&self, levels: usize) -> Result<Vec<f64>> {
        match self {
            Self::Preset(p) => Ok(p.expand(levels)),
            Self::Explicit(v) if v.len() == levels => Ok(v.clone()),
            Self::Explicit(v) if v.len() == 1 => Ok(vec![v[0]; levels]),
            Self::Explicit(v) => Err(Error::Config(format!(
                "{} lambda values given for {levels} levels",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Function(TestFunction),
    /// Text file of `x y f` records.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    /// Number of scattered points drawn for a test function.
    pub points: usize,
    pub seed: u64,
    pub levels: usize,
    pub base_intervals: usize,
    pub domain: [f64; 4],
    pub lambda: LambdaSpec,
    pub beta: f64,
    pub eps: f64,
    pub sigma: f64,
    pub max_outer: usize,
    pub inner: InnerSolver,
    pub method: Method,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Function(TestFunction::F3),
            points: 900,
            seed: 42,
            levels: 3,
            base_intervals: 3,
            domain: [-1.0, 1.0, -1.0, 1.0],
            lambda: LambdaSpec::Preset(PresetSchedule::Uniform(0.001)),
            beta: 1.0,
            eps: 1e-4,
            sigma: 1e-3,
            max_outer: DEFAULT_MAX_OUTER,
            inner: InnerSolver::Auto,
            method: Method::Mlasso,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

pub const CONFIG_KEYS: [&str; 16] = [
    "function",
    "input",
    "points",
    "seed",
    "levels",
    "base_intervals",
    "domain",
    "lambda",
    "preset",
    "beta",
    "eps",
    "sigma",
    "max_outer",
    "inner",
    "method",
    "out",
];

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("'{}' is not a number", t.trim())))
        })
        .collect()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

impl RunConfig {
    /// Defaults with the output directory taken from the environment when set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.out_dir = PathBuf::from(dir);
        }
        cfg
    }

    /// Applies one setting; keys are those of [`CONFIG_KEYS`] (dashes and
    /// underscores are interchangeable).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "function" => self.source = DataSource::Function(parse_value(&key, value)?),
            "input" => self.source = DataSource::File(PathBuf::from(value)),
            "points" => self.points = parse_value(&key, value)?,
            "seed" => self.seed = parse_value(&key, value)?,
            "levels" => self.levels = parse_value(&key, value)?,
            "base_intervals" => self.base_intervals = parse_value(&key, value)?,
            "domain" => {
                let v = parse_list(value)?;
                self.domain = v.try_into().map_err(|_| {
                    Error::Config("domain needs four values: x_min,x_max,y_min,y_max".into())
                })?;
            }
            "lambda" => self.lambda = LambdaSpec::Explicit(parse_list(value)?),
            "preset" => self.lambda = LambdaSpec::Preset(value.parse()?),
            "beta" => self.beta = parse_value(&key, value)?,
            "eps" => self.eps = parse_value(&key, value)?,
            "sigma" => self.sigma = parse_value(&key, value)?,
            "max_outer" => self.max_outer = parse_value(&key, value)?,
            "inner" => self.inner = value.parse()?,
            "method" => self.method = value.parse()?,
            "out" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config text. Blank lines and
    /// `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.merge_text(&text)
    }

    pub fn lambda_values(&self) -> Result<Vec<f64>> {
        self.lambda.resolve(self.levels)
    }

    pub fn domain(&self) -> Result<Domain<f64>> {
        let [x0, x1, y0, y1] = self.domain;
        Domain::new(x0, x1, y0, y1)
    }

    /// Solver parameters with the preset resolved.
    pub fn solver_params(&self) -> Result<SolverParams<f64>> {
        let mut p = SolverParams::new(self.lambda_values()?);
        p.beta = self.beta;
        p.eps = self.eps;
        p.sigma = self.sigma;
        p.max_outer = self.max_outer;
        p.inner = self.inner;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if self.base_intervals == 0 {
            return Err(Error::Config("base_intervals must be at least 1".into()));
        }
        if matches!(self.source, DataSource::Function(_)) && self.points == 0 {
            return Err(Error::Config("points must be at least 1".into()));
        }
        self.domain()?;
        self.solver_params()?;
        Ok(())
    }

    /// Canonical text of everything that influences the results. Timing and
    /// the output directory are left out; a data file enters by content.
    pub fn canonical(&self, method: Option<Method>) -> Result<String> {
        let mut s = String::new();
        match &self.source {
            DataSource::Function(f) => {
                s += &format!("function={f}\npoints={}\nseed={}\n", self.points, self.seed);
            }
            DataSource::File(path) => {
                let bytes = std::fs::read(path)?;
                s += &format!("input_sha256={}\n", hex(&Sha256::digest(&bytes)));
            }
        }
        let lambda: Vec<String> = self
            .lambda_values()?
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        s += &format!(
            "levels={}\nbase_intervals={}\ndomain={:?}\nlambda={}\nbeta={:?}\neps={:?}\nsigma={:?}\nmax_outer={}\ninner={}\n",
            self.levels,
            self.base_intervals,
            self.domain,
            lambda.join(","),
            self.beta,
            self.eps,
            self.sigma,
            self.max_outer,
            self.inner,
        );
        if let Some(m) = method {
            s += &format!("method={m}\n");
        }
        Ok(s)
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self, method: Option<Method>) -> Result<String> {
        let digest = Sha256::digest(self.canonical(method)?.as_bytes());
        Ok(hex(&digest)[..16].to_string())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(head, _)| head)
}

/// Reads whitespace-separated `x y f` records; `#` starts a comment.
pub fn parse_xyz(text: &str) -> Result<(Vec<Point<f64>>, Vec<f64>)> {
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        if fields.len() != 3 {
            return Err(parse_err(format!(
                "expected 3 fields, found {}",
                fields.len()
            )));
        }
        let mut v = [0.0; 3];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(format!("'{field}' is not a finite number")))?;
        }
        points.push([v[0], v[1]]);
        values.push(v[2]);
    }
    if points.is_empty() {
        return Err(Error::Config("input contains no data records".into()));
    }
    Ok((points, values))
}

pub fn read_xyz(path: &Path) -> Result<(Vec<Point<f64>>, Vec<f64>)> {
    parse_xyz(&std::fs::read_to_string(path)?)
}
