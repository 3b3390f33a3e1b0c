//! Experiment orchestration: load or generate data, fit with one of the
//! methods and write the report artifacts.
//!
//! Every artifact is named `<hash>-<kind>.<ext>`, where the hash covers all
//! result-relevant settings, so identical configurations overwrite their
//! own files and nothing else.

mod artifacts;
mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use artifacts::{
    emit_support_map, emit_table, format_coefficients, format_table, heightmap_pgm,
    parse_coefficients, parse_table, support_map_svg, HeightmapRange, TableRow, LEVEL_COLORS,
};
pub use config::{
    parse_xyz, read_xyz, DataSource, LambdaSpec, Method, PresetSchedule, RunConfig, CONFIG_KEYS,
    DEFAULT_OUT_DIR, OUT_DIR_ENV,
};

use crate::baselines::{aglasso_solve, group_objective, multilevel_lsq};
use crate::basis::{assemble_observation, eval_surface, MultilevelBasis, ObservationBlocks, Point};
use crate::error::Result;
use crate::experiments::{data_error, l0_per_level, rms_error, Dataset, MetricGrid, TestFunction};
use crate::linalg::DiagScaling;
use crate::solver::{hard_threshold, objective, solve_mlasso, CoefBlocks, FitReport};

/// Ridge weight of the least-squares baseline.
pub const LSQ_RIDGE: f64 = 1e-12;
/// Max-norm residual at which the least-squares baseline stops adding levels.
pub const LSQ_STOP_TOL: f64 = 1e-3;

/// Scattered data ready for fitting.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub basis: MultilevelBasis<f64>,
    pub points: Vec<Point<f64>>,
    /// Values the model is fitted to.
    pub observed: Vec<f64>,
    /// Values the data error is measured against.
    pub reference: Vec<f64>,
    /// Known generating function, enabling the grid RMS.
    pub function: Option<TestFunction>,
    pub blocks: ObservationBlocks<f64>,
}

impl ProblemData {
    pub fn load(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let domain = config.domain()?;
        let basis = MultilevelBasis::new(domain, config.base_intervals, config.levels)?;
        let (points, observed, reference, function) = match &config.source {
            DataSource::Function(f) => {
                let data = Dataset::generate(*f, config.points, config.seed, &domain);
                (data.points, data.observed, data.truth, Some(*f))
            }
            DataSource::File(path) => {
                let (points, values) = read_xyz(path)?;
                (points, values.clone(), values, None)
            }
        };
        let blocks = assemble_observation(&basis, &points)?;
        Ok(Self {
            basis,
            points,
            observed,
            reference,
            function,
            blocks,
        })
    }
}

/// Raw (pre-threshold) solution of one method plus its bookkeeping.
#[derive(Debug, Clone)]
pub struct MethodSolution {
    pub raw: CoefBlocks<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub cg_failures: usize,
    pub wall_time_seconds: f64,
}

/// Runs one method on the assembled data; the clock covers the solve only.
pub fn solve_method(
    method: Method,
    data: &ProblemData,
    config: &RunConfig,
) -> Result<MethodSolution> {
    let params = config.solver_params()?;
    let dims = data.basis.level_dims();
    let blocks = &data.blocks;
    let f = &data.observed;
    let start = Instant::now();
    let sol = match method {
        Method::Mlasso => {
            let s = solve_mlasso(blocks, f, &params)?;
            let wall = start.elapsed().as_secs_f64();
            let scaling = DiagScaling::from_levels(&params.lambda, &dims)?;
            MethodSolution {
                objective: objective(blocks, f, &scaling, &s.x)?,
                raw: CoefBlocks::from_vec(s.x, &dims)?,
                iterations: s.iterations,
                converged: s.converged,
                cg_failures: s.cg_failures,
                wall_time_seconds: wall,
            }
        }
        Method::Lsq => {
            let s = multilevel_lsq(blocks, f, config.levels, LSQ_RIDGE, LSQ_STOP_TOL)?;
            let wall = start.elapsed().as_secs_f64();
            let zero_weights = vec![0.0; config.levels];
            MethodSolution {
                objective: group_objective(blocks, f, &zero_weights, s.coefs.values())?,
                iterations: s.levels_used(),
                converged: true,
                cg_failures: s.cg_failures,
                raw: s.coefs,
                wall_time_seconds: wall,
            }
        }
        Method::Aglasso => {
            let s = aglasso_solve(
                blocks,
                f,
                &params.lambda,
                params.beta,
                params.eps,
                params.max_outer,
                params.inner,
            )?;
            let wall = start.elapsed().as_secs_f64();
            MethodSolution {
                objective: group_objective(blocks, f, &params.lambda, &s.x)?,
                raw: CoefBlocks::from_vec(s.x, &dims)?,
                iterations: s.iterations,
                converged: s.converged,
                cg_failures: s.cg_failures,
                wall_time_seconds: wall,
            }
        }
    };
    Ok(sol)
}

/// Thresholded coefficients and their report row.
pub fn evaluate(
    method: Method,
    data: &ProblemData,
    sol: &MethodSolution,
    sigma: f64,
) -> Result<(CoefBlocks<f64>, FitReport)> {
    let coefs = hard_threshold(&sol.raw, sigma);
    let g = |p: Point<f64>| eval_surface(&data.basis, &coefs, p);
    let error = data_error(g, &data.points, &data.reference)?;
    let rms = data.function.map(|f| {
        rms_error(
            g,
            |p| f.eval_at(p),
            MetricGrid::default(),
            data.basis.domain(),
        )
    });
    let report = FitReport {
        method: method.name().into(),
        l0: l0_per_level(&coefs),
        error,
        rms,
        iterations: sol.iterations,
        wall_time_seconds: sol.wall_time_seconds,
        objective: sol.objective,
        converged: sol.converged,
    };
    Ok((coefs, report))
}

/// Settings echoed into the JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub source: String,
    pub points: usize,
    pub seed: u64,
    pub levels: usize,
    pub base_intervals: usize,
    pub domain: [f64; 4],
    pub lambda: Vec<f64>,
    pub beta: f64,
    pub eps: f64,
    pub sigma: f64,
    pub max_outer: usize,
    pub inner: String,
}

impl ConfigEcho {
    fn new(config: &RunConfig) -> Result<Self> {
        let source = match &config.source {
            DataSource::Function(f) => f.to_string(),
            DataSource::File(p) => p.display().to_string(),
        };
        Ok(Self {
            source,
            points: config.points,
            seed: config.seed,
            levels: config.levels,
            base_intervals: config.base_intervals,
            domain: config.domain,
            lambda: config.lambda_values()?,
            beta: config.beta,
            eps: config.eps,
            sigma: config.sigma,
            max_outer: config.max_outer,
            inner: config.inner.to_string(),
        })
    }
}

/// Contents of the JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub config: ConfigEcho,
    pub report: FitReport,
    pub cg_failures: usize,
    pub heightmap: HeightmapRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactPaths {
    pub table: PathBuf,
    pub coefficients: PathBuf,
    pub support_map: PathBuf,
    pub heightmap: PathBuf,
    pub record: PathBuf,
}

impl ArtifactPaths {
    pub fn new(dir: &Path, hash: &str) -> Self {
        let file = |kind: &str| dir.join(format!("{hash}-{kind}"));
        Self {
            table: file("report.csv"),
            coefficients: file("coefficients.txt"),
            support_map: file("support.svg"),
            heightmap: file("surface.pgm"),
            record: file("report.json"),
        }
    }

    pub fn all(&self) -> [&Path; 5] {
        [
            &self.table,
            &self.coefficients,
            &self.support_map,
            &self.heightmap,
            &self.record,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: FitReport,
    pub coefs: CoefBlocks<f64>,
    pub record: RunRecord,
    pub paths: ArtifactPaths,
}

fn write_artifacts(
    config: &RunConfig,
    data: &ProblemData,
    method: Method,
    sol: &MethodSolution,
) -> Result<RunOutput> {
    let (coefs, report) = evaluate(method, data, sol, config.sigma)?;
    let hash = config.hash(Some(method))?;
    std::fs::create_dir_all(&config.out_dir)?;
    let paths = ArtifactPaths::new(&config.out_dir, &hash);

    emit_table(std::slice::from_ref(&report), &paths.table)?;
    std::fs::write(
        &paths.coefficients,
        format_coefficients(&coefs, &data.basis),
    )?;
    emit_support_map(&coefs, &data.basis, &paths.support_map)?;
    let (pgm, range) = heightmap_pgm(&coefs, &data.basis, MetricGrid::default());
    std::fs::write(&paths.heightmap, pgm)?;
    let record = RunRecord {
        config_hash: hash,
        config: ConfigEcho::new(config)?,
        report: report.clone(),
        cg_failures: sol.cg_failures,
        heightmap: range,
    };
    let mut json = serde_json::to_string_pretty(&record)?;
    json.push('\n');
    std::fs::write(&paths.record, json)?;
    Ok(RunOutput {
        report,
        coefs,
        record,
        paths,
    })
}

/// Fits with `config.method` and writes all five artifacts.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let data = ProblemData::load(config)?;
    let sol = solve_method(config.method, &data, config)?;
    write_artifacts(config, &data, config.method, &sol)
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub runs: Vec<RunOutput>,
    /// Combined table with one row per method.
    pub table: PathBuf,
}

/// Fits every method on the same data, writing each method's artifacts and a
/// combined table.
pub fn compare(config: &RunConfig) -> Result<CompareOutput> {
    let data = ProblemData::load(config)?;
    let mut runs = Vec::new();
    for method in Method::ALL {
        let sol = solve_method(method, &data, config)?;
        runs.push(write_artifacts(config, &data, method, &sol)?);
    }
    let rows: Vec<FitReport> = runs.iter().map(|r| r.report.clone()).collect();
    let table = config
        .out_dir
        .join(format!("{}-compare.csv", config.hash(None)?));
    emit_table(&rows, &table)?;
    Ok(CompareOutput { runs, table })
}
