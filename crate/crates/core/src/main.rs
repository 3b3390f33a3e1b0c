use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mlasso::cli::{compare, format_table, run, RunConfig, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "mlasso",
    version,
    about = "Sparse multilevel B-spline fitting of scattered data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit with a single method and write its artifacts.
    Run(ConfigArgs),
    /// Fit with every method on the same data and write a combined table.
    Compare(ConfigArgs),
}

/// Settings are layered: defaults, then the config file, then flags.
#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Test function: f1, f2, f3 or f4.
    #[arg(long)]
    function: Option<String>,
    /// Scattered data file with `x y f` records.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Number of scattered points drawn for a test function.
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of levels J.
    #[arg(long)]
    levels: Option<String>,
    /// Knot intervals per side on the coarsest level.
    #[arg(long)]
    base_intervals: Option<String>,
    /// Domain as x_min,x_max,y_min,y_max.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Per-level weights, comma separated (one value applies to all levels).
    #[arg(long, conflicts_with = "preset")]
    lambda: Option<String>,
    /// Weight schedule: uniform(c) or u-shape(hi,lo).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Stopping threshold on the splitting residual.
    #[arg(long)]
    eps: Option<String>,
    /// Hard threshold applied after solving.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    max_outer: Option<String>,
    /// X-update solver: auto, cholesky or cg.
    #[arg(long)]
    inner: Option<String>,
    /// mlasso, lsq or aglasso.
    #[arg(long)]
    method: Option<String>,
    /// Output directory (default from the environment, else ./mlasso-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> mlasso::Result<RunConfig> {
        let mut cfg = RunConfig::from_env();
        if let Some(path) = &self.config {
            cfg.merge_file(path)?;
        }
        let input = self.input.as_ref().map(|p| p.display().to_string());
        let out = self.out.as_ref().map(|p| p.display().to_string());
        let flags = [
            ("function", &self.function),
            ("input", &input),
            ("points", &self.points),
            ("seed", &self.seed),
            ("levels", &self.levels),
            ("base_intervals", &self.base_intervals),
            ("domain", &self.domain),
            ("lambda", &self.lambda),
            ("preset", &self.preset),
            ("beta", &self.beta),
            ("eps", &self.eps),
            ("sigma", &self.sigma),
            ("max_outer", &self.max_outer),
            ("inner", &self.inner),
            ("method", &self.method),
            ("out", &out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: &Cli) -> mlasso::Result<()> {
    match &cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let out = run(&cfg)?;
            print!("{}", format_table(std::slice::from_ref(&out.report))?);
            if !out.report.converged {
                eprintln!(
                    "warning: stopped at max_outer = {} without meeting eps",
                    cfg.max_outer
                );
            }
            for p in out.paths.all() {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Compare(args) => {
            let cfg = args.resolve()?;
            let out = compare(&cfg)?;
            let rows: Vec<_> = out.runs.iter().map(|r| r.report.clone()).collect();
            print!("{}", format_table(&rows)?);
            for r in out.runs.iter().filter(|r| !r.report.converged) {
                eprintln!(
                    "warning: {} stopped at max_outer without meeting eps",
                    r.report.method
                );
            }
            eprintln!("wrote {}", out.table.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, mlasso::Error::Io(_)) {
                eprintln!("(the output directory can also be set through {OUT_DIR_ENV})");
            }
            ExitCode::FAILURE
        }
    }
}
