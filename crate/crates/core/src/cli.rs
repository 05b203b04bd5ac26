//! Batch command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, MeasureSpace, MeasureSpec};
use crate::error::{Error, Result};
use crate::fixpoint::{abel, banach_toy, error_bound, linear_volterra, picard_solve, Problem};
use crate::gronwall::{gronwall_bound, BoundCurve, GronwallInput};
use crate::kernels::{KernelSpec, DEFAULT_SEED};
use crate::quadrature::{Accuracy, QuadratureGrid};
use crate::resolvent::{fmt17, fmt_ext, iterated_kernels};
use crate::selftest;
use crate::specfun::{mittag_leffler, MLParams};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LPGRONWALL_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const DEFAULT_GRID_LEVEL: u32 = 5;
const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn ext(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ProblemKind {
    LinearVolterra,
    Abel,
    Banach,
}

/// Subcommand together with its own parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Tabulate the iterated kernels R_1..R_n on a grid.
    Resolvent {
        #[arg(long)]
        config: PathBuf,
        /// Highest iterate.
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Evaluate the generalized Mittag-Leffler function E_{alpha,beta,p}(z).
    Ml {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        z: f64,
    },
    /// Sharp and sup-form Gronwall bounds from a JSON input.
    Gronwall {
        #[arg(long)]
        config: PathBuf,
    },
    /// Certified Picard iteration on a built-in problem.
    Solve {
        #[arg(long, value_enum, default_value = "linear_volterra")]
        problem: ProblemKind,
        /// λ of the linear Volterra problem.
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        /// α of the Abel problem.
        #[arg(long, default_value_t = 0.75)]
        alpha: f64,
        /// Contraction factor of the Banach problem.
        #[arg(long, default_value_t = 0.5)]
        lambda0: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
    },
    /// Run the acceptance suite.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Resolvent { .. } => "resolvent",
            Command::Ml { .. } => "ml",
            Command::Gronwall { .. } => "gronwall",
            Command::Solve { .. } => "solve",
            Command::Selftest => "selftest",
        }
    }

    fn config_path(&self) -> Option<&Path> {
        match self {
            Command::Resolvent { config, .. } | Command::Gronwall { config } => Some(config),
            _ => None,
        }
    }
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Output file; defaults to $LPGRONWALL_OUT_DIR/<subcommand>.<ext> or stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true, default_value = "csv")]
    format: OutputFormat,
    #[arg(long, global = true)]
    grid_level: Option<u32>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Print the resolved run configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Debug, Parser)]
#[command(name = "lpgronwall", version, about = "Iterated kernels, Gronwall bounds and certified Picard iteration")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Command,
    pub config_path: Option<PathBuf>,
    pub output: OutputFormat,
    pub out: Option<PathBuf>,
    pub grid_level: u32,
    /// Set when `--grid-level` was given explicitly.
    #[serde(default)]
    pub grid_level_override: bool,
    pub tol: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_level < 1 {
            return Err(Error::Config(format!("grid level must be at least 1, got {}", self.grid_level)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    fn from_cli(cli: Cli) -> Self {
        let g = cli.global;
        RunConfig {
            config_path: cli.command.config_path().map(Path::to_path_buf),
            subcommand: cli.command,
            output: g.format,
            out: g.out,
            grid_level: g.grid_level.unwrap_or(DEFAULT_GRID_LEVEL),
            grid_level_override: g.grid_level.is_some(),
            tol: g.tol.unwrap_or(DEFAULT_TOL),
            seed: g.seed,
        }
    }
}

/// Contents of a `resolvent` config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventConfig {
    pub kernel: KernelSpec,
    pub space: MeasureSpace,
    #[serde(default = "one")]
    pub p: f64,
    /// Tabulation nodes; defaults to a uniform grid (or the atoms).
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

/// Contents of a `gronwall` config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GronwallConfig {
    #[serde(flatten)]
    pub input: GronwallInput,
    /// Evaluation points; defaults to 11 uniform points (or the atoms).
    #[serde(default)]
    pub points: Option<Vec<PointSpec>>,
}

/// A point given as its coordinates, or as a scalar placed on the diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Coords(Vec<f64>),
}

impl PointSpec {
    fn coords(&self, dim: usize) -> Vec<f64> {
        match self {
            PointSpec::Scalar(x) => vec![*x; dim.max(1)],
            PointSpec::Coords(v) => v.clone(),
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let dump = cli.global.dump_config;
    let cfg = RunConfig::from_cli(cli);
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    if dump {
        return match serde_json::to_string_pretty(&cfg) {
            Ok(s) => {
                println!("{s}");
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        };
    }
    match execute(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CertificateDiverges(_) | Error::BudgetExceeded { .. } | Error::OutOfRange { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Output of one subcommand plus whether a numerical failure was detected.
struct Report {
    body: String,
    failed: Option<String>,
}

pub fn execute(cfg: &RunConfig) -> Result<i32> {
    let report = match &cfg.subcommand {
        Command::Resolvent { config, n } => resolvent_cmd(cfg, config, *n)?,
        Command::Ml { alpha, beta, p, z } => ml_cmd(cfg, *alpha, *beta, *p, *z)?,
        Command::Gronwall { config } => gronwall_cmd(cfg, config)?,
        Command::Solve { problem, lambda, alpha, lambda0, max_iter } => {
            let pr = match problem {
                ProblemKind::LinearVolterra => linear_volterra(*lambda, cfg.grid_level)?,
                ProblemKind::Abel => abel(*alpha, cfg.grid_level)?,
                ProblemKind::Banach => banach_toy(*lambda0)?,
            };
            solve_cmd(cfg, &pr, *max_iter)?
        }
        Command::Selftest => selftest_cmd(cfg)?,
    };
    emit(cfg, &report.body)?;
    Ok(match report.failed {
        Some(msg) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERICAL
        }
        None => EXIT_OK,
    })
}

fn emit(cfg: &RunConfig, body: &str) -> Result<()> {
    let target = cfg.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{}.{}", cfg.subcommand.name(), cfg.output.ext())))
    });
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, body)?;
        }
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("malformed config {}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn default_grid(space: &MeasureSpace, level: u32) -> Result<QuadratureGrid> {
    if let MeasureSpec::Discrete { atoms } = &space.measure {
        return QuadratureGrid::from_atoms(atoms.iter().map(|a| a.point[0]));
    }
    match space.domain.support_interval() {
        Some(iv) => QuadratureGrid::uniform(iv.lo, iv.hi, level),
        None => Err(Error::Config("cannot build a default grid on this domain; give `grid`".into())),
    }
}

fn resolvent_cmd(cfg: &RunConfig, path: &Path, n: usize) -> Result<Report> {
    let rc: ResolventConfig = read_config(path)?;
    rc.space.validate()?;
    if !matches!(rc.kernel, KernelSpec::Custom { .. }) && !matches!(rc.space.domain, DomainSpec::VoidSet { .. }) {
        rc.kernel.validate_on(&rc.space.domain, Some(rc.p), cfg.seed)?;
    }
    let grid = match &rc.grid {
        Some(nodes) => QuadratureGrid::from_atoms(nodes.iter().copied())?,
        None => default_grid(&rc.space, cfg.grid_level)?,
    };
    let tab = iterated_kernels(&rc.kernel, &rc.space, rc.p, n, &grid)?;
    let failed = (tab.accuracy == Accuracy::Divergent).then(|| "iterated kernels diverge".to_string());
    let body = match cfg.output {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            tab.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("ascii output")
        }
        OutputFormat::Json => tab.to_json()? + "\n",
    };
    Ok(Report { body, failed })
}

#[derive(Serialize)]
struct MlRow {
    alpha: f64,
    beta: f64,
    p: f64,
    z: f64,
    value: crate::extreal::ExtReal,
    tail_bound: crate::extreal::ExtReal,
    terms_used: usize,
    converged: bool,
}

fn ml_cmd(cfg: &RunConfig, alpha: f64, beta: f64, p: f64, z: f64) -> Result<Report> {
    let v = mittag_leffler(MLParams::new(alpha, beta, p)?, z, cfg.tol)?;
    let body = match cfg.output {
        OutputFormat::Csv => format!(
            "alpha,beta,p,z,value,tail_bound,terms_used,converged\n{},{},{},{},{},{},{},{}\n",
            fmt17(alpha),
            fmt17(beta),
            fmt17(p),
            fmt17(z),
            fmt_ext(v.sum),
            fmt_ext(v.tail_bound),
            v.terms_used,
            v.converged
        ),
        OutputFormat::Json => to_json(&MlRow {
            alpha,
            beta,
            p,
            z,
            value: v.sum,
            tail_bound: v.tail_bound,
            terms_used: v.terms_used,
            converged: v.converged,
        })?,
    };
    let failed = (!v.converged).then(|| "the series did not converge".to_string());
    Ok(Report { body, failed })
}

fn gronwall_cmd(cfg: &RunConfig, path: &Path) -> Result<Report> {
    let gc: GronwallConfig = read_config(path)?;
    let mut input = gc.input;
    if cfg.grid_level_override || input.level.is_none() {
        input.level = Some(cfg.grid_level);
    }
    input.validate()?;
    let dim = input.space.domain.ordered_dim();
    let points: Vec<Vec<f64>> = match gc.points {
        Some(p) => p.iter().map(|x| x.coords(dim)).collect(),
        None => match (&input.space.domain, &input.space.measure) {
            (DomainSpec::ProductBox { .. }, _) => {
                return Err(Error::Config("box domains need explicit `points`".into()));
            }
            (_, MeasureSpec::Discrete { atoms }) => atoms.iter().map(|a| a.point.clone()).collect(),
            (d, _) => {
                let iv = d
                    .support_interval()
                    .ok_or_else(|| Error::Config("give `points` for this domain".into()))?;
                (0..=10).map(|i| vec![iv.lo + iv.length() * i as f64 / 10.0]).collect()
            }
        },
    };
    let bounds = points.iter().map(|t| gronwall_bound(&input, t)).collect::<Result<Vec<_>>>()?;
    let curve = BoundCurve {
        tail_bound: bounds.iter().map(|b| b.tail).fold(0.0, f64::max),
        points: bounds,
        m: input.m(),
    };
    let failed = curve
        .points
        .iter()
        .find(|b| b.sharp.is_infinite())
        .map(|b| format!("the sharp bound is infinite at t = {}", b.t));
    let body = match cfg.output {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("ascii output")
        }
        OutputFormat::Json => to_json(&curve)?,
    };
    Ok(Report { body, failed })
}

#[derive(Serialize)]
struct SolveRow {
    n: usize,
    t: f64,
    measured_error_vs_reference: f64,
    certified_bound: crate::extreal::ExtReal,
}

fn solve_cmd(cfg: &RunConfig, pr: &Problem, max_iter: usize) -> Result<Report> {
    let eval: Vec<f64> = if matches!(pr.op.space.domain, DomainSpec::VoidSet { .. }) {
        vec![pr.op.grid[0]]
    } else {
        vec![0.2, 0.4, 0.6, 0.8, 1.0]
    };
    let run = picard_solve(&pr.op, &pr.x0, cfg.tol, max_iter, &eval)?;
    let cert = &run.certificate;
    let mut rows = Vec::new();
    for n in 0..=cert.iterates {
        for (k, &t) in cert.eval_points.iter().enumerate() {
            rows.push(SolveRow {
                n,
                t,
                measured_error_vs_reference: pr.op.distance(&run.iterates[n], &pr.reference, t),
                certified_bound: error_bound(cert, n, k)?.table,
            });
        }
    }
    let body = match cfg.output {
        OutputFormat::Csv => {
            let mut s = String::from("n,t,measured_error_vs_reference,certified_bound\n");
            for r in &rows {
                s += &format!("{},{},{},{}\n", r.n, fmt17(r.t), fmt17(r.measured_error_vs_reference), fmt_ext(r.certified_bound));
            }
            s
        }
        OutputFormat::Json => to_json(&rows)?,
    };
    let failed = (!cert.converged).then(|| {
        format!("no certified convergence to tol {} within {} iterations", cfg.tol, cert.iterates)
    });
    Ok(Report { body, failed })
}

fn selftest_cmd(cfg: &RunConfig) -> Result<Report> {
    let outcomes = selftest::run_all();
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("C{}", o.id)).collect();
    let body = match cfg.output {
        OutputFormat::Csv => {
            let mut s = String::from("id,name,passed,seconds,detail\n");
            for o in &outcomes {
                s += &format!("{},{},{},{:.3},\"{}\"\n", o.id, o.name, o.passed, o.seconds, o.detail.replace('"', "'"));
            }
            s
        }
        OutputFormat::Json => to_json(&outcomes)?,
    };
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    Ok(Report { body, failed: (!failed.is_empty()).then(|| format!("failed criteria: {}", failed.join(", "))) })
}
