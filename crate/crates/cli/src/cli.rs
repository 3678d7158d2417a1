//! Argument parsing and command dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use perfdro_core::calibrate::{calibration_set_select, four_fifth_select, post_fit_calibrate, MisspecScenario};
use perfdro_core::solvers::write_trace_csv;
use perfdro_core::{
    bootstrap_resample, minimize_drpr, minimize_pr, minimize_tpr, CalibrationResult, DistributionMap, DualSolution,
    Error, LinearLoss, LossModel, ResponseMap,
};
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::data::gen_fairness_data;
use crate::experiments::{
    derive_seed, fairness_maps, load_base, location_a_true, nominal_problem, run_experiment, strategic_eps_grid,
    Problem, STREAM_CAL,
};
use crate::output::emit_outputs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "perf-dro", version, about = "Distributionally robust performative prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override the number of trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for `solution.json` and `trace.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CalMethod {
    PostFit,
    CalSet,
    FourFifth,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the performative risk.
    SolvePo(SolveArgs),
    /// Minimize the KL-robust performative risk.
    SolveDrpo {
        #[command(flatten)]
        args: SolveArgs,
        /// Radius; defaults to the first positive entry of `rho_list`.
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Minimize the tilted performative risk.
    SolveTpo {
        #[command(flatten)]
        args: SolveArgs,
        /// Tilt; defaults to the first positive entry of `alpha_list`.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Select a radius or tilt.
    Calibrate {
        #[arg(long, value_enum)]
        method: CalMethod,
        #[arg(long)]
        config: PathBuf,
        /// Directory for `calibration.json` and `calibration.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full sweep and write its CSV and SVG outputs.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKindArg,
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKindArg {
    Strategic,
    Location,
    Fairness,
    Toy,
}

impl From<ExperimentKindArg> for ExperimentKind {
    fn from(k: ExperimentKindArg) -> Self {
        match k {
            ExperimentKindArg::Strategic => Self::Strategic,
            ExperimentKindArg::Location => Self::Location,
            ExperimentKindArg::Fairness => Self::Fairness,
            ExperimentKindArg::Toy => Self::Toy,
        }
    }
}

/// Exit status for an error: 2 for configuration and input problems, 3 for
/// solver divergence, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Divergence { .. } => EXIT_DIVERGENCE,
                Error::Argument(_)
                | Error::Schema(_)
                | Error::Parse { .. }
                | Error::EmptyData(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::DimensionMismatch { .. }
                | Error::Bracket(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

/// Solver divergence inside a sweep, reported after the outputs are written.
#[derive(Debug, thiserror::Error)]
#[error("{count} sweep cell(s) diverged; see failures.csv")]
pub struct SweepDiverged {
    pub count: usize,
}

fn load_config(path: &Path, o: &Overrides) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if o.workers.is_some() {
        cfg.workers = o.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot start worker pool")?;
            Ok(pool.install(f))
        }
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn first_positive(xs: &[f64], name: &str) -> anyhow::Result<f64> {
    xs.iter()
        .copied()
        .find(|&x| x > 0.0)
        .ok_or_else(|| anyhow!(ConfigError::Invalid(format!("{name} has no positive entry; pass it explicitly"))))
}

enum SolveKind {
    Po,
    Drpo(f64),
    Tpo(f64),
}

fn solve(cfg: &ExperimentConfig, kind: SolveKind) -> anyhow::Result<DualSolution<f64>> {
    let problem = nominal_problem(cfg)?;
    let solver = &cfg.solver;
    let sol = match problem {
        Problem::Logistic { model, map } => {
            let theta0 = vec![0.0; map.param_dim()];
            match kind {
                SolveKind::Po => minimize_pr(&model, &map, solver, &theta0)?,
                SolveKind::Drpo(r) => minimize_drpr(&model, &map, r, solver, &theta0)?,
                SolveKind::Tpo(a) => minimize_tpr(&model, &map, a, solver, &theta0)?,
            }
        }
        Problem::Toy { map } => {
            let theta0 = [0.0];
            match kind {
                SolveKind::Po => minimize_pr(&LinearLoss, &map, solver, &theta0)?,
                SolveKind::Drpo(r) => minimize_drpr(&LinearLoss, &map, r, solver, &theta0)?,
                SolveKind::Tpo(a) => minimize_tpr(&LinearLoss, &map, a, solver, &theta0)?,
            }
        }
    };
    Ok(sol)
}

fn calibrate(cfg: &ExperimentConfig, method: CalMethod) -> anyhow::Result<CalibrationResult<f64>> {
    let model = LossModel::new(cfg.lambda)?;
    let cal = &cfg.calibration;
    match method {
        CalMethod::PostFit => {
            if cfg.experiment != ExperimentKind::Strategic {
                bail!(ConfigError::Invalid("post-fit calibration needs a strategic experiment config".into()));
            }
            let Problem::Logistic { map, .. } = nominal_problem(cfg)? else {
                unreachable!("strategic problems are logistic")
            };
            let scenario = MisspecScenario::new(
                strategic_eps_grid(cfg.eps_nominal, cal.eta, cfg.eps_true_points),
                cfg.eps_nominal,
            )?;
            Ok(post_fit_calibrate(&model, &map, &scenario, cal.rho_bracket, &cfg.solver, cal.tol)?)
        }
        CalMethod::CalSet => {
            let (pop, mask) = load_base(cfg)?;
            let eps = cal.eps_cal.unwrap_or(cfg.eps_nominal);
            let cal_base = bootstrap_resample(&pop, cal.n_cal, derive_seed(cfg.seed, 0, STREAM_CAL))?;
            let Problem::Logistic { map, .. } = nominal_problem(cfg)? else {
                bail!(ConfigError::Invalid("calibration-set selection needs a classification experiment".into()));
            };
            let (cal_map, grid, tilted) = match cfg.experiment {
                ExperimentKind::Strategic => (
                    DistributionMap::new(cal_base, ResponseMap::strategic(eps, mask))?,
                    &cfg.rho_list,
                    false,
                ),
                ExperimentKind::Location => {
                    let d = cal_base.dim();
                    (
                        DistributionMap::new(cal_base, ResponseMap::location(location_a_true(d, eps)))?,
                        &cfg.alpha_list,
                        true,
                    )
                }
                _ => bail!(ConfigError::Invalid(
                    "calibration-set selection supports strategic and location configs".into()
                )),
            };
            let theta0 = vec![0.0; map.param_dim()];
            let candidates = grid
                .par_iter()
                .map(|&g| {
                    let sol = if tilted {
                        minimize_tpr(&model, &map, g, &cfg.solver, &theta0)?
                    } else {
                        minimize_drpr(&model, &map, g, &cfg.solver, &theta0)?
                    };
                    Ok((g, sol.theta))
                })
                .collect::<perfdro_core::Result<Vec<_>>>()?;
            Ok(calibration_set_select(&candidates, &cal_map, &model, cal.objective)?)
        }
        CalMethod::FourFifth => {
            if cfg.experiment != ExperimentKind::Fairness {
                bail!(ConfigError::Invalid("four-fifth selection needs a fairness experiment config".into()));
            }
            let f = &cfg.fairness;
            let Problem::Logistic { map, .. } = nominal_problem(cfg)? else {
                unreachable!("fairness problems are logistic")
            };
            let cal_data = gen_fairness_data(f.dim, f.n_cal, f.gamma, derive_seed(cfg.seed, 0, STREAM_CAL))?;
            let cal_maps = fairness_maps(&cal_data, cfg.eps_nominal)?;
            let theta0 = vec![0.0; map.param_dim()];
            let thetas = cfg
                .alpha_list
                .par_iter()
                .map(|&a| Ok(minimize_tpr(&model, &map, a, &cfg.solver, &theta0)?.theta))
                .collect::<perfdro_core::Result<Vec<_>>>()?;
            Ok(four_fifth_select(
                &cfg.alpha_list,
                &thetas,
                &cal_maps.majority,
                &cal_maps.minority,
                &cal_maps.population,
                &model,
            )?)
        }
    }
}

/// Runs one command; printing to stdout is the command's result.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let o = &cli.overrides;
    match cli.command {
        Command::SolvePo(args) => solve_command(&args, o, |_| Ok(SolveKind::Po)),
        Command::SolveDrpo { args, rho } => solve_command(&args, o, |cfg| {
            Ok(SolveKind::Drpo(match rho {
                Some(r) => r,
                None => first_positive(&cfg.rho_list, "rho_list")?,
            }))
        }),
        Command::SolveTpo { args, alpha } => solve_command(&args, o, |cfg| {
            Ok(SolveKind::Tpo(match alpha {
                Some(a) => a,
                None => first_positive(&cfg.alpha_list, "alpha_list")?,
            }))
        }),
        Command::Calibrate { method, config, out } => {
            let cfg = load_config(&config, o)?;
            let r = with_workers(cfg.workers, || calibrate(&cfg, method))??;
            println!("{}", serde_json::to_string_pretty(&r)?);
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
                write_json(&dir.join("calibration.json"), &r)?;
                r.write_csv(&dir.join("calibration.csv"))?;
            }
            Ok(())
        }
        Command::Experiment { kind, config, out } => {
            let mut cfg = load_config(&config, o)?;
            cfg.experiment = kind.into();
            cfg.validate()?;
            let dir = out.or_else(|| cfg.output_dir.clone()).ok_or_else(|| {
                anyhow!(ConfigError::Invalid("no output directory: pass --out or set output_dir".into()))
            })?;
            let result = with_workers(cfg.workers, || run_experiment(&cfg))??;
            let files = emit_outputs(&result, &dir)?;
            for f in &files {
                println!("{}", f.display());
            }
            let diverged = result.failures.iter().filter(|f| f.divergence).count();
            if diverged > 0 {
                return Err(anyhow!(SweepDiverged { count: diverged }));
            }
            if !result.failures.is_empty() {
                eprintln!("warning: {} sweep cell(s) failed; see failures.csv", result.failures.len());
            }
            Ok(())
        }
    }
}

fn solve_command(
    args: &SolveArgs,
    o: &Overrides,
    kind: impl FnOnce(&ExperimentConfig) -> anyhow::Result<SolveKind>,
) -> anyhow::Result<()> {
    let cfg = load_config(&args.config, o)?;
    let kind = kind(&cfg)?;
    let sol = with_workers(cfg.workers, || solve(&cfg, kind))??;
    println!("{}", serde_json::to_string_pretty(&sol)?);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        write_json(&dir.join("solution.json"), &sol)?;
        write_trace_csv(&dir.join("trace.csv"), &sol)?;
    }
    Ok(())
}

/// Exit status for a finished command.
pub fn status(result: &anyhow::Result<()>) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(e) if e.downcast_ref::<SweepDiverged>().is_some() => EXIT_DIVERGENCE,
        Err(e) => exit_code(e),
    }
}
