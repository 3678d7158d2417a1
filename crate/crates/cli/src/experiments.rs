//! The four reproducible sweeps and the problem setups they share with the
//! single-solve commands.

use perfdro_core::analytic::{toy_optima, toy_pr, ToyProblem};
use perfdro_core::calibrate::{four_fifth_select, group_risks, linspace, post_fit_calibrate, MisspecScenario};
use perfdro_core::risk::performative_risk;
use perfdro_core::{
    bootstrap_resample, load_csv, loss_profile, metrics, minimize_drpr, minimize_pr, minimize_tpr, moments,
    mu_rho_correspondence, partial_identify, pushforward, DistributionMap, EmpiricalDistribution, Error,
    LinearLoss, LossModel, Matrix, MixtureMap, ResponseMap, Result, Sample, SolveConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::{DataSpec, ExperimentConfig, ExperimentKind};
use crate::data::{credit_mask, fairness_mask, gen_credit_data, gen_fairness_data, FairnessData};
use crate::output::{CalibrationRow, Cell, Failure, Method, Summary, SweepResult};

/// Independent seed for `(trial, stream)` derived from the experiment seed.
pub fn derive_seed(seed: u64, trial: usize, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * trial as u128);
    rng.random()
}

pub const STREAM_BOOTSTRAP: u64 = 1;
pub const STREAM_TRAIN: u64 = 2;
pub const STREAM_EVAL: u64 = 3;
pub const STREAM_CAL: u64 = 4;

/// Base population `𝒟_true(0)` and its strategic mask.
pub fn load_base(cfg: &ExperimentConfig) -> Result<(EmpiricalDistribution<f64>, Vec<bool>)> {
    match &cfg.data {
        DataSpec::Synthetic { n, seed } => Ok((gen_credit_data(*n, seed.unwrap_or(cfg.seed))?, credit_mask())),
        DataSpec::Csv { path, schema } => Ok((load_csv(path, schema)?, schema.strategic_mask.clone())),
    }
}

/// `ε_true` grid of the strategic sweep: `[ε₀ − ε₀η, ε₀ + ε₀η]`.
pub fn strategic_eps_grid(eps_nominal: f64, eta: f64, points: usize) -> Vec<f64> {
    let half = eps_nominal.abs() * eta;
    linspace(eps_nominal - half, eps_nominal + half, points)
}

/// `ε_true` grid of the location sweep: `[−ε₀η, ε₀η]`.
pub fn location_eps_grid(eps_nominal: f64, eta: f64, points: usize) -> Vec<f64> {
    let half = eps_nominal.abs() * eta;
    linspace(-half, half, points)
}

/// `A_true = diag(0.5, 0.5, ε, …, ε)`.
pub fn location_a_true(d: usize, eps: f64) -> Matrix<f64> {
    Matrix::from_diag(&(0..d).map(|j| if j < 2 { 0.5 } else { eps }).collect::<Vec<_>>())
}

/// Estimates the location matrix from the means observed after deploying
/// `0`, `e₁` and `e₂` under `A_true` with `ε_true = 0`.
pub fn identify_location(base: &EmpiricalDistribution<f64>) -> Result<Matrix<f64>> {
    let d = base.dim();
    if d < 3 {
        return Err(Error::Argument(format!("location experiment needs d >= 3, got {d}")));
    }
    let truth = DistributionMap::new(base.clone(), ResponseMap::location(location_a_true(d, 0.0)))?;
    let mut thetas = vec![vec![0.0; d]];
    for j in 0..2 {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        thetas.push(e);
    }
    let means = thetas
        .iter()
        .map(|t| Ok(moments(&pushforward(&truth, t)?).0))
        .collect::<Result<Vec<_>>>()?;
    partial_identify(&thetas, &means)
}

/// Gaussian toy base: `n` standard normal draws rescaled to have exactly mean
/// `a₀` and variance `σ²`, moved by `x ↦ x + a₁θ`. With the linear loss this
/// realizes `𝒟(θ) = 𝒩(a₁θ + a₀, σ²)`.
pub fn toy_map(a1: f64, a0: f64, sigma2: f64, n: usize, seed: u64) -> Result<DistributionMap<f64>> {
    if n < 2 {
        return Err(Error::Argument("toy base needs at least two atoms".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mean = z.iter().sum::<f64>() / n as f64;
    let sd = (z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
    let samples = z
        .iter()
        .map(|v| Sample::new(vec![a0 + sigma2.sqrt() * (v - mean) / sd], false))
        .collect();
    DistributionMap::new(
        EmpiricalDistribution::uniform(samples)?,
        ResponseMap::location(Matrix::from_diag(&[a1])),
    )
}

/// Groups of the fairness problem as maps: majority, minority and their mixture.
pub struct FairnessMaps {
    pub majority: DistributionMap<f64>,
    pub minority: DistributionMap<f64>,
    pub population: MixtureMap<f64>,
}

/// Adds the intercept column (never strategic) and attaches the strategic response.
pub fn fairness_maps(data: &FairnessData, eps: f64) -> Result<FairnessMaps> {
    let d = data.population.dim();
    let mut mask = fairness_mask(d);
    mask.push(false);
    let resp = ResponseMap::strategic(eps, mask);
    let majority = DistributionMap::new(data.majority.with_intercept(), resp.clone())?;
    let minority = DistributionMap::new(data.minority.with_intercept(), resp)?;
    let share = data.majority_share();
    let population = MixtureMap::new(vec![majority.clone(), minority.clone()], vec![share, 1.0 - share])?;
    Ok(FairnessMaps {
        majority,
        minority,
        population,
    })
}

/// A nominal problem for the single-solve commands.
pub enum Problem {
    Logistic {
        model: LossModel<f64>,
        map: DistributionMap<f64>,
    },
    Toy {
        map: DistributionMap<f64>,
    },
}

/// The nominal map the experiment would fit in its first trial.
pub fn nominal_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let model = LossModel::new(cfg.lambda)?;
    match cfg.experiment {
        ExperimentKind::Strategic => {
            let (pop, mask) = load_base(cfg)?;
            let train = bootstrap_resample(&pop, cfg.n_train, derive_seed(cfg.seed, 0, STREAM_BOOTSTRAP))?;
            let map = DistributionMap::new(train, ResponseMap::strategic(cfg.eps_nominal, mask))?;
            Ok(Problem::Logistic { model, map })
        }
        ExperimentKind::Location => {
            let (pop, _) = load_base(cfg)?;
            let train = bootstrap_resample(&pop, cfg.n_train, derive_seed(cfg.seed, 0, STREAM_BOOTSTRAP))?;
            let a_hat = identify_location(&train)?;
            let map = DistributionMap::new(train, ResponseMap::location(a_hat))?;
            Ok(Problem::Logistic { model, map })
        }
        ExperimentKind::Fairness => {
            let f = &cfg.fairness;
            let data = gen_fairness_data(f.dim, f.n, f.gamma, derive_seed(cfg.seed, 0, STREAM_TRAIN))?;
            let map = fairness_maps(&data, cfg.eps_nominal)?.population.as_single_map()?;
            Ok(Problem::Logistic { model, map })
        }
        ExperimentKind::Toy => {
            let t = &cfg.toy;
            let map = toy_map(t.a1, t.a0, t.sigma2, t.n_atoms, derive_seed(cfg.seed, 0, STREAM_TRAIN))?;
            Ok(Problem::Toy { map })
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    match cfg.experiment {
        ExperimentKind::Strategic => run_strategic_experiment(cfg),
        ExperimentKind::Location => run_location_experiment(cfg),
        ExperimentKind::Fairness => run_fairness_experiment(cfg),
        ExperimentKind::Toy => run_toy_experiment(cfg),
    }
}

/// A fitted parameter of one trial.
struct Fit {
    trial: usize,
    method: Method,
    tuning: f64,
    theta: Result<Vec<f64>>,
}

fn failure(fit: &Fit, e: &Error) -> Failure {
    Failure {
        trial: fit.trial,
        method: fit.method,
        tuning: fit.tuning,
        message: e.to_string(),
        divergence: matches!(e, Error::Divergence { .. }),
    }
}

/// Baseline plus one robust or tilted fit per grid value.
fn methods(tilted: bool, grid: &[f64]) -> Vec<(Method, f64)> {
    let m = if tilted { Method::Tpo } else { Method::Drpo };
    std::iter::once((Method::Po, 0.0)).chain(grid.iter().map(|&g| (m, g))).collect()
}

fn fit_one(
    model: &LossModel<f64>,
    map: &DistributionMap<f64>,
    method: Method,
    tuning: f64,
    solver: &SolveConfig,
) -> Result<Vec<f64>> {
    let theta0 = vec![0.0; map.param_dim()];
    let sol = match method {
        Method::Po => minimize_pr(model, map, solver, &theta0)?,
        Method::Drpo => minimize_drpr(model, map, tuning, solver, &theta0)?,
        Method::Tpo => minimize_tpr(model, map, tuning, solver, &theta0)?,
    };
    Ok(sol.theta)
}

/// Scores each fit under every true map of every `η`, then derives worst-case
/// summaries relative to the baseline of the same trial.
fn evaluate_misspec<F>(
    result: &mut SweepResult,
    fits: &[Fit],
    model: &LossModel<f64>,
    cfg: &ExperimentConfig,
    eps_grid: F,
    true_map: &(dyn Fn(f64) -> Result<DistributionMap<f64>> + Sync),
) where
    F: Fn(f64) -> Vec<f64> + Sync,
{
    let eps_grid = &eps_grid;
    let jobs: Vec<(&Fit, f64, f64)> = fits
        .iter()
        .filter(|f| f.theta.is_ok())
        .flat_map(|f| {
            cfg.eta_list
                .iter()
                .flat_map(move |&eta| eps_grid(eta).into_iter().map(move |eps| (f, eta, eps)))
                .collect::<Vec<_>>()
        })
        .collect();
    let cells: Vec<Result<Cell>> = jobs
        .par_iter()
        .map(|&(fit, eta, eps)| {
            let theta = fit.theta.as_ref().expect("filtered");
            let m = metrics(model, &pushforward(&true_map(eps)?, theta)?, theta)?;
            Ok(Cell {
                trial: fit.trial,
                method: fit.method,
                tuning: fit.tuning,
                eta,
                eps_true: eps,
                metrics: vec![m.risk, m.ber.unwrap_or(f64::NAN), m.accuracy],
            })
        })
        .collect();
    for (c, job) in cells.into_iter().zip(&jobs) {
        match c {
            Ok(c) => result.cells.push(c),
            Err(e) => result.failures.push(failure(job.0, &e)),
        }
    }
    result.sort();
    result.summaries = summarize(&result.cells, 0);
}

/// Worst case and range over `ε_true` of the metric at `idx` per fit and `η`.
fn summarize(cells: &[Cell], idx: usize) -> Vec<Summary> {
    let mut out: Vec<Summary> = Vec::new();
    for c in cells {
        let v = c.metrics[idx];
        match out.last_mut() {
            Some(s) if s.trial == c.trial && s.method == c.method && s.tuning == c.tuning && s.eta == c.eta => {
                s.worst_pr = s.worst_pr.max(v);
                s.pr_range = s.pr_range.min(v);
            }
            _ => out.push(Summary {
                trial: c.trial,
                method: c.method,
                tuning: c.tuning,
                eta: c.eta,
                worst_pr: v,
                pr_range: v,
                rel_improvement: f64::NAN,
            }),
        }
    }
    // pr_range held the minimum so far
    for s in &mut out {
        s.pr_range = s.worst_pr - s.pr_range;
    }
    let baselines: Vec<(usize, f64, f64)> = out
        .iter()
        .filter(|s| s.method == Method::Po)
        .map(|s| (s.trial, s.eta, s.worst_pr))
        .collect();
    for s in &mut out {
        if let Some(&(_, _, po)) = baselines.iter().find(|b| b.0 == s.trial && b.1 == s.eta) {
            s.rel_improvement = (po - s.worst_pr) / po * 100.0;
        }
    }
    out
}

fn fit_trials(
    cfg: &ExperimentConfig,
    methods: &[(Method, f64)],
    train_map: &(dyn Fn(usize) -> Result<DistributionMap<f64>> + Sync),
    model: &LossModel<f64>,
) -> Vec<Fit> {
    let maps: Vec<Result<DistributionMap<f64>>> = (0..cfg.trials).into_par_iter().map(train_map).collect();
    let jobs: Vec<(usize, Method, f64)> = (0..cfg.trials)
        .flat_map(|t| methods.iter().map(move |&(m, g)| (t, m, g)))
        .collect();
    jobs.par_iter()
        .map(|&(trial, method, tuning)| {
            let theta = match &maps[trial] {
                Ok(map) => fit_one(model, map, method, tuning, &cfg.solver),
                Err(e) => Err(Error::Argument(format!("trial data unavailable: {e}"))),
            };
            Fit {
                trial,
                method,
                tuning,
                theta,
            }
        })
        .collect()
}

fn record_fit_failures(result: &mut SweepResult, fits: &[Fit]) {
    for f in fits {
        if let Err(e) = &f.theta {
            result.failures.push(failure(f, e));
        }
    }
}

/// Misspecified strategic classification: fit at `ε₀`, score across `ε_true`.
pub fn run_strategic_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let model = LossModel::new(cfg.lambda)?;
    let (pop, mask) = load_base(cfg)?;
    if !mask.iter().any(|&m| m) {
        return Err(Error::Argument("strategic experiment needs at least one strategic feature".into()));
    }
    let train_map = |trial: usize| {
        let train = bootstrap_resample(&pop, cfg.n_train, derive_seed(cfg.seed, trial, STREAM_BOOTSTRAP))?;
        DistributionMap::new(train, ResponseMap::strategic(cfg.eps_nominal, mask.clone()))
    };
    let fits = fit_trials(cfg, &methods(false, &cfg.rho_list), &train_map, &model);
    let mut result = SweepResult::new(ExperimentKind::Strategic, &["pr_true", "ber", "accuracy"]);
    record_fit_failures(&mut result, &fits);
    let true_map = |eps: f64| DistributionMap::new(pop.clone(), ResponseMap::strategic(eps, mask.clone()));
    evaluate_misspec(
        &mut result,
        &fits,
        &model,
        cfg,
        |eta| strategic_eps_grid(cfg.eps_nominal, eta, cfg.eps_true_points),
        &true_map,
    );

    if cfg.calibration.post_fit {
        let jobs: Vec<(usize, f64)> = (0..cfg.trials)
            .flat_map(|t| cfg.eta_list.iter().filter(|&&e| e > 0.0).map(move |&e| (t, e)))
            .collect();
        let rows: Vec<Result<CalibrationRow>> = jobs
            .par_iter()
            .map(|&(trial, eta)| {
                let scenario = MisspecScenario::new(
                    strategic_eps_grid(cfg.eps_nominal, eta, cfg.eps_true_points),
                    cfg.eps_nominal,
                )?;
                let r = post_fit_calibrate(
                    &model,
                    &train_map(trial)?,
                    &scenario,
                    cfg.calibration.rho_bracket,
                    &cfg.solver,
                    cfg.calibration.tol,
                )?;
                Ok(CalibrationRow {
                    trial,
                    eta,
                    selected: r.selected,
                    criterion: r.achieved_criterion,
                    infeasible: r.infeasible,
                    heldout_ratio: None,
                })
            })
            .collect();
        for (r, &(trial, _)) in rows.into_iter().zip(&jobs) {
            match r {
                Ok(row) => result.calibration.push(row),
                Err(e) => result.failures.push(Failure {
                    trial,
                    method: Method::Drpo,
                    tuning: f64::NAN,
                    message: format!("post-fit calibration: {e}"),
                    divergence: matches!(e, Error::Divergence { .. }),
                }),
            }
        }
    }
    result.sort();
    Ok(result)
}

/// Partially identified location family: fit tilted risks under `Â`, score under `A_true`.
pub fn run_location_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let model = LossModel::new(cfg.lambda)?;
    let (pop, _) = load_base(cfg)?;
    let d = pop.dim();
    identify_location(&pop)?;
    let train_map = |trial: usize| {
        let train = bootstrap_resample(&pop, cfg.n_train, derive_seed(cfg.seed, trial, STREAM_BOOTSTRAP))?;
        let a_hat = identify_location(&train)?;
        DistributionMap::new(train, ResponseMap::location(a_hat))
    };
    let fits = fit_trials(cfg, &methods(true, &cfg.alpha_list), &train_map, &model);
    let mut result = SweepResult::new(ExperimentKind::Location, &["pr_true", "ber", "accuracy"]);
    record_fit_failures(&mut result, &fits);
    let true_map = |eps: f64| DistributionMap::new(pop.clone(), ResponseMap::location(location_a_true(d, eps)));
    evaluate_misspec(
        &mut result,
        &fits,
        &model,
        cfg,
        |eta| location_eps_grid(cfg.eps_nominal, eta, cfg.eps_true_points),
        &true_map,
    );

    let radii: Vec<f64> = cfg.rho_list.iter().copied().filter(|&r| r > 0.0).collect();
    if !radii.is_empty() {
        let map = train_map(0)?;
        for row in mu_rho_correspondence(&model, &map, &radii, &cfg.solver)? {
            match row {
                Ok(r) => result.mu_rho.push(r),
                Err(e) => result.failures.push(Failure {
                    trial: 0,
                    method: Method::Drpo,
                    tuning: f64::NAN,
                    message: format!("radius-to-tilt table: {e}"),
                    divergence: matches!(e, Error::Divergence { .. }),
                }),
            }
        }
    }
    result.sort();
    Ok(result)
}

pub const FAIRNESS_METRICS: [&str; 6] = [
    "pr_population",
    "pr_majority",
    "pr_minority",
    "acc_population",
    "acc_majority",
    "acc_minority",
];

/// Two-group fairness: tilted fits on the population, evaluated per group on
/// held-out data, with the tilt chosen by the four-fifth rule on a small
/// calibration sample.
pub fn run_fairness_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let model = LossModel::new(cfg.lambda)?;
    let f = &cfg.fairness;
    let maps_for = |trial: usize, stream: u64, n: usize| {
        let data = gen_fairness_data(f.dim, n, f.gamma, derive_seed(cfg.seed, trial, stream))?;
        fairness_maps(&data, cfg.eps_nominal)
    };
    let train_map = |trial: usize| maps_for(trial, STREAM_TRAIN, f.n)?.population.as_single_map();
    let fits = fit_trials(cfg, &methods(true, &cfg.alpha_list), &train_map, &model);
    let mut result = SweepResult::new(ExperimentKind::Fairness, &FAIRNESS_METRICS);
    record_fit_failures(&mut result, &fits);

    let per_trial: Vec<(Vec<Result<Cell>>, Result<CalibrationRow>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_fits: Vec<&Fit> = fits.iter().filter(|x| x.trial == trial && x.theta.is_ok()).collect();
            let eval = match maps_for(trial, STREAM_EVAL, f.n_eval) {
                Ok(m) => m,
                Err(e) => return (vec![Err(e)], Err(Error::Argument("no evaluation data".into()))),
            };
            let cells = trial_fits
                .iter()
                .map(|fit| {
                    let theta = fit.theta.as_ref().expect("filtered");
                    let r = group_risks(&model, &eval.majority, &eval.minority, &eval.population, theta)?;
                    let acc = |m: &DistributionMap<f64>| -> Result<f64> {
                        Ok(metrics(&model, &pushforward(m, theta)?, theta)?.accuracy)
                    };
                    let (a_maj, a_min) = (acc(&eval.majority)?, acc(&eval.minority)?);
                    let g = eval.population.mixture_weights()[0];
                    Ok(Cell {
                        trial,
                        method: fit.method,
                        tuning: fit.tuning,
                        eta: 0.0,
                        eps_true: cfg.eps_nominal,
                        metrics: vec![
                            r.population,
                            r.majority,
                            r.minority,
                            g * a_maj + (1.0 - g) * a_min,
                            a_maj,
                            a_min,
                        ],
                    })
                })
                .collect();
            let tilts: Vec<&&Fit> = trial_fits.iter().filter(|x| x.method == Method::Tpo).collect();
            let cal = (|| {
                let cal = maps_for(trial, STREAM_CAL, f.n_cal)?;
                let alphas: Vec<f64> = tilts.iter().map(|x| x.tuning).collect();
                let thetas: Vec<Vec<f64>> = tilts.iter().map(|x| x.theta.as_ref().expect("filtered").clone()).collect();
                let sel = four_fifth_select(&alphas, &thetas, &cal.majority, &cal.minority, &cal.population, &model)?;
                let k = alphas.iter().position(|&a| a == sel.selected).expect("selected from grid");
                let held = group_risks(&model, &eval.majority, &eval.minority, &eval.population, &thetas[k])?;
                Ok(CalibrationRow {
                    trial,
                    eta: 0.0,
                    selected: sel.selected,
                    criterion: sel.achieved_criterion,
                    infeasible: sel.infeasible,
                    heldout_ratio: Some(held.ratio()),
                })
            })();
            (cells, cal)
        })
        .collect();
    for (trial, (cells, cal)) in per_trial.into_iter().enumerate() {
        for c in cells {
            match c {
                Ok(c) => result.cells.push(c),
                Err(e) => result.failures.push(Failure {
                    trial,
                    method: Method::Tpo,
                    tuning: f64::NAN,
                    message: format!("evaluation: {e}"),
                    divergence: false,
                }),
            }
        }
        match cal {
            Ok(row) => result.calibration.push(row),
            Err(e) => result.failures.push(Failure {
                trial,
                method: Method::Tpo,
                tuning: f64::NAN,
                message: format!("four-fifth calibration: {e}"),
                divergence: false,
            }),
        }
    }
    result.sort();
    Ok(result)
}

pub const TOY_METRICS: [&str; 7] = [
    "theta",
    "mu_star",
    "objective",
    "pr_true",
    "theta_closed",
    "mu_closed",
    "objective_closed",
];

/// Gaussian toy: robust fits on Monte-Carlo atoms against the closed forms.
pub fn run_toy_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let t = &cfg.toy;
    let mut result = SweepResult::new(ExperimentKind::Toy, &TOY_METRICS);
    let jobs: Vec<(usize, f64)> = (0..cfg.trials)
        .flat_map(|trial| cfg.rho_list.iter().map(move |&r| (trial, r)))
        .collect();
    let maps: Vec<Result<DistributionMap<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| toy_map(t.a1, t.a0, t.sigma2, t.n_atoms, derive_seed(cfg.seed, trial, STREAM_TRAIN)))
        .collect();
    let cells: Vec<Result<Cell>> = jobs
        .par_iter()
        .map(|&(trial, rho)| {
            let map = maps[trial].as_ref().map_err(|e| Error::Argument(e.to_string()))?;
            let sol = minimize_drpr(&LinearLoss, map, rho, &cfg.solver, &[0.0])?;
            let p = ToyProblem::new(t.a1, t.a0, t.sigma2, rho)?;
            let opt = toy_optima(&p);
            Ok(Cell {
                trial,
                method: Method::Drpo,
                tuning: rho,
                eta: 0.0,
                eps_true: 0.0,
                metrics: vec![
                    sol.theta[0],
                    sol.mu_star,
                    sol.objective,
                    toy_pr(&p, sol.theta[0]),
                    opt.theta_drpo,
                    opt.mu_star.unwrap_or(f64::NAN),
                    opt.drpr_at_drpo,
                ],
            })
        })
        .collect();
    for (c, &(trial, rho)) in cells.into_iter().zip(&jobs) {
        match c {
            Ok(c) => result.cells.push(c),
            Err(e) => result.failures.push(Failure {
                trial,
                method: Method::Drpo,
                tuning: rho,
                message: e.to_string(),
                divergence: matches!(e, Error::Divergence { .. }),
            }),
        }
    }
    result.sort();
    Ok(result)
}

/// Population risk of `θ` on a map, for quick reporting.
pub fn risk_at(model: &LossModel<f64>, map: &DistributionMap<f64>, theta: &[f64]) -> Result<f64> {
    Ok(performative_risk(&loss_profile(model, map, theta)?))
}
