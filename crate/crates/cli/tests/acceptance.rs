//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p perf-dro --test acceptance -- --nocapture`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use perf_dro::data::{credit_mask, gen_credit_data};
use perf_dro::experiments::toy_map;
use perf_dro::output::{Method, SweepResult};
use perf_dro::{run_experiment, ExperimentConfig, ExperimentKind};
use perfdro_core::risk::PhiConjugate;
use perfdro_core::solvers::log_tpr_and_grad;
use perfdro_core::{
    composed_loss_grad, drpr, minimize_augpr, minimize_drpr, minimize_pr, minimize_tpr, post_fit_calibrate_with,
    worst_case_weights, DistributionMap, EmpiricalDistribution, LinearLoss, LossModel, LossProfile, Matrix,
    MisspecScenario, ResponseMap, Sample, SolveConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(n: &str, ok: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn random_profile(rng: &mut ChaCha8Rng) -> LossProfile<f64> {
    let n = rng.random_range(2..=20);
    let losses: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    LossProfile::new(losses, raw.iter().map(|w| w / total).collect(), vec![]).unwrap()
}

fn log_mean_exp(losses: &[f64], weights: &[f64], mu: f64) -> f64 {
    let m = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = losses.iter().zip(weights).map(|(l, w)| w * ((l - m) / mu).exp()).sum();
    m / mu + s.ln()
}

fn kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(qi, _)| **qi > 0.0)
        .map(|(qi, pi)| qi * (qi / pi).ln())
        .sum()
}

/// Dense log-spaced grid over μ plus the `μ → 0` limit (the largest loss).
fn grid_oracle(losses: &[f64], weights: &[f64], rho: f64) -> f64 {
    let lmax = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = 100_000;
    let (a, b) = (1e-4_f64.ln(), 1e4_f64.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .map(|mu| mu * log_mean_exp(losses, weights, mu) + mu * rho)
        .fold(lmax, f64::min)
}

fn random_logistic_map(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DistributionMap<f64> {
    let beta: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let samples = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let s: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let y = rng.random::<f64>() < 1.0 / (1.0 + (-s).exp());
            Sample::new(x, y)
        })
        .collect();
    let mask: Vec<bool> = (0..d).map(|j| j < d.div_ceil(2)).collect();
    let eps = rng.random_range(0.1..1.0);
    DistributionMap::new(EmpiricalDistribution::uniform(samples).unwrap(), ResponseMap::strategic(eps, mask)).unwrap()
}

#[test]
fn criterion_01_toy_oracle() {
    let start = Instant::now();
    let map = toy_map(1.0, 1.0, 1.0, 100_000, 7).unwrap();
    let sol = minimize_drpr(&LinearLoss, &map, 0.125, &SolveConfig::default(), &[0.0]).unwrap();
    let elapsed = start.elapsed();
    // PR(−¼) + √ρ·Penalty(−¼) = −0.1875 + 0.125
    let closed = -0.0625;
    let theta = sol.theta[0];
    let ok = (theta + 0.25).abs() <= 0.02
        && (sol.mu_star - 0.5).abs() <= 0.02
        && ((sol.objective - closed) / closed).abs() <= 0.01
        && elapsed < Duration::from_secs(60);
    report(
        "1",
        ok,
        format!(
            "theta {theta:.5}, mu* {:.5}, objective {:.6} vs {closed}, {:.1?}",
            sol.mu_star, sol.objective, elapsed
        ),
    );
}

#[test]
fn criterion_02_dual_matches_grid() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = random_profile(&mut rng);
        let rho = rng.random_range(0.01..1.0);
        let got = drpr(&p, rho).unwrap().value;
        let oracle = grid_oracle(p.losses(), p.weights(), rho);
        worst = worst.max((got - oracle).abs());
    }
    let elapsed = start.elapsed();
    report(
        "2",
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("max |drpr - grid| = {worst:.2e} over 50 profiles, {elapsed:.1?}"),
    );
}

#[test]
fn criterion_03_generalization_principle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut checked = 0;
    for _ in 0..10 {
        let p = random_profile(&mut rng);
        let rho = rng.random_range(0.01..1.0);
        let bound = drpr(&p, rho).unwrap().value;
        let w = p.weights();
        for _ in 0..1000 {
            let raw: Vec<f64> = w.iter().map(|wi| wi * rng.random_range(-3.0_f64..3.0).exp()).collect();
            let total: f64 = raw.iter().sum();
            let q: Vec<f64> = raw.iter().map(|r| r / total).collect();
            // shrink toward p until the divergence budget holds
            let mix = |t: f64| -> Vec<f64> { w.iter().zip(&q).map(|(a, b)| (1.0 - t) * a + t * b).collect() };
            let t = if kl(&q, w) <= rho {
                1.0
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if kl(&mix(mid), w) <= rho {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            let qt = mix(t);
            let value: f64 = qt.iter().zip(p.losses()).map(|(a, l)| a * l).sum();
            checked += 1;
            if value > bound + 1e-8 {
                violations += 1;
            }
        }
    }
    report("3", violations == 0, format!("{violations} violations in {checked} tilts"));
}

#[test]
fn criterion_04_worst_case_attainment() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_value, mut worst_kl) = (0.0_f64, 0.0_f64);
    let mut checked = 0;
    while checked < 20 {
        let p = random_profile(&mut rng);
        let rho = rng.random_range(0.01..0.3);
        let sol = drpr(&p, rho).unwrap();
        if !(sol.mu_star > 0.0 && sol.mu_star.is_finite()) {
            continue;
        }
        let q = worst_case_weights(&p, sol.mu_star).unwrap();
        let value: f64 = q.iter().zip(p.losses()).map(|(a, l)| a * l).sum();
        worst_value = worst_value.max((value - sol.value).abs());
        worst_kl = worst_kl.max((kl(&q, p.weights()) - rho).abs());
        checked += 1;
    }
    report(
        "4",
        worst_value <= 1e-4 && worst_kl <= 1e-4,
        format!("max |E_q l - drpr| = {worst_value:.2e}, max |KL - rho| = {worst_kl:.2e} over {checked} profiles"),
    );
}

#[test]
fn criterion_05_tilt_radius_equivalence() {
    let base = gen_credit_data(2000, 5).unwrap();
    let map = DistributionMap::new(base, ResponseMap::strategic(0.5, credit_mask())).unwrap();
    let model = LossModel::new(1e-3).unwrap();
    let cfg = SolveConfig::default();
    let theta0 = vec![0.0; map.param_dim()];
    let rhos = [0.001, 0.0025, 0.005, 0.01, 0.02];
    let mut max_dist: f64 = 0.0;
    let mut mus = Vec::new();
    for &rho in &rhos {
        let d = minimize_drpr(&model, &map, rho, &cfg, &theta0).unwrap();
        let t = minimize_tpr(&model, &map, 1.0 / d.mu_star, &cfg, &theta0).unwrap();
        let dist = d.theta.iter().zip(&t.theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        max_dist = max_dist.max(dist);
        mus.push(d.mu_star);
    }
    let monotone = mus.windows(2).all(|w| w[1] <= w[0] + 1e-3);
    report(
        "5",
        max_dist <= 0.02 && monotone,
        format!("max |theta_tpo - theta_drpo| = {max_dist:.2e}, mu* = {mus:.4?}"),
    );
}

#[test]
fn criterion_06_augmented_kl_matches_dual() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = LossModel::new(1e-3).unwrap();
    let cfg = SolveConfig::default();
    let mut worst: f64 = 0.0;
    let mut moved = 0;
    for _ in 0..10 {
        let map = random_logistic_map(&mut rng, 40, 3);
        let rho = rng.random_range(0.01..0.2);
        let theta0 = vec![0.0; 3];
        let a = minimize_augpr(&model, &map, rho, &PhiConjugate::Kl, &cfg, &theta0).unwrap();
        let k = minimize_drpr(&model, &map, rho, &cfg, &theta0).unwrap();
        worst = worst.max((a.objective - k.objective).abs());
        moved += usize::from(k.theta.iter().any(|t| t.abs() > 1e-3));
    }
    report(
        "6",
        worst <= 1e-3,
        format!("max objective gap {worst:.2e} over 10 instances, {moved} with a nonzero optimum"),
    );
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[test]
fn criterion_07_gradient_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lambda = 1e-3;
    let model = LossModel::new(lambda).unwrap();
    let h = 1e-5;
    let rel = |g: &[f64], fd: &[f64]| {
        let diff = g.iter().zip(fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        diff / norm.max(1e-12)
    };
    let fd = |f: &dyn Fn(&[f64]) -> f64, theta: &[f64]| -> Vec<f64> {
        (0..theta.len())
            .map(|j| {
                let (mut a, mut b) = (theta.to_vec(), theta.to_vec());
                a[j] += h;
                b[j] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    };

    let mut worst_loss: f64 = 0.0;
    for probe in 0..100 {
        let d = 4;
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let y = rng.random::<bool>();
        let theta: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let (resp, moved): (ResponseMap<f64>, Box<dyn Fn(&[f64]) -> Vec<f64>>) = if probe % 2 == 0 {
            let eps = rng.random_range(0.1..1.0);
            let mask = vec![true, false, true, false];
            let (x, m) = (x.clone(), mask.clone());
            let f = move |t: &[f64]| (0..d).map(|j| x[j] - if m[j] { eps * t[j] } else { 0.0 }).collect();
            (ResponseMap::strategic(eps, mask), Box::new(f))
        } else {
            let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(-0.5..0.5)).collect()).collect();
            let x = x.clone();
            let rows = a.clone();
            let f = move |t: &[f64]| {
                (0..d).map(|i| x[i] + rows[i].iter().zip(t).map(|(aij, tj)| aij * tj).sum::<f64>()).collect()
            };
            (ResponseMap::location(Matrix::from_rows(&a).unwrap()), Box::new(f))
        };
        let value = |t: &[f64]| {
            let z = moved(t);
            let s: f64 = z.iter().zip(t).map(|(a, b)| a * b).sum();
            softplus(if y { -s } else { s }) + 0.5 * lambda * t.iter().map(|v| v * v).sum::<f64>()
        };
        let (_, g) = composed_loss_grad(&model, &Sample::new(x, y), &theta, &resp).unwrap();
        worst_loss = worst_loss.max(rel(&g, &fd(&value, &theta)));
    }

    let mut worst_tilt: f64 = 0.0;
    for _ in 0..100 {
        let map = random_logistic_map(&mut rng, 30, 3);
        let alpha = rng.random_range(0.1..3.0);
        let theta: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        let (_, g) = log_tpr_and_grad(&model, &map, alpha, &theta).unwrap();
        let eps = match map.response() {
            ResponseMap::StrategicLinear { epsilon, .. } => *epsilon,
            _ => unreachable!(),
        };
        let f = |t: &[f64]| {
            let mut terms = Vec::new();
            for (s, w) in map.base().iter() {
                let z: Vec<f64> = (0..3).map(|j| s.features[j] - if j < 2 { eps * t[j] } else { 0.0 }).collect();
                let sc: f64 = z.iter().zip(t).map(|(a, b)| a * b).sum();
                let l = softplus(if s.label { -sc } else { sc }) + 0.5 * lambda * t.iter().map(|v| v * v).sum::<f64>();
                terms.push((w, alpha * l));
            }
            let m = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
            m + terms.iter().map(|(w, v)| w * (v - m).exp()).sum::<f64>().ln()
        };
        worst_tilt = worst_tilt.max(rel(&g, &fd(&f, &theta)));
    }
    report(
        "7",
        worst_loss <= 1e-5 && worst_tilt <= 1e-5,
        format!("max relative error: composed loss {worst_loss:.2e}, log-tilted risk {worst_tilt:.2e}"),
    );
}

fn small_config(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        trials: 2,
        n_train: 500,
        eps_true_points: 5,
        eta_list: vec![0.0, 1.0],
        data: perf_dro::config::DataSpec::Synthetic { n: 2000, seed: None },
        ..ExperimentConfig::default()
    }
}

/// Metric columns of every cell with the given method and tuning, in sorted cell order.
fn column(result: &SweepResult, method: Method, tuning: f64) -> Vec<(usize, u64, u64, Vec<u64>)> {
    result
        .cells
        .iter()
        .filter(|c| c.method == method && c.tuning == tuning)
        .map(|c| {
            (c.trial, c.eta.to_bits(), c.eps_true.to_bits(), c.metrics.iter().map(|m| m.to_bits()).collect())
        })
        .collect()
}

#[test]
fn criterion_08_reduction_chain() {
    let model = LossModel::new(1e-3).unwrap();
    let cfg = SolveConfig::default();
    let base = gen_credit_data(1000, 8).unwrap();
    let map = DistributionMap::new(base, ResponseMap::strategic(0.5, credit_mask())).unwrap();
    let theta0 = vec![0.0; map.param_dim()];
    let po = minimize_pr(&model, &map, &cfg, &theta0).unwrap();
    let dr = minimize_drpr(&model, &map, 0.0, &cfg, &theta0).unwrap();
    let tp = minimize_tpr(&model, &map, 0.0, &cfg, &theta0).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let solver_ok = bits(&po.theta) == bits(&dr.theta)
        && bits(&po.theta) == bits(&tp.theta)
        && po.objective.to_bits() == dr.objective.to_bits()
        && po.objective.to_bits() == tp.objective.to_bits();

    let strategic = run_experiment(&small_config(ExperimentKind::Strategic)).unwrap();
    let location = run_experiment(&small_config(ExperimentKind::Location)).unwrap();
    let po_s = column(&strategic, Method::Po, 0.0);
    let po_l = column(&location, Method::Po, 0.0);
    let sweep_ok = !po_s.is_empty()
        && po_s == column(&strategic, Method::Drpo, 0.0)
        && !po_l.is_empty()
        && po_l == column(&location, Method::Tpo, 0.0);
    report(
        "8",
        solver_ok && sweep_ok,
        format!("solver outputs bitwise equal: {solver_ok}, sweep columns bitwise equal: {sweep_ok}"),
    );
}

fn summaries(result: &SweepResult, method: Method, tuning: f64, eta: f64) -> Vec<&perf_dro::output::Summary> {
    result
        .summaries
        .iter()
        .filter(|s| s.method == method && s.tuning == tuning && s.eta == eta)
        .collect()
}

#[test]
fn criterion_09a_strategic_trends() {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Strategic,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let result = run_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let rho_max = cfg.rho_list.iter().cloned().fold(0.0, f64::max);
    let mut ok = result.failures.is_empty() && elapsed < Duration::from_secs(15 * 60);
    let mut details = Vec::new();
    for &eta in cfg.eta_list.iter().filter(|&&e| e > 0.0) {
        let po = summaries(&result, Method::Po, 0.0, eta);
        let dr = summaries(&result, Method::Drpo, rho_max, eta);
        let narrower = po.len() == cfg.trials
            && dr.len() == cfg.trials
            && po.iter().zip(&dr).all(|(p, d)| p.trial == d.trial && d.pr_range < p.pr_range);
        ok &= narrower;
        if eta >= 0.6 {
            let wins = dr.iter().filter(|s| s.rel_improvement > 0.0).count();
            ok &= wins >= 8;
            details.push(format!("eta {eta}: {wins}/{} improved", dr.len()));
        }
        if !narrower {
            details.push(format!("eta {eta}: range not narrower"));
        }
    }
    report(
        "9a",
        ok,
        format!("rho {rho_max}; {}; {:.1?}", details.join(", "), elapsed),
    );
}

#[test]
fn criterion_09b_location_trends() {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Location,
        eta_list: vec![0.0, 2.0],
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let result = run_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let tilts: Vec<f64> = cfg.alpha_list.iter().cloned().filter(|&a| a > 0.0).collect();
    let po0 = summaries(&result, Method::Po, 0.0, 0.0);
    let mut po_best = po0.len() == cfg.trials;
    for &a in &tilts {
        let tp = summaries(&result, Method::Tpo, a, 0.0);
        po_best &= tp.len() == cfg.trials && po0.iter().zip(&tp).all(|(p, t)| p.worst_pr < t.worst_pr);
    }
    let wins = (0..cfg.trials)
        .filter(|&trial| {
            tilts.iter().any(|&a| {
                summaries(&result, Method::Tpo, a, 2.0)
                    .iter()
                    .any(|s| s.trial == trial && s.rel_improvement > 0.0)
            })
        })
        .count();
    let ok = result.failures.is_empty() && po_best && wins >= 8 && elapsed < Duration::from_secs(15 * 60);
    report(
        "9b",
        ok,
        format!("eta 0: PO best in every trial {po_best}; eta 2: some TPO better in {wins}/{} trials; {elapsed:.1?}", cfg.trials),
    );
}

fn violations(values: &[f64], nondecreasing: bool) -> usize {
    values
        .windows(2)
        .filter(|w| if nondecreasing { w[1] < w[0] } else { w[1] > w[0] })
        .count()
}

#[test]
fn criterion_09c_fairness_trends() {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Fairness,
        trials: 30,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let result = run_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let (pop, maj, min) = (
        result.metric_index("pr_population").unwrap(),
        result.metric_index("pr_majority").unwrap(),
        result.metric_index("pr_minority").unwrap(),
    );
    let mut alphas = cfg.alpha_list.clone();
    alphas.sort_by(f64::total_cmp);
    let mean = |a: f64, k: usize| {
        let v: Vec<f64> = result
            .cells
            .iter()
            .filter(|c| c.method == Method::Tpo && c.tuning == a)
            .map(|c| c.metrics[k])
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let gaps: Vec<f64> = alphas.iter().map(|&a| mean(a, min) - mean(a, maj)).collect();
    let pops: Vec<f64> = alphas.iter().map(|&a| mean(a, pop)).collect();
    let (gv, pv) = (violations(&gaps, false), violations(&pops, true));
    let held: Vec<f64> = result.calibration.iter().filter_map(|r| r.heldout_ratio).collect();
    let meets = held.iter().filter(|&&r| r <= 1.25).count();
    let ok = gv <= 1
        && pv <= 1
        && held.len() == cfg.trials
        && meets * 5 >= cfg.trials * 4
        && elapsed < Duration::from_secs(15 * 60);
    report(
        "9c",
        ok,
        format!(
            "gap violations {gv}, population violations {pv}, four-fifth held out {meets}/{}; {elapsed:.1?}",
            held.len()
        ),
    );
}

#[test]
fn criterion_10_calibration_bisection() {
    // covariance of these atoms is exactly diag(1, 4)
    let base = EmpiricalDistribution::uniform(
        [[1.0, 2.0], [1.0, -2.0], [-1.0, 2.0], [-1.0, -2.0]]
            .iter()
            .enumerate()
            .map(|(i, x)| Sample::new(x.to_vec(), i % 2 == 0))
            .collect(),
    )
    .unwrap();
    let map = DistributionMap::new(base, ResponseMap::strategic(0.5, vec![true, true])).unwrap();
    let theta = vec![0.6, -0.8];
    let scenario = MisspecScenario::symmetric(0.5, 1.0, 21).unwrap();
    let tol = 1e-3;
    // ½ (Δε)² θᵀ Σ⁻¹ θ at the widest Δε = 0.5
    let exact = 0.5 * 0.25 * (0.6_f64 * 0.6 / 1.0 + 0.8 * 0.8 / 4.0);
    let res = post_fit_calibrate_with(|_| Ok(theta.clone()), &map, &scenario, (0.0, 1.0), tol).unwrap();
    let g = |rho: f64| exact - rho;
    let rho = res.selected;
    let ok = g(rho) <= 0.0 && g(rho - tol) > 0.0 && (rho - exact).abs() <= tol && !res.infeasible;
    report(
        "10",
        ok,
        format!("rho_cal {rho:.6}, exact crossing {exact:.6}, {} probes", res.search_trace.len()),
    );
}

fn run_cli(config: &Path, out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_perf-dro"))
        .args(["experiment", "strategic", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("results.csv")).unwrap()
}

#[test]
fn criterion_11_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"experiment": "strategic", "trials": 2, "n_train": 400, "eps_true_points": 5,
            "eta_list": [0.0, 0.5], "rho_list": [0.0, 0.01], "data": {"source": "synthetic", "n": 1500}}"#,
    )
    .unwrap();
    let a = run_cli(&config, &dir.path().join("a"));
    let b = run_cli(&config, &dir.path().join("b"));
    report(
        "11",
        !a.is_empty() && a == b,
        format!("results.csv {} bytes, identical: {}", a.len(), a == b),
    );
}
