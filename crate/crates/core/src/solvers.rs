//! Minimizers of the performative, tilted, KL-robust and augmented φ-robust risks.
//!
//! All objectives are sample averages over the base atoms pushed through the
//! response map at the current parameter, differentiated through the map.
//! Atom sums are split into fixed-size chunks evaluated in parallel and folded
//! in chunk order, so results do not depend on the thread count.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distmap::DistributionMap;
use crate::error::{Error, Result};
use crate::lossmodel::{ComposedEval, PerformativeLoss};
use crate::risk::{augmented_drpr, drpr, loss_profile, performative_risk, profile_nu, PhiConjugate};
use crate::scalar::{norm2, OnlineTilt, Scalar};

const CHUNK: usize = 512;
/// Consecutive step halvings tolerated before giving up on an iteration.
const MAX_HALVINGS: usize = 60;

/// Optimizer settings shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub max_outer_iters: usize,
    pub inner_gd_iters: usize,
    pub step_size: f64,
    pub step_decay: f64,
    pub grad_tol: f64,
    pub mu_tol: f64,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            inner_gd_iters: 500,
            step_size: 0.5,
            step_decay: 0.999,
            grad_tol: 1e-7,
            mu_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.inner_gd_iters == 0 {
            return Err(Error::Argument("iteration counts must be positive".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Argument(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return Err(Error::Argument(format!(
                "step decay must lie in (0, 1], got {}",
                self.step_decay
            )));
        }
        if !(self.grad_tol > 0.0) || !(self.mu_tol > 0.0) {
            return Err(Error::Argument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One outer iteration: objective value and the dual variable it was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TraceRecord<T> {
    pub iter: usize,
    pub objective: T,
    pub mu: T,
}

/// Output of a solve.
///
/// `mu_star` is `+∞` for the plain performative solve, `1/α` for the tilted
/// solve and the dual minimizer for the robust solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DualSolution<T> {
    pub theta: Vec<T>,
    pub mu_star: T,
    pub nu_star: Option<T>,
    pub objective: T,
    pub outer_iters: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord<T>>,
}

/// Writes the trace as CSV with columns `iter,objective,mu`.
pub fn write_trace_csv<T: Scalar>(path: &Path, solution: &DualSolution<T>) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(File::create(path).map_err(io)?);
    w.write_record(["iter", "objective", "mu"])?;
    for r in &solution.trace {
        w.write_record([r.iter.to_string(), r.objective.to_string(), r.mu.to_string()])?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Folds per-atom `(value, gradient)` pairs chunk by chunk.
fn reduce_atoms<T, L, A, I, S, M>(
    model: &L,
    map: &DistributionMap<T>,
    theta: &[T],
    init: I,
    step: S,
    merge: M,
) -> A
where
    T: Scalar,
    L: PerformativeLoss<T> + ?Sized,
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, T, T, &[T]) + Sync,
    M: Fn(&mut A, A),
{
    let base = map.base();
    let response = map.response();
    let (d, p) = (map.dim(), map.param_dim());
    let partials: Vec<A> = base
        .samples()
        .par_chunks(CHUNK)
        .zip(base.weights().par_chunks(CHUNK))
        .map(|(samples, weights)| {
            let mut acc = init();
            let mut ev = ComposedEval::new(d, p);
            for (s, &w) in samples.iter().zip(weights) {
                let v = ev.eval(model, s, theta, response);
                step(&mut acc, w, v, &ev.grad);
            }
            acc
        })
        .collect();
    let mut it = partials.into_iter();
    let mut total = it.next().expect("distribution is nonempty");
    for part in it {
        merge(&mut total, part);
    }
    total
}

/// Performative risk `E[ℓ(T_θ(Z); θ)]` and its total gradient.
pub fn pr_and_grad<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    theta: &[T],
) -> Result<(T, Vec<T>)> {
    map.check_theta(theta)?;
    let p = map.param_dim();
    let (f, g) = reduce_atoms(
        model,
        map,
        theta,
        || (T::zero(), vec![T::zero(); p]),
        |acc: &mut (T, Vec<T>), w, v, grad| {
            acc.0 += w * v;
            for (a, &gi) in acc.1.iter_mut().zip(grad) {
                *a += w * gi;
            }
        },
        |acc, other| {
            acc.0 += other.0;
            for (a, gi) in acc.1.iter_mut().zip(other.1) {
                *a += gi;
            }
        },
    );
    Ok((f, g))
}

fn tilt_accumulate<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    alpha: T,
    theta: &[T],
) -> OnlineTilt<T> {
    let p = map.param_dim();
    reduce_atoms(
        model,
        map,
        theta,
        || OnlineTilt::new(p),
        |acc: &mut OnlineTilt<T>, w, v, grad| acc.push(w, alpha * v, grad),
        |acc, other| acc.merge(&other),
    )
}

/// `log E[e^{αℓ}]` and its gradient `α E_q[∇ℓ]` with `q ∝ e^{αℓ}`.
pub fn log_tpr_and_grad<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    alpha: T,
    theta: &[T],
) -> Result<(T, Vec<T>)> {
    map.check_theta(theta)?;
    let acc = tilt_accumulate(model, map, alpha, theta);
    let g = acc.mean_grad().into_iter().map(|gi| alpha * gi).collect();
    Ok((acc.log_sum(), g))
}

/// Entropic risk `(1/α) log E[e^{αℓ}]` and its gradient `E_q[∇ℓ]`; same
/// minimizer as the tilted risk with a gradient that does not scale with `α`.
fn entropic_and_grad<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    alpha: T,
    theta: &[T],
) -> (T, Vec<T>) {
    let acc = tilt_accumulate(model, map, alpha, theta);
    (acc.log_sum() / alpha, acc.mean_grad())
}

/// `E[μ φ*((ℓ − ν)/μ)]` and its gradient `E[φ*'((ℓ − ν)/μ) ∇ℓ]`.
fn augmented_and_grad<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    mu: T,
    nu: T,
    phi: &PhiConjugate<T>,
    theta: &[T],
) -> (T, Vec<T>) {
    let p = map.param_dim();
    reduce_atoms(
        model,
        map,
        theta,
        || (T::zero(), vec![T::zero(); p]),
        |acc: &mut (T, Vec<T>), w, v, grad| {
            let s = (v - nu) / mu;
            acc.0 += w * mu * phi.eval(s);
            let ds = w * phi.derivative(s);
            for (a, &gi) in acc.1.iter_mut().zip(grad) {
                *a += ds * gi;
            }
        },
        |acc, other| {
            acc.0 += other.0;
            for (a, gi) in acc.1.iter_mut().zip(other.1) {
                *a += gi;
            }
        },
    )
}

struct Descent<T> {
    theta: Vec<T>,
    converged: bool,
}

/// Gradient descent with a geometrically decaying step. A step that fails to
/// decrease the objective (or leaves its domain) is rejected and the step halved,
/// so accepted iterates decrease monotonically.
fn descend<T: Scalar, F: FnMut(&[T]) -> (T, Vec<T>)>(
    mut f: F,
    theta0: &[T],
    cfg: &SolveConfig,
    iterations: usize,
) -> Result<Descent<T>> {
    let mut theta = theta0.to_vec();
    let (mut value, mut grad) = f(&theta);
    if !value.is_finite() {
        return Err(Error::Divergence { iteration: 0 });
    }
    let mut step = T::lit(cfg.step_size);
    let decay = T::lit(cfg.step_decay);
    let tol = T::lit(cfg.grad_tol);
    let mut trial = vec![T::zero(); theta.len()];
    for it in 1..=iterations {
        if norm2(&grad) <= tol {
            return Ok(Descent {
                theta,
                converged: true,
            });
        }
        let mut halvings = 0;
        loop {
            for ((t, &x), &g) in trial.iter_mut().zip(&theta).zip(&grad) {
                *t = x - step * g;
            }
            let (v, g) = f(&trial);
            if v.is_finite() && v < value {
                theta.copy_from_slice(&trial);
                value = v;
                grad = g;
                break;
            }
            if v.is_finite() && v == value && trial == theta {
                // step too small to move any coordinate
                return Ok(Descent {
                    theta,
                    converged: false,
                });
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                if !v.is_finite() {
                    return Err(Error::Divergence { iteration: it });
                }
                return Ok(Descent {
                    theta,
                    converged: false,
                });
            }
            step = step * T::lit(0.5);
        }
        step = step * decay;
    }
    let converged = norm2(&grad) <= tol;
    Ok(Descent { theta, converged })
}

fn prepare<T: Scalar>(map: &DistributionMap<T>, cfg: &SolveConfig, theta0: &[T]) -> Result<()> {
    cfg.validate()?;
    map.check_theta(theta0)
}

/// Gradient descent on the sample-average performative risk.
pub fn minimize_pr<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    cfg: &SolveConfig,
    theta0: &[T],
) -> Result<DualSolution<T>> {
    prepare(map, cfg, theta0)?;
    let mut trace = Vec::new();
    let d = descend(
        |th| {
            let r = pr_and_grad(model, map, th).expect("dimensions checked");
            trace.push(r.0);
            r
        },
        theta0,
        cfg,
        cfg.inner_gd_iters,
    )?;
    let objective = performative_risk(&loss_profile(model, map, &d.theta)?);
    Ok(finish(d.theta, T::infinity(), None, objective, d.converged, monotone_trace(trace, objective, T::infinity())))
}

/// Running-minimum trace of accepted objective values, ending at `objective`.
fn monotone_trace<T: Scalar>(evals: Vec<T>, objective: T, mu: T) -> Vec<TraceRecord<T>> {
    let mut out: Vec<TraceRecord<T>> = Vec::new();
    let mut best = T::infinity();
    for v in evals {
        if v.is_finite() && v < best {
            best = v;
            out.push(TraceRecord {
                iter: out.len(),
                objective: v,
                mu,
            });
        }
    }
    match out.last_mut() {
        Some(last) if last.objective == objective => {}
        _ => out.push(TraceRecord {
            iter: out.len(),
            objective,
            mu,
        }),
    }
    out
}

fn finish<T: Scalar>(
    theta: Vec<T>,
    mu_star: T,
    nu_star: Option<T>,
    objective: T,
    converged: bool,
    trace: Vec<TraceRecord<T>>,
) -> DualSolution<T> {
    DualSolution {
        theta,
        mu_star,
        nu_star,
        objective,
        outer_iters: trace.len(),
        converged,
        trace,
    }
}

/// Minimizes the tilted risk `E[e^{αℓ}]` through the equivalent entropic risk
/// `(1/α) log E[e^{αℓ}]`, which is the reported objective. `α = 0` is the plain
/// performative solve.
pub fn minimize_tpr<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    alpha: T,
    cfg: &SolveConfig,
    theta0: &[T],
) -> Result<DualSolution<T>> {
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(Error::Argument(format!("tilt must be finite and nonnegative, got {alpha}")));
    }
    if alpha == T::zero() {
        return minimize_pr(model, map, cfg, theta0);
    }
    prepare(map, cfg, theta0)?;
    let mut trace = Vec::new();
    let d = descend(
        |th| {
            let r = entropic_and_grad(model, map, alpha, th);
            trace.push(r.0);
            r
        },
        theta0,
        cfg,
        cfg.inner_gd_iters,
    )?;
    let objective = entropic_and_grad(model, map, alpha, &d.theta).0;
    let mu = T::one() / alpha;
    Ok(finish(d.theta, mu, None, objective, d.converged, monotone_trace(trace, objective, mu)))
}

/// Smallest dual value used for the θ-step when the robust risk sits at the
/// point mass (`μ* = 0`).
fn mu_floor<T: Scalar>(profile_range: T) -> T {
    (profile_range * T::lit(1e-3)).max(T::epsilon().sqrt())
}

fn relative_change<T: Scalar>(old: T, new: T) -> T {
    if old == new {
        return T::zero();
    }
    (new - old).abs() / old.abs().max(new.abs()).max(T::min_positive_value())
}

/// Alternating minimization of the KL-robust risk: a tilted θ-step at
/// `α = 1/μ`, then the exact one-dimensional μ-update, until μ settles.
pub fn minimize_drpr<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    rho: T,
    cfg: &SolveConfig,
    theta0: &[T],
) -> Result<DualSolution<T>> {
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(Error::Argument(format!("radius must be finite and nonnegative, got {rho}")));
    }
    if rho == T::zero() {
        return minimize_pr(model, map, cfg, theta0);
    }
    prepare(map, cfg, theta0)?;
    let profile = loss_profile(model, map, theta0)?;
    let var = profile.variance();
    let mut mu = (var / (T::lit(2.0) * rho)).sqrt();
    if !(mu > T::zero()) || !mu.is_finite() {
        mu = T::one();
    }
    let mut theta = theta0.to_vec();
    let mut trace: Vec<TraceRecord<T>> = Vec::new();
    let mut converged = false;
    let mut objective = T::infinity();
    for k in 0..cfg.max_outer_iters {
        let (lmin, lmax) = loss_profile(model, map, &theta)?.loss_range();
        let mu_step = if mu > T::zero() { mu } else { mu_floor(lmax - lmin) };
        let alpha = T::one() / mu_step;
        let d = descend(|th| entropic_and_grad(model, map, alpha, th), &theta, cfg, cfg.inner_gd_iters)?;
        let sol = drpr(&loss_profile(model, map, &d.theta)?, rho)?;
        if !sol.value.is_finite() {
            return Err(Error::Divergence { iteration: k });
        }
        if sol.value > objective {
            // the μ-update cannot undo a θ-step; keep the previous iterate
            break;
        }
        theta = d.theta;
        objective = sol.value;
        let change = relative_change(mu, sol.mu_star);
        mu = sol.mu_star;
        trace.push(TraceRecord {
            iter: k,
            objective,
            mu,
        });
        if change <= T::lit(cfg.mu_tol) {
            converged = true;
            break;
        }
    }
    Ok(finish(theta, mu, None, objective, converged, trace))
}

/// Block-coordinate descent on the augmented φ-divergence objective: gradient
/// steps in θ, then the joint `(μ, ν)` minimization at fixed θ.
pub fn minimize_augpr<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    rho: T,
    phi: &PhiConjugate<T>,
    cfg: &SolveConfig,
    theta0: &[T],
) -> Result<DualSolution<T>> {
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(Error::Argument(format!("radius must be finite and nonnegative, got {rho}")));
    }
    prepare(map, cfg, theta0)?;
    let init = augmented_drpr(&loss_profile(model, map, theta0)?, rho, phi)?;
    let (mut mu, mut nu) = (init.mu, init.nu);
    let mut theta = theta0.to_vec();
    let mut objective = T::infinity();
    let mut trace = Vec::new();
    let mut converged = false;
    for k in 0..cfg.max_outer_iters {
        // a point-mass or tied profile gives a μ too small to step on
        let profile = loss_profile(model, map, &theta)?;
        let (lmin, lmax) = profile.loss_range();
        let (mu_step, nu_step) = if lmax > lmin && mu >= mu_floor(lmax - lmin) {
            (mu, nu)
        } else {
            let m = if lmax > lmin { mu_floor(lmax - lmin) } else { T::one() };
            (m, profile_nu(&profile, m, rho, phi)?.0)
        };
        let d = descend(
            |th| augmented_and_grad(model, map, mu_step, nu_step, phi, th),
            &theta,
            cfg,
            cfg.inner_gd_iters,
        )?;
        let sol = augmented_drpr(&loss_profile(model, map, &d.theta)?, rho, phi)?;
        if sol.value > objective {
            break;
        }
        theta = d.theta;
        objective = sol.value;
        let change = relative_change(mu, sol.mu);
        mu = sol.mu;
        nu = sol.nu;
        trace.push(TraceRecord {
            iter: k,
            objective,
            mu,
        });
        if change <= T::lit(cfg.mu_tol) {
            converged = true;
            break;
        }
    }
    Ok(finish(theta, mu, Some(nu), objective, converged, trace))
}

/// One row of the radius-to-tilt table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MuRhoRow<T> {
    pub rho: T,
    pub mu_star: T,
    /// `1/μ*`
    pub alpha: T,
    pub theta: Vec<T>,
}

/// Solves the robust problem for each radius and tabulates `μ*(ρ)` and `α = 1/μ*`.
/// Each grid point starts from `θ = 0`; failures are reported per point.
pub fn mu_rho_correspondence<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    rho_grid: &[T],
    cfg: &SolveConfig,
) -> Result<Vec<Result<MuRhoRow<T>>>> {
    if rho_grid.is_empty() {
        return Err(Error::Argument("radius grid is empty".into()));
    }
    if rho_grid.iter().any(|&r| !(r > T::zero()) || !r.is_finite())
        || rho_grid.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(Error::Argument("radius grid must be positive and strictly ascending".into()));
    }
    let theta0 = vec![T::zero(); map.param_dim()];
    Ok(rho_grid
        .par_iter()
        .map(|&rho| {
            let sol = minimize_drpr(model, map, rho, cfg, &theta0)?;
            Ok(MuRhoRow {
                rho,
                mu_star: sol.mu_star,
                alpha: T::one() / sol.mu_star,
                theta: sol.theta,
            })
        })
        .collect())
}
