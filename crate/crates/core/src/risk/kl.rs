//! KL-ball robust risk through its one-variable dual, the worst-case tilt,
//! and KL estimators.

use serde::{Deserialize, Serialize};

use super::{performative_risk, LossProfile};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, golden_section, pairwise_sum, Scalar};

/// Value of the robust risk and the dual minimizer `μ*`.
///
/// `mu_star` is `+∞` at zero radius and `0` when the worst case is the point
/// mass on the largest loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DrprSolution<T> {
    pub value: T,
    pub mu_star: T,
}

const GOLDEN_ITERS: usize = 200;
const NEWTON_STEPS: usize = 5;

/// Shifted tilt statistics at `μ`: `(log Σ wᵢ e^{(ℓᵢ−ℓmax)/μ}, E_q[ℓ], Var_q[ℓ])`.
fn tilt_stats<T: Scalar>(losses: &[T], weights: &[T], lmax: T, mu: T) -> (T, T, T) {
    let e: Vec<T> = losses
        .iter()
        .zip(weights)
        .map(|(&l, &w)| if w > T::zero() { w * ((l - lmax) / mu).exp() } else { T::zero() })
        .collect();
    let s = pairwise_sum(&e);
    let m1: Vec<T> = e.iter().zip(losses).map(|(&q, &l)| q * (l - lmax)).collect();
    let mean_shift = pairwise_sum(&m1) / s;
    let m2: Vec<T> = e
        .iter()
        .zip(losses)
        .map(|(&q, &l)| {
            let c = l - lmax - mean_shift;
            q * c * c
        })
        .collect();
    (s.ln(), lmax + mean_shift, pairwise_sum(&m2) / s)
}

fn psi<T: Scalar>(losses: &[T], weights: &[T], lmax: T, mu: T, rho: T) -> T {
    let e: Vec<T> = losses
        .iter()
        .zip(weights)
        .map(|(&l, &w)| if w > T::zero() { w * ((l - lmax) / mu).exp() } else { T::zero() })
        .collect();
    lmax + mu * pairwise_sum(&e).ln() + mu * rho
}

/// `ψ(μ) = μ log E[e^{ℓ/μ}] + μρ`, evaluated with the largest loss factored out.
pub fn drpr_dual_objective<T: Scalar>(profile: &LossProfile<T>, mu: T, rho: T) -> Result<T> {
    if !(mu > T::zero()) {
        return Err(Error::Argument(format!("dual variable must be positive, got {mu}")));
    }
    let (_, lmax) = profile.loss_range();
    Ok(psi(profile.losses(), profile.weights(), lmax, mu, rho))
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(Error::Argument(format!("radius must be finite and nonnegative, got {rho}")));
    }
    Ok(())
}

/// Total weight of the atoms attaining the largest loss.
fn argmax_mass<T: Scalar>(profile: &LossProfile<T>, lmax: T) -> T {
    let m: Vec<T> = profile
        .losses()
        .iter()
        .zip(profile.weights())
        .map(|(&l, &w)| if l == lmax { w } else { T::zero() })
        .collect();
    pairwise_sum(&m)
}

/// Worst-case expected loss over the KL ball of radius `ρ`, via
/// `inf_{μ ≥ 0} μ log E[e^{ℓ/μ}] + μρ`.
pub fn drpr<T: Scalar>(profile: &LossProfile<T>, rho: T) -> Result<DrprSolution<T>> {
    check_rho(rho)?;
    if rho == T::zero() {
        return Ok(DrprSolution {
            value: performative_risk(profile),
            mu_star: T::infinity(),
        });
    }
    let (lmin, lmax) = profile.loss_range();
    if rho >= -argmax_mass(profile, lmax).ln() || lmax == lmin {
        return Ok(DrprSolution {
            value: lmax,
            mu_star: T::zero(),
        });
    }
    let (losses, weights) = (profile.losses(), profile.weights());
    let range = lmax - lmin;
    let lo = (T::lit(1e-6) * range).ln();
    let hi = (T::lit(1e6) * range).ln();
    let (t, mut best) = golden_section(
        |t: T| psi(losses, weights, lmax, t.exp(), rho),
        lo,
        hi,
        T::zero(),
        GOLDEN_ITERS,
    );
    let mut mu = t.exp();
    for _ in 0..NEWTON_STEPS {
        let (log_s, mean, var) = tilt_stats(losses, weights, lmax, mu);
        let d1 = log_s + (lmax - mean) / mu + rho;
        let d2 = var / (mu * mu * mu);
        if !(d2 > T::zero()) {
            break;
        }
        let next = mu - d1 / d2;
        if !(next > T::zero()) || !next.is_finite() {
            break;
        }
        let v = psi(losses, weights, lmax, next, rho);
        if !(v <= best) {
            break;
        }
        mu = next;
        best = v;
    }
    Ok(DrprSolution {
        value: best,
        mu_star: mu,
    })
}

/// Exponentially tilted weights `qᵢ ∝ wᵢ e^{ℓᵢ/μ*}`, the worst case at an interior `μ*`.
pub fn worst_case_weights<T: Scalar>(profile: &LossProfile<T>, mu_star: T) -> Result<Vec<T>> {
    if !(mu_star > T::zero()) {
        return Err(Error::Argument(format!(
            "tilt requires a positive dual variable, got {mu_star}"
        )));
    }
    let (_, lmax) = profile.loss_range();
    let mut q: Vec<T> = profile
        .losses()
        .iter()
        .zip(profile.weights())
        .map(|(&l, &w)| if w > T::zero() { w * ((l - lmax) / mu_star).exp() } else { T::zero() })
        .collect();
    let s = pairwise_sum(&q);
    for v in &mut q {
        *v /= s;
    }
    Ok(q)
}

/// Worst-case reweighting for radius `ρ`, including the boundary cases: the base
/// weights at `ρ = 0` and the point mass on the argmax atoms when `μ* = 0`.
pub fn worst_case_weights_for_radius<T: Scalar>(profile: &LossProfile<T>, rho: T) -> Result<Vec<T>> {
    let sol = drpr(profile, rho)?;
    if sol.mu_star.is_infinite() {
        return Ok(profile.weights().to_vec());
    }
    if sol.mu_star > T::zero() {
        return worst_case_weights(profile, sol.mu_star);
    }
    let (_, lmax) = profile.loss_range();
    let mass = argmax_mass(profile, lmax);
    Ok(profile
        .losses()
        .iter()
        .zip(profile.weights())
        .map(|(&l, &w)| if l == lmax { w / mass } else { T::zero() })
        .collect())
}

/// `Σ qᵢ log(qᵢ/pᵢ)` with `0 log 0 = 0`.
pub fn kl_between_weights<T: Scalar>(q: &[T], p: &[T]) -> Result<T> {
    ensure_dim(p.len(), q.len())?;
    let mut terms = Vec::with_capacity(q.len());
    for (i, (&qi, &pi)) in q.iter().zip(p).enumerate() {
        if !(qi >= T::zero()) || !(pi >= T::zero()) {
            return Err(Error::Argument(format!("negative or NaN mass at atom {i}")));
        }
        if qi == T::zero() {
            continue;
        }
        if pi == T::zero() {
            return Err(Error::AbsoluteContinuity { index: i });
        }
        terms.push(qi * (qi / pi).ln());
    }
    Ok(pairwise_sum(&terms).max(T::zero()))
}

/// Gaussian plug-in KL between location maps differing only in the performativity
/// scale: `½ (ε_true − ε_nominal)² θᵀAᵀ Σ̂⁻¹ Aθ`.
pub fn gaussian_kl_location<T: Scalar>(
    theta: &[T],
    a: &Matrix<T>,
    eps_true: T,
    eps_nominal: T,
    sigma_hat: &Matrix<T>,
) -> Result<T> {
    ensure_dim(a.cols(), theta.len())?;
    ensure_dim(a.rows(), sigma_hat.rows())?;
    let shift = a.mul_vec(theta);
    let solved = sigma_hat.solve_spd(&shift)?;
    let de = eps_true - eps_nominal;
    Ok(T::lit(0.5) * de * de * dot(&shift, &solved))
}
