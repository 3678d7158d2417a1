//! Closed forms for the Gaussian toy problem `𝒟(θ) = 𝒩(a₁θ + a₀, σ²)` with
//! loss `ℓ(z; θ) = θz` on `Θ = [−1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ToyProblem<T> {
    pub a1: T,
    pub a0: T,
    pub sigma2: T,
    pub rho: T,
}

impl<T: Scalar> ToyProblem<T> {
    pub fn new(a1: T, a0: T, sigma2: T, rho: T) -> Result<Self> {
        let ok = a1 > T::zero()
            && a0 > T::zero()
            && sigma2 > T::zero()
            && rho >= T::zero()
            && [a1, a0, sigma2, rho].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::Argument(
                "toy problem needs a1, a0, sigma2 > 0 and rho >= 0, all finite".into(),
            ));
        }
        Ok(Self { a1, a0, sigma2, rho })
    }

    /// `ρ ≤ a₀²/(2σ²)`: the robust optimum is still on the negative side.
    pub fn feasible(&self) -> bool {
        self.rho <= self.a0 * self.a0 / (T::lit(2.0) * self.sigma2)
    }

    /// Mean of `𝒟(θ)`.
    pub fn f(&self, theta: T) -> T {
        self.a1 * theta + self.a0
    }

    /// `√(2ρσ²)`
    fn penalty_scale(&self) -> T {
        (T::lit(2.0) * self.rho * self.sigma2).sqrt()
    }
}

/// `PR(θ) = θ(a₁θ + a₀)`.
pub fn toy_pr<T: Scalar>(p: &ToyProblem<T>, theta: T) -> T {
    theta * p.f(theta)
}

/// `DRPR(θ) = θ(a₁θ + a₀) + √(2ρσ²)|θ|`, for `θ ∈ [−1, 1]`.
pub fn toy_drpr<T: Scalar>(p: &ToyProblem<T>, theta: T) -> T {
    toy_pr(p, theta) + p.penalty_scale() * theta.abs()
}

/// Risk under the adversarial map `𝒩(a₁θ + a₀ − √(2ρσ²), σ²)`, which sits at KL distance `ρ`.
pub fn toy_adversarial_pr<T: Scalar>(p: &ToyProblem<T>, theta: T) -> T {
    theta * (p.f(theta) - p.penalty_scale())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ToyOptima<T> {
    pub theta_po: T,
    pub theta_drpo: T,
    pub drpr_at_drpo: T,
    /// `σ|θ_DRPO|/√(2ρ)`; absent when `ρ = 0` or `θ_DRPO = 0`.
    pub mu_star: Option<T>,
    /// `ρσ²/(2a₁)`
    pub worst_case_gap: T,
}

/// Performative and robust optima, both clipped to `[−1, 1]`. Past the
/// feasibility boundary the robust optimum is `0`.
pub fn toy_optima<T: Scalar>(p: &ToyProblem<T>) -> ToyOptima<T> {
    let two = T::lit(2.0);
    let clip = |t: T| t.max(-T::one()).min(T::one());
    let theta_po = clip(-p.a0 / (two * p.a1));
    let theta_drpo = clip(((p.penalty_scale() - p.a0) / (two * p.a1)).min(T::zero()));
    let mu_star = if p.rho > T::zero() && theta_drpo != T::zero() {
        Some(p.sigma2.sqrt() * theta_drpo.abs() / (two * p.rho).sqrt())
    } else {
        None
    };
    ToyOptima {
        theta_po,
        theta_drpo,
        drpr_at_drpo: toy_drpr(p, theta_drpo),
        mu_star,
        worst_case_gap: p.rho * p.sigma2 / (two * p.a1),
    }
}

/// `θᵀf(θ) + √(2ρ θᵀΣθ)`, the multivariate Gaussian robust risk.
pub fn toy_multivariate_drpr<T: Scalar>(
    theta: &[T],
    f_theta: &[T],
    sigma: &Matrix<T>,
    rho: T,
) -> Result<T> {
    ensure_dim(theta.len(), f_theta.len())?;
    ensure_dim(theta.len(), sigma.cols())?;
    let quad = dot(theta, &sigma.mul_vec(theta)).max(T::zero());
    Ok(dot(theta, f_theta) + (T::lit(2.0) * rho * quad).sqrt())
}
