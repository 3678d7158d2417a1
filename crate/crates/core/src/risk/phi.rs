//! φ-divergence balls: convex conjugates, the augmented two-variable dual, and
//! the Cressie-Read single-variable dual.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{performative_risk, LossProfile};
use crate::error::{Error, Result};
use crate::scalar::{golden_section, pairwise_sum, Scalar};

/// Convex conjugate `φ*` of a divergence generator `φ`.
///
/// Built-ins:
/// - `Kl`: `φ(t) = t log t − t + 1`, `φ*(s) = eˢ − 1` on all of ℝ.
/// - `ChiSquare`: `φ(t) = (t − 1)²`, `φ*(s) = s + s²/4` for `s ≥ −2` and `−1` below.
/// - `CressieRead { k }`: `φ(t) = (tᵏ − kt + k − 1)/(k(k − 1))`,
///   `φ*(s) = (((k − 1)s + 1)₊^{k*} − 1)/k` with `k* = k/(k − 1)`.
#[derive(Clone)]
pub enum PhiConjugate<T> {
    Kl,
    ChiSquare,
    CressieRead { k: T },
    Custom {
        name: String,
        f: Arc<dyn Fn(T) -> T + Send + Sync>,
    },
}

impl<T: Scalar> PhiConjugate<T> {
    pub fn cressie_read(k: T) -> Result<Self> {
        if !(k > T::one()) || !k.is_finite() {
            return Err(Error::Argument(format!("Cressie-Read order must exceed 1, got {k}")));
        }
        Ok(Self::CressieRead { k })
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, s: T) -> T {
        match self {
            Self::Kl => s.exp_m1(),
            Self::ChiSquare => {
                if s >= -T::lit(2.0) {
                    s + s * s / T::lit(4.0)
                } else {
                    -T::one()
                }
            }
            Self::CressieRead { k } => {
                let k = *k;
                let base = ((k - T::one()) * s + T::one()).max(T::zero());
                (base.powf(k / (k - T::one())) - T::one()) / k
            }
            Self::Custom { f, .. } => f(s),
        }
    }

    /// `φ*'(s)`. Custom conjugates are differentiated by central differences.
    pub fn derivative(&self, s: T) -> T {
        match self {
            Self::Kl => s.exp(),
            Self::ChiSquare => {
                if s >= -T::lit(2.0) {
                    T::one() + s / T::lit(2.0)
                } else {
                    T::zero()
                }
            }
            Self::CressieRead { k } => {
                let k = *k;
                ((k - T::one()) * s + T::one()).max(T::zero()).powf(T::one() / (k - T::one()))
            }
            Self::Custom { f, .. } => {
                let h = T::epsilon().cbrt() * s.abs().max(T::one());
                (f(s + h) - f(s - h)) / (h + h)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Kl => "kl".into(),
            Self::ChiSquare => "chi_square".into(),
            Self::CressieRead { k } => format!("cressie_read({k})"),
            Self::Custom { name, .. } => name.clone(),
        }
    }
}

impl<T: Scalar> fmt::Debug for PhiConjugate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhiConjugate({})", self.name())
    }
}

fn aug_raw<T: Scalar>(profile: &LossProfile<T>, mu: T, nu: T, rho: T, phi: &PhiConjugate<T>) -> T {
    let terms: Vec<T> = profile
        .losses()
        .iter()
        .zip(profile.weights())
        .map(|(&l, &w)| if w > T::zero() { w * mu * phi.eval((l - nu) / mu) } else { T::zero() })
        .collect();
    let v = pairwise_sum(&terms) + mu * rho + nu;
    if v.is_finite() {
        v
    } else {
        T::infinity()
    }
}

/// `E[μ φ*((ℓ − ν)/μ)] + μρ + ν`.
pub fn augmented_pr_objective<T: Scalar>(
    profile: &LossProfile<T>,
    mu: T,
    nu: T,
    rho: T,
    phi: &PhiConjugate<T>,
) -> Result<T> {
    if !(mu > T::zero()) {
        return Err(Error::Argument(format!("dual variable must be positive, got {mu}")));
    }
    let v = aug_raw(profile, mu, nu, rho, phi);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "conjugate {} is not finite at mu = {mu}, nu = {nu}",
            phi.name()
        )))
    }
}

/// Minimizes the augmented objective over `ν` at fixed `μ`; returns `(ν*, value)`.
///
/// The minimizer lies between the smallest and largest loss for every
/// conjugate with `φ*'(0) = 1`. The KL case has the closed form `ν* = μ log E[e^{ℓ/μ}]`.
pub fn profile_nu<T: Scalar>(
    profile: &LossProfile<T>,
    mu: T,
    rho: T,
    phi: &PhiConjugate<T>,
) -> Result<(T, T)> {
    if !(mu > T::zero()) {
        return Err(Error::Argument(format!("dual variable must be positive, got {mu}")));
    }
    let (lmin, lmax) = profile.loss_range();
    if lmin == lmax {
        return Ok((lmin, aug_raw(profile, mu, lmin, rho, phi)));
    }
    if let PhiConjugate::Kl = phi {
        let nu = super::drpr_dual_objective(profile, mu, T::zero())?;
        return Ok((nu, nu + mu * rho));
    }
    let (nu, v) = golden_section(|nu| aug_raw(profile, mu, nu, rho, phi), lmin, lmax, T::zero(), 200);
    Ok((nu, v))
}

/// Minimizer of the augmented objective in `(μ, ν)` at a fixed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AugmentedSolution<T> {
    pub value: T,
    pub mu: T,
    pub nu: T,
}

/// Jointly minimizes the augmented objective over `(μ, ν)`: golden-section
/// search on `log μ` with `ν` profiled out at each probe.
pub fn augmented_drpr<T: Scalar>(
    profile: &LossProfile<T>,
    rho: T,
    phi: &PhiConjugate<T>,
) -> Result<AugmentedSolution<T>> {
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(Error::Argument(format!("radius must be finite and nonnegative, got {rho}")));
    }
    let (lmin, lmax) = profile.loss_range();
    if lmin == lmax {
        let mu = T::epsilon().sqrt() * lmax.abs().max(T::one());
        return Ok(AugmentedSolution {
            value: aug_raw(profile, mu, lmax, rho, phi),
            mu,
            nu: lmax,
        });
    }
    let range = lmax - lmin;
    let eval = |t: T| profile_nu(profile, t.exp(), rho, phi).map_or(T::infinity(), |(_, v)| v);
    let (t, _) = golden_section(
        eval,
        (T::lit(1e-6) * range).ln(),
        (T::lit(1e6) * range).ln(),
        T::zero(),
        160,
    );
    let mu = t.exp();
    let (nu, value) = profile_nu(profile, mu, rho, phi)?;
    if !value.is_finite() {
        return Err(Error::Domain(format!("augmented objective not finite for {}", phi.name())));
    }
    Ok(AugmentedSolution { value, mu, nu })
}

/// Order `k > 1` and radius `ρ ≥ 0` of a Cressie-Read ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CressieReadSpec<T> {
    k: T,
    rho: T,
}

impl<T: Scalar> CressieReadSpec<T> {
    pub fn new(k: T, rho: T) -> Result<Self> {
        if !(k > T::one()) || !k.is_finite() {
            return Err(Error::Argument(format!("Cressie-Read order must exceed 1, got {k}")));
        }
        if !(rho >= T::zero()) || !rho.is_finite() {
            return Err(Error::Argument(format!("radius must be finite and nonnegative, got {rho}")));
        }
        Ok(Self { k, rho })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    /// Conjugate exponent `k* = k/(k − 1)`.
    pub fn k_star(&self) -> T {
        self.k / (self.k - T::one())
    }
}

/// `(1 + ρk(k − 1))^{1/k} E[(ℓ − μ)₊^{k*}]^{1/k*} + μ`.
pub fn cressie_read_dual<T: Scalar>(profile: &LossProfile<T>, spec: &CressieReadSpec<T>, mu: T) -> T {
    let (k, ks) = (spec.k, spec.k_star());
    let c = (T::one() + spec.rho * k * (k - T::one())).powf(T::one() / k);
    let terms: Vec<T> = profile
        .losses()
        .iter()
        .zip(profile.weights())
        .map(|(&l, &w)| w * (l - mu).max(T::zero()).powf(ks))
        .collect();
    c * pairwise_sum(&terms).powf(T::one() / ks) + mu
}

/// Infimum of the Cressie-Read dual over `μ ∈ ℝ`; returns `(value, μ*)`.
///
/// At `ρ = 0` the infimum is the mean loss, approached as `μ → −∞`, and is
/// returned exactly with `μ* = −∞`.
pub fn cressie_read_drpr<T: Scalar>(profile: &LossProfile<T>, spec: &CressieReadSpec<T>) -> (T, T) {
    if spec.rho == T::zero() {
        return (performative_risk(profile), T::neg_infinity());
    }
    let (lmin, lmax) = profile.loss_range();
    if lmin == lmax {
        return (lmax, lmax);
    }
    let span = (lmax - lmin) * T::lit(1e6);
    let (mu, v) = golden_section(
        |mu| cressie_read_dual(profile, spec, mu),
        lmin - span,
        lmax,
        T::zero(),
        300,
    );
    (v, mu)
}
