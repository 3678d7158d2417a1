//! Distribution maps `θ ↦ 𝒟(θ)` realized as pushforwards of a base
//! distribution under parametric response maps.

use serde::{Deserialize, Serialize};

use crate::datamodel::{EmpiricalDistribution, Sample};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// How a deployed parameter moves each atom's features. Labels never move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
#[serde(bound = "T: Scalar")]
pub enum ResponseMap<T> {
    /// Quadratic-cost best response `x ↦ x − ε·B·θ`, `B = diag(mask)`.
    #[serde(rename = "strategic")]
    StrategicLinear {
        epsilon: T,
        #[serde(with = "mask_as_ints")]
        mask: Vec<bool>,
    },
    /// Translation model `x ↦ x + A·θ` with `A` of shape `d × dim(Θ)`.
    #[serde(rename = "location")]
    LocationShift {
        #[serde(rename = "A")]
        a: Matrix<T>,
    },
    Identity,
}

mod mask_as_ints {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mask: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(mask.iter().map(|&b| u8::from(b)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!(
                    "mask entries must be 0 or 1, got {other}"
                ))),
            })
            .collect()
    }
}

impl<T: Scalar> ResponseMap<T> {
    pub fn strategic(epsilon: T, mask: Vec<bool>) -> Self {
        Self::StrategicLinear { epsilon, mask }
    }

    pub fn location(a: Matrix<T>) -> Self {
        Self::LocationShift { a }
    }

    /// Checks the map against feature dimension `d` and parameter dimension `p`.
    pub fn check_dims(&self, d: usize, p: usize) -> Result<()> {
        match self {
            Self::StrategicLinear { epsilon, mask } => {
                if !epsilon.is_finite() {
                    return Err(Error::Argument("epsilon must be finite".into()));
                }
                ensure_dim(d, mask.len())?;
                ensure_dim(d, p)
            }
            Self::LocationShift { a } => {
                ensure_dim(d, a.rows())?;
                ensure_dim(p, a.cols())
            }
            Self::Identity => Ok(()),
        }
    }

    /// Writes `T_θ(x)` into `out`. Dimensions must already be checked.
    pub fn apply_into(&self, x: &[T], theta: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend_from_slice(x);
        match self {
            Self::StrategicLinear { epsilon, mask } => {
                for ((o, &m), &t) in out.iter_mut().zip(mask).zip(theta) {
                    if m {
                        *o -= *epsilon * t;
                    }
                }
            }
            Self::LocationShift { a } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += crate::scalar::dot(a.row(i), theta);
                }
            }
            Self::Identity => {}
        }
    }

    /// Adds `J_θ(T_θ)ᵀ v` to `acc`, where `v` is a gradient with respect to the moved features.
    pub fn add_jacobian_t(&self, v: &[T], acc: &mut [T]) {
        match self {
            Self::StrategicLinear { epsilon, mask } => {
                for ((a, &m), &vi) in acc.iter_mut().zip(mask).zip(v) {
                    if m {
                        *a -= *epsilon * vi;
                    }
                }
            }
            Self::LocationShift { a } => {
                for (i, &vi) in v.iter().enumerate() {
                    for (acc_j, &aij) in acc.iter_mut().zip(a.row(i)) {
                        *acc_j += aij * vi;
                    }
                }
            }
            Self::Identity => {}
        }
    }

    /// Whether the map moves anything at all.
    pub fn is_identity(&self) -> bool {
        match self {
            Self::Identity => true,
            Self::StrategicLinear { epsilon, mask } => {
                *epsilon == T::zero() || !mask.iter().any(|&m| m)
            }
            Self::LocationShift { .. } => false,
        }
    }
}

/// Best response `Δ_θ(x) = x − ε·B·θ` with `B = diag(strategic_mask)`.
pub fn best_response<T: Scalar>(
    x: &[T],
    theta: &[T],
    epsilon: T,
    strategic_mask: &[bool],
) -> Result<Vec<T>> {
    ensure_dim(x.len(), theta.len())?;
    ensure_dim(x.len(), strategic_mask.len())?;
    Ok(x.iter()
        .zip(theta)
        .zip(strategic_mask)
        .map(|((&xi, &ti), &m)| if m { xi - epsilon * ti } else { xi })
        .collect())
}

/// Base distribution plus response map: `𝒟(θ) = T_θ ♯ base`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionMap<T> {
    base: EmpiricalDistribution<T>,
    response: ResponseMap<T>,
    param_dim: usize,
}

impl<T: Scalar> DistributionMap<T> {
    /// Parameter dimension is taken from the response map (columns of `A`) or
    /// equals the feature dimension otherwise.
    pub fn new(base: EmpiricalDistribution<T>, response: ResponseMap<T>) -> Result<Self> {
        let d = base.dim();
        let param_dim = match &response {
            ResponseMap::LocationShift { a } => a.cols(),
            _ => d,
        };
        response.check_dims(d, param_dim)?;
        Ok(Self {
            base,
            response,
            param_dim,
        })
    }

    pub fn base(&self) -> &EmpiricalDistribution<T> {
        &self.base
    }

    pub fn response(&self) -> &ResponseMap<T> {
        &self.response
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Same base, different response.
    pub fn with_response(&self, response: ResponseMap<T>) -> Result<Self> {
        Self::new(self.base.clone(), response)
    }

    pub fn check_theta(&self, theta: &[T]) -> Result<()> {
        ensure_dim(self.param_dim, theta.len())
    }
}

/// Atom-wise image of the base under `T_θ`; weights and labels are preserved.
pub fn pushforward<T: Scalar>(
    map: &DistributionMap<T>,
    theta: &[T],
) -> Result<EmpiricalDistribution<T>> {
    map.check_theta(theta)?;
    let mut buf = Vec::with_capacity(map.dim());
    let samples = map
        .base
        .samples()
        .iter()
        .map(|s| {
            map.response.apply_into(&s.features, theta, &mut buf);
            Sample::new(buf.clone(), s.label)
        })
        .collect();
    Ok(EmpiricalDistribution::from_parts_unchecked(
        samples,
        map.base.weights().to_vec(),
    ))
}

/// Mixture `Σ γ_k 𝒟_k(θ)` of distribution maps sharing a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMap<T> {
    components: Vec<DistributionMap<T>>,
    mixture_weights: Vec<T>,
}

impl<T: Scalar> MixtureMap<T> {
    pub fn new(components: Vec<DistributionMap<T>>, mixture_weights: Vec<T>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyData("mixture has no components".into()));
        }
        ensure_dim(components.len(), mixture_weights.len())?;
        let d = components[0].dim();
        let p = components[0].param_dim();
        for c in &components {
            ensure_dim(d, c.dim())?;
            ensure_dim(p, c.param_dim())?;
        }
        if mixture_weights.iter().any(|&w| !(w >= T::zero())) {
            return Err(Error::Argument("mixture weights must be nonnegative".into()));
        }
        let total: T = mixture_weights.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
            return Err(Error::Argument(format!("mixture weights sum to {total}")));
        }
        Ok(Self {
            components,
            mixture_weights,
        })
    }

    pub fn components(&self) -> &[DistributionMap<T>] {
        &self.components
    }

    pub fn mixture_weights(&self) -> &[T] {
        &self.mixture_weights
    }

    pub fn param_dim(&self) -> usize {
        self.components[0].param_dim()
    }

    /// Flattens the mixture into a single map over the concatenated base.
    /// Only valid when every component shares one response map.
    pub fn as_single_map(&self) -> Result<DistributionMap<T>> {
        let response = self.components[0].response().clone();
        if self.components.iter().any(|c| c.response() != &response) {
            return Err(Error::Argument(
                "mixture components use different response maps".into(),
            ));
        }
        let base = self.concat_bases(|c| c.base().clone())?;
        DistributionMap::new(base, response)
    }

    fn concat_bases<F: Fn(&DistributionMap<T>) -> EmpiricalDistribution<T>>(
        &self,
        get: F,
    ) -> Result<EmpiricalDistribution<T>> {
        let mut samples = Vec::new();
        let mut weights = Vec::new();
        for (c, &g) in self.components.iter().zip(&self.mixture_weights) {
            if g == T::zero() {
                continue;
            }
            let dist = get(c);
            for (s, w) in dist.iter() {
                samples.push(s.clone());
                weights.push(g * w);
            }
        }
        EmpiricalDistribution::from_unnormalized(samples, weights)
    }
}

/// Concatenated component pushforwards with weights scaled by the mixture weights.
pub fn mixture_pushforward<T: Scalar>(
    mix: &MixtureMap<T>,
    theta: &[T],
) -> Result<EmpiricalDistribution<T>> {
    for c in &mix.components {
        c.check_theta(theta)?;
    }
    mix.concat_bases(|c| pushforward(c, theta).expect("dimensions checked"))
}

/// Estimates `A` from observed means at parameters `θ₀..θ_K` as `Â = U V†`,
/// `V = [θ_k − θ₀]`, `U = [μ_k − μ₀]`, with `V† = (VᵀV)⁻¹Vᵀ`.
pub fn partial_identify<T: Scalar>(theta_list: &[Vec<T>], mean_list: &[Vec<T>]) -> Result<Matrix<T>> {
    if theta_list.len() < 2 {
        return Err(Error::Argument(
            "partial identification needs at least two observed parameters".into(),
        ));
    }
    ensure_dim(theta_list.len(), mean_list.len())?;
    let p = theta_list[0].len();
    let d = mean_list[0].len();
    let v_cols: Vec<Vec<T>> = theta_list[1..]
        .iter()
        .map(|t| {
            ensure_dim(p, t.len())?;
            Ok(t.iter().zip(&theta_list[0]).map(|(&a, &b)| a - b).collect())
        })
        .collect::<Result<_>>()?;
    let u_cols: Vec<Vec<T>> = mean_list[1..]
        .iter()
        .map(|m| {
            ensure_dim(d, m.len())?;
            Ok(m.iter().zip(&mean_list[0]).map(|(&a, &b)| a - b).collect())
        })
        .collect::<Result<_>>()?;
    let v = Matrix::from_columns(&v_cols)?;
    let u = Matrix::from_columns(&u_cols)?;
    let gram = v.transpose().matmul(&v)?;

    let ev = gram.symmetric_eigenvalues();
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > T::zero()) || hi / lo > T::lit(1e12) {
        return Err(Error::Singular(format!(
            "observed parameter differences are rank deficient (eigenvalues {lo}..{hi})"
        )));
    }
    let pinv = gram.inverse()?.matmul(&v.transpose())?;
    u.matmul(&pinv)
}
