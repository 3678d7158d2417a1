//! Losses, composed loss/gradient through a response map, and classification metrics.

use serde::{Deserialize, Serialize};

use crate::datamodel::{EmpiricalDistribution, Sample};
use crate::distmap::ResponseMap;
use crate::error::{ensure_dim, Error, Result};
use crate::scalar::{dot, pairwise_sum, Scalar};

/// Probability clamp used in the log terms of the cross-entropy.
pub const PROB_CLAMP: f64 = 1e-12;

/// A loss `ℓ(x, y; θ)` with partial gradients in `θ` and in `x`.
///
/// The solvers only ever talk to losses through this trait, so any
/// differentiable model can be plugged into the performative machinery.
pub trait PerformativeLoss<T: Scalar>: Send + Sync {
    fn value(&self, x: &[T], label: bool, theta: &[T]) -> T;

    /// Returns the loss and writes `∂ℓ/∂θ` and `∂ℓ/∂x` into the buffers.
    fn value_and_grads(
        &self,
        x: &[T],
        label: bool,
        theta: &[T],
        grad_theta: &mut [T],
        grad_x: &mut [T],
    ) -> T;
}

/// L2-regularized logistic (cross-entropy) loss, `h_θ(x) = σ(θᵀx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LossModel<T> {
    pub lambda: T,
}

impl<T: Scalar> LossModel<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(Error::Argument(format!(
                "regularization must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    /// `ŷ = 1{h_θ(x) ≥ 0.5}`; ties predict the positive class.
    pub fn predict(&self, x: &[T], theta: &[T]) -> bool {
        dot(theta, x) >= T::zero()
    }

    fn regularizer(&self, theta: &[T]) -> T {
        self.lambda * T::lit(0.5) * dot(theta, theta)
    }

    /// Cross-entropy of a score `s`, clamped as if `h` were kept in `[c, 1 − c]`.
    /// Returns `(loss, dloss/ds)`.
    fn cross_entropy(s: T, label: bool) -> (T, T) {
        let lo = -(-T::lit(PROB_CLAMP)).ln_1p();
        let hi = -T::lit(PROB_CLAMP).ln();
        // y = 1: −log σ(s) = softplus(−s); y = 0: −log(1 − σ(s)) = softplus(s)
        let t = if label { -s } else { s };
        let raw = t.max(T::zero()) + (-t.abs()).exp().ln_1p();
        let h = sigmoid(s);
        let y = if label { T::one() } else { T::zero() };
        if raw > hi {
            (hi, T::zero())
        } else if raw < lo {
            (lo, T::zero())
        } else {
            (raw, h - y)
        }
    }
}

impl<T: Scalar> Default for LossModel<T> {
    fn default() -> Self {
        Self { lambda: T::lit(1e-3) }
    }
}

pub fn sigmoid<T: Scalar>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> PerformativeLoss<T> for LossModel<T> {
    fn value(&self, x: &[T], label: bool, theta: &[T]) -> T {
        Self::cross_entropy(dot(theta, x), label).0 + self.regularizer(theta)
    }

    fn value_and_grads(
        &self,
        x: &[T],
        label: bool,
        theta: &[T],
        grad_theta: &mut [T],
        grad_x: &mut [T],
    ) -> T {
        let (ce, ds) = Self::cross_entropy(dot(theta, x), label);
        for ((g, &xi), &ti) in grad_theta.iter_mut().zip(x).zip(theta) {
            *g = ds * xi + self.lambda * ti;
        }
        for (g, &ti) in grad_x.iter_mut().zip(theta) {
            *g = ds * ti;
        }
        ce + self.regularizer(theta)
    }
}

/// Bilinear loss `ℓ(z; θ) = θᵀz` (label ignored), as in the Gaussian toy problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearLoss;

impl<T: Scalar> PerformativeLoss<T> for LinearLoss {
    fn value(&self, x: &[T], _label: bool, theta: &[T]) -> T {
        dot(theta, x)
    }

    fn value_and_grads(
        &self,
        x: &[T],
        _label: bool,
        theta: &[T],
        grad_theta: &mut [T],
        grad_x: &mut [T],
    ) -> T {
        grad_theta.copy_from_slice(x);
        grad_x.copy_from_slice(theta);
        dot(theta, x)
    }
}

/// Loss of a single sample at `θ`.
pub fn loss<T: Scalar, L: PerformativeLoss<T> + ?Sized>(model: &L, z: &Sample<T>, theta: &[T]) -> T {
    model.value(&z.features, z.label, theta)
}

/// Reusable buffers for evaluating `ℓ(T_θ(z); θ)` and its total derivative in `θ`.
#[derive(Debug, Clone)]
pub struct ComposedEval<T> {
    moved: Vec<T>,
    grad_x: Vec<T>,
    pub grad: Vec<T>,
}

impl<T: Scalar> ComposedEval<T> {
    pub fn new(feature_dim: usize, param_dim: usize) -> Self {
        Self {
            moved: Vec::with_capacity(feature_dim),
            grad_x: vec![T::zero(); feature_dim],
            grad: vec![T::zero(); param_dim],
        }
    }

    /// Value at the moved sample; total gradient lands in `self.grad`.
    pub fn eval<L: PerformativeLoss<T> + ?Sized>(
        &mut self,
        model: &L,
        z: &Sample<T>,
        theta: &[T],
        response: &ResponseMap<T>,
    ) -> T {
        response.apply_into(&z.features, theta, &mut self.moved);
        let v = model.value_and_grads(&self.moved, z.label, theta, &mut self.grad, &mut self.grad_x);
        response.add_jacobian_t(&self.grad_x, &mut self.grad);
        v
    }

    /// Value only.
    pub fn value<L: PerformativeLoss<T> + ?Sized>(
        &mut self,
        model: &L,
        z: &Sample<T>,
        theta: &[T],
        response: &ResponseMap<T>,
    ) -> T {
        response.apply_into(&z.features, theta, &mut self.moved);
        model.value(&self.moved, z.label, theta)
    }
}

/// `(ℓ(T_θ(z); θ), d/dθ ℓ(T_θ(z); θ))`, the gradient including the
/// response-map Jacobian term `J_θ(T_θ)ᵀ ∇ₓℓ`.
pub fn composed_loss_grad<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    z: &Sample<T>,
    theta: &[T],
    response: &ResponseMap<T>,
) -> Result<(T, Vec<T>)> {
    let p = match response {
        ResponseMap::LocationShift { a } => a.cols(),
        _ => z.dim(),
    };
    ensure_dim(p, theta.len())?;
    response.check_dims(z.dim(), p)?;
    let mut ev = ComposedEval::new(z.dim(), p);
    let v = ev.eval(model, z, theta, response);
    Ok((v, ev.grad))
}

/// Risk, accuracy and balanced error rate of a classifier on a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Metrics<T> {
    pub risk: T,
    pub accuracy: T,
    /// `None` when only one class is present.
    pub ber: Option<T>,
}

impl<T: Scalar> Metrics<T> {
    pub fn ber(&self) -> Result<T> {
        self.ber.ok_or(Error::BerUndefined)
    }
}

/// Weighted risk, accuracy (`ŷ = 1{h ≥ 0.5}`) and BER `½(FPR + FNR)`.
pub fn metrics<T: Scalar>(
    model: &LossModel<T>,
    dist: &EmpiricalDistribution<T>,
    theta: &[T],
) -> Result<Metrics<T>> {
    ensure_dim(dist.dim(), theta.len())?;
    let n = dist.len();
    let mut losses = Vec::with_capacity(n);
    let mut correct = Vec::with_capacity(n);
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    let mut false_pos = Vec::with_capacity(n);
    let mut false_neg = Vec::with_capacity(n);
    for (s, w) in dist.iter() {
        losses.push(w * model.value(&s.features, s.label, theta));
        let yhat = model.predict(&s.features, theta);
        let zero = T::zero();
        correct.push(if yhat == s.label { w } else { zero });
        pos.push(if s.label { w } else { zero });
        neg.push(if s.label { zero } else { w });
        false_pos.push(if yhat && !s.label { w } else { zero });
        false_neg.push(if !yhat && s.label { w } else { zero });
    }
    let (p, q) = (pairwise_sum(&pos), pairwise_sum(&neg));
    let ber = if p > T::zero() && q > T::zero() {
        Some(T::lit(0.5) * (pairwise_sum(&false_pos) / q + pairwise_sum(&false_neg) / p))
    } else {
        None
    };
    Ok(Metrics {
        risk: pairwise_sum(&losses),
        accuracy: pairwise_sum(&correct),
        ber,
    })
}
