//! Scalar abstraction and the small numeric kernels shared by every module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the library is generic over. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Pairwise (cascade) summation. Fixed reduction order, so results are run-to-run identical.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Weighted mean `Σ wᵢ xᵢ` with pairwise reduction; weights are assumed normalized.
pub fn weighted_mean<T: Scalar>(values: &[T], weights: &[T]) -> T {
    let terms: Vec<T> = values.iter().zip(weights).map(|(&v, &w)| v * w).collect();
    pairwise_sum(&terms)
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `log Σ wᵢ exp(aᵢ)` computed with the maximum over positive-weight atoms factored out.
///
/// Atoms with zero weight do not participate, including in the choice of the shift.
pub fn weighted_logsumexp<T: Scalar>(values: &[T], weights: &[T]) -> T {
    let mut shift = T::neg_infinity();
    for (&v, &w) in values.iter().zip(weights) {
        if w > T::zero() && v > shift {
            shift = v;
        }
    }
    if shift == T::neg_infinity() {
        return T::neg_infinity();
    }
    let terms: Vec<T> = values
        .iter()
        .zip(weights)
        .map(|(&v, &w)| if w > T::zero() { w * (v - shift).exp() } else { T::zero() })
        .collect();
    shift + pairwise_sum(&terms).ln()
}

/// Single-pass accumulator for `log Σ wᵢ exp(aᵢ)` together with the
/// `exp`-weighted sum of gradient vectors. The running maximum is rescaled on
/// the fly, so no second pass over the atoms is needed.
#[derive(Debug, Clone)]
pub struct OnlineTilt<T> {
    max: T,
    sum: T,
    grad: Vec<T>,
}

impl<T: Scalar> OnlineTilt<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            max: T::neg_infinity(),
            sum: T::zero(),
            grad: vec![T::zero(); dim],
        }
    }

    /// Adds one atom with base weight `weight`, log-score `score` and gradient `grad`.
    pub fn push(&mut self, weight: T, score: T, grad: &[T]) {
        if weight <= T::zero() {
            return;
        }
        if score > self.max {
            let scale = (self.max - score).exp();
            self.sum *= scale;
            for g in &mut self.grad {
                *g *= scale;
            }
            self.max = score;
        }
        let w = weight * (score - self.max).exp();
        self.sum += w;
        for (acc, &g) in self.grad.iter_mut().zip(grad) {
            *acc += w * g;
        }
    }

    /// Folds another accumulator into this one.
    pub fn merge(&mut self, other: &Self) {
        if other.sum == T::zero() {
            return;
        }
        if other.max > self.max {
            let scale = (self.max - other.max).exp();
            self.sum *= scale;
            for g in &mut self.grad {
                *g *= scale;
            }
            self.max = other.max;
        }
        let scale = (other.max - self.max).exp();
        self.sum += other.sum * scale;
        for (acc, &g) in self.grad.iter_mut().zip(&other.grad) {
            *acc += g * scale;
        }
    }

    pub fn log_sum(&self) -> T {
        self.max + self.sum.ln()
    }

    /// Tilted-weighted mean of the pushed gradients.
    pub fn mean_grad(&self) -> Vec<T> {
        self.grad.iter().map(|&g| g / self.sum).collect()
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`.
///
/// Runs until the bracket is narrower than `xtol` (absolute) or `max_iter`
/// iterations pass. Returns `(argmin, min)`; the endpoints are evaluated too so
/// boundary minima are reported exactly.
pub fn golden_section<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    lo: T,
    hi: T,
    xtol: T,
    max_iter: usize,
) -> (T, T) {
    let r = T::lit(INV_PHI);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn logsumexp_ignores_zero_weight_atoms() {
        let v = [1000.0_f64, 0.0, 1.0];
        let w = [0.0, 0.5, 0.5];
        let expected = ((1.0 + 1.0_f64.exp()) / 2.0).ln();
        assert!((weighted_logsumexp(&v, &w) - expected).abs() < 1e-12);
    }

    #[test]
    fn online_tilt_agrees_with_two_pass() {
        let scores = [0.3_f64, 5.0, -2.0, 7.5, 7.4];
        let weights = [0.1, 0.2, 0.3, 0.2, 0.2];
        let grads = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0], [0.5, 0.5]];
        let mut acc = OnlineTilt::new(2);
        for i in 0..5 {
            acc.push(weights[i], scores[i], &grads[i]);
        }
        let lse = weighted_logsumexp(&scores, &weights);
        assert!((acc.log_sum() - lse).abs() < 1e-12);
        let q: Vec<f64> = (0..5).map(|i| weights[i] * (scores[i] - lse).exp()).collect();
        let g = acc.mean_grad();
        for k in 0..2 {
            let expected: f64 = (0..5).map(|i| q[i] * grads[i][k]).sum();
            assert!((g[k] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn merged_tilts_match_single_pass() {
        let scores = [0.3_f64, 5.0, -2.0, 7.5, 7.4, 1.0];
        let grads = [[1.0], [2.0], [3.0], [4.0], [5.0], [6.0]];
        let mut whole = OnlineTilt::new(1);
        let (mut left, mut right) = (OnlineTilt::new(1), OnlineTilt::new(1));
        for i in 0..6 {
            whole.push(1.0 / 6.0, scores[i], &grads[i]);
            let half = if i < 2 { &mut left } else { &mut right };
            half.push(1.0 / 6.0, scores[i], &grads[i]);
        }
        left.merge(&right);
        assert!((left.log_sum() - whole.log_sum()).abs() < 1e-12);
        assert!((left.mean_grad()[0] - whole.mean_grad()[0]).abs() < 1e-12);
        let mut empty = OnlineTilt::new(1);
        empty.merge(&whole);
        assert!((empty.log_sum() - whole.log_sum()).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        let (x, fx) = golden_section(|x: f64| (x - 1.3) * (x - 1.3) + 2.0, -5.0, 5.0, 1e-10, 500);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_reports_boundary_minimum() {
        let (x, _) = golden_section(|x: f64| x, 0.0, 1.0, 1e-12, 200);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let v = [0.0_f32, 1.0];
        let w = [0.5_f32, 0.5];
        let lse = weighted_logsumexp(&v, &w);
        assert!((lse - ((1.0 + 1.0_f32.exp()) / 2.0).ln()).abs() < 1e-6);
    }
}
