//! Risk functionals evaluated on the loss profile of a pushforward distribution.

mod histogram;
mod kl;
mod phi;

pub use histogram::{loss_histogram, write_loss_histogram, HistogramBin};
pub use kl::{
    drpr, drpr_dual_objective, gaussian_kl_location, kl_between_weights, worst_case_weights,
    worst_case_weights_for_radius, DrprSolution,
};
pub use phi::{
    augmented_drpr, augmented_pr_objective, cressie_read_drpr, cressie_read_dual, profile_nu,
    AugmentedSolution, CressieReadSpec, PhiConjugate,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::EmpiricalDistribution;
use crate::distmap::DistributionMap;
use crate::error::{ensure_dim, Error, Result};
use crate::lossmodel::PerformativeLoss;
use crate::scalar::{pairwise_sum, weighted_logsumexp, weighted_mean, Scalar};

/// Per-atom losses `ℓ(Z; θ)` under `Z ~ 𝒟(θ)`, with the atom weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LossProfile<T> {
    losses: Vec<T>,
    weights: Vec<T>,
    theta: Vec<T>,
}

impl<T: Scalar> LossProfile<T> {
    pub fn new(losses: Vec<T>, weights: Vec<T>, theta: Vec<T>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::EmptyData("loss profile has no atoms".into()));
        }
        ensure_dim(losses.len(), weights.len())?;
        if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
            return Err(Error::Domain(format!("non-finite loss at atom {i}")));
        }
        // reuse the distribution's weight validation
        EmpiricalDistribution::check_weights(&weights)?;
        Ok(Self {
            losses,
            weights,
            theta,
        })
    }

    /// Uniform weights; `theta` left empty.
    pub fn uniform(losses: Vec<T>) -> Result<Self> {
        let n = losses.len();
        let w = if n == 0 {
            Vec::new()
        } else {
            vec![T::one() / T::from_count(n); n]
        };
        Self::new(losses, w, Vec::new())
    }

    pub fn losses(&self) -> &[T] {
        &self.losses
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    /// Largest and smallest loss over atoms with positive weight.
    pub fn loss_range(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for (&l, &w) in self.losses.iter().zip(&self.weights) {
            if w > T::zero() {
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
        (lo, hi)
    }

    /// Weighted variance of the losses.
    pub fn variance(&self) -> T {
        // centre on the smallest loss first so constant profiles give exactly 0
        let (lmin, _) = self.loss_range();
        let shifted: Vec<T> = self.losses.iter().map(|&l| l - lmin).collect();
        let m = lmin + weighted_mean(&shifted, &self.weights);
        let terms: Vec<T> = self
            .losses
            .iter()
            .zip(&self.weights)
            .map(|(&l, &w)| w * (l - m) * (l - m))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Losses of the pushforward `T_θ ♯ base` at `θ`, keeping the base weights.
pub fn loss_profile<T: Scalar, L: PerformativeLoss<T> + ?Sized>(
    model: &L,
    map: &DistributionMap<T>,
    theta: &[T],
) -> Result<LossProfile<T>> {
    map.check_theta(theta)?;
    let response = map.response();
    let losses: Vec<T> = map
        .base()
        .samples()
        .par_iter()
        .map_init(Vec::new, |buf, s| {
            response.apply_into(&s.features, theta, buf);
            model.value(buf, s.label, theta)
        })
        .collect();
    LossProfile::new(losses, map.base().weights().to_vec(), theta.to_vec())
}

/// `E[ℓ]`.
pub fn performative_risk<T: Scalar>(profile: &LossProfile<T>) -> T {
    weighted_mean(&profile.losses, &profile.weights)
}

/// `log E[e^{αℓ}]`, the quantity the tilted solvers work with.
pub fn log_tilted_risk<T: Scalar>(profile: &LossProfile<T>, alpha: T) -> Result<T> {
    if !alpha.is_finite() {
        return Err(Error::Argument(format!("tilt must be finite, got {alpha}")));
    }
    let scaled: Vec<T> = profile.losses.iter().map(|&l| alpha * l).collect();
    Ok(weighted_logsumexp(&scaled, &profile.weights))
}

/// `E[e^{αℓ}]`, evaluated through the log domain.
pub fn tilted_risk<T: Scalar>(profile: &LossProfile<T>, alpha: T) -> Result<T> {
    Ok(log_tilted_risk(profile, alpha)?.exp())
}

/// Leading terms of the excess-risk bounds. The remainder terms are not
/// estimated, so these are diagnostics rather than certified bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ExcessRiskBounds<T> {
    /// `√2 · B · √(sup KL)`
    pub po_bound: T,
    /// `√(ρ · Var ℓ)`, leading order in `ρ`
    pub drpo_bound: T,
}

pub fn excess_risk_bounds<T: Scalar>(
    profile_at_theta: &LossProfile<T>,
    rho: T,
    kl_sup_estimate: T,
    loss_bound_b: T,
) -> Result<ExcessRiskBounds<T>> {
    for (name, v) in [("rho", rho), ("kl_sup_estimate", kl_sup_estimate), ("loss_bound_B", loss_bound_b)] {
        if !(v >= T::zero()) || !v.is_finite() {
            return Err(Error::Argument(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    Ok(ExcessRiskBounds {
        po_bound: T::lit(2.0).sqrt() * loss_bound_b * kl_sup_estimate.sqrt(),
        drpo_bound: (rho * profile_at_theta.variance()).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Sample;
    use crate::distmap::ResponseMap;
    use crate::lossmodel::{loss, metrics, LossModel};

    fn small_base() -> EmpiricalDistribution<f64> {
        EmpiricalDistribution::uniform(vec![
            Sample::new(vec![1.0, 0.5, -0.2], true),
            Sample::new(vec![-0.4, 1.5, 0.7], false),
            Sample::new(vec![0.3, -1.0, 2.0], true),
        ])
        .unwrap()
    }

    #[test]
    fn identity_zero_theta_profile_is_log_two() {
        let map = DistributionMap::new(small_base(), ResponseMap::Identity).unwrap();
        let p = loss_profile(&LossModel::new(0.0).unwrap(), &map, &[0.0; 3]).unwrap();
        assert_eq!(p.len(), 3);
        for &l in p.losses() {
            assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        }
        assert_eq!(p.weights(), map.base().weights());
    }

    #[test]
    fn strategic_profile_matches_atomwise_losses() {
        let mask = vec![true, true, false];
        let map =
            DistributionMap::new(small_base(), ResponseMap::strategic(0.5, mask.clone())).unwrap();
        let m = LossModel::default();
        let th = [0.3, -0.8, 1.1];
        let p = loss_profile(&m, &map, &th).unwrap();
        for (s, &l) in map.base().samples().iter().zip(p.losses()) {
            let moved = crate::distmap::best_response(&s.features, &th, 0.5, &mask).unwrap();
            let direct = loss(&m, &Sample::new(moved, s.label), &th);
            assert!((l - direct).abs() <= 1e-15);
        }
        let pushed = crate::distmap::pushforward(&map, &th).unwrap();
        let r = metrics(&m, &pushed, &th).unwrap().risk;
        assert!((performative_risk(&p) - r).abs() < 1e-12);
    }

    #[test]
    fn pr_and_tpr_hand_values() {
        let p = LossProfile::uniform(vec![0.0, 1.0]).unwrap();
        assert_eq!(performative_risk(&p), 0.5);
        let e = std::f64::consts::E;
        assert!((tilted_risk(&p, 1.0).unwrap() - (1.0 + e) / 2.0).abs() < 1e-12);
        assert!((tilted_risk(&p, 1.0).unwrap() - 1.859141).abs() < 1e-6);
        assert_eq!(tilted_risk(&p, 0.0).unwrap(), 1.0);
        let c = LossProfile::uniform(vec![0.7; 4]).unwrap();
        assert!((tilted_risk(&c, 2.0).unwrap() - (1.4_f64).exp()).abs() < 1e-12);
        assert!((performative_risk(&c) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn tilted_risk_does_not_overflow_in_log_domain() {
        let p = LossProfile::uniform(vec![800.0_f64, 801.0]).unwrap();
        let lt = log_tilted_risk(&p, 1.0).unwrap();
        assert!(lt.is_finite() && lt > 800.0);
    }

    #[test]
    fn bounds_degenerate_cases() {
        let p = LossProfile::uniform(vec![0.0, 1.0]).unwrap();
        let b = excess_risk_bounds(&p, 0.0, 0.3, 2.0).unwrap();
        assert_eq!(b.drpo_bound, 0.0);
        let b = excess_risk_bounds(&p, 0.4, 0.0, 2.0).unwrap();
        assert_eq!(b.po_bound, 0.0);
        assert!((b.drpo_bound - (0.4_f64 * 0.25).sqrt()).abs() < 1e-15);
        let c = LossProfile::uniform(vec![3.0; 5]).unwrap();
        assert_eq!(excess_risk_bounds(&c, 9.0, 1.0, 1.0).unwrap().drpo_bound, 0.0);
        assert!(excess_risk_bounds(&p, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn profile_rejects_bad_input() {
        assert!(LossProfile::<f64>::uniform(vec![]).is_err());
        assert!(LossProfile::uniform(vec![f64::NAN]).is_err());
        assert!(LossProfile::new(vec![1.0, 2.0], vec![0.5, 0.6], vec![]).is_err());
    }
}
