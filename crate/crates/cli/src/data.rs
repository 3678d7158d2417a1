//! Seeded synthetic data: a credit-style strategic classification set and the
//! two-group Gaussian fairness set.

use perfdro_core::{EmpiricalDistribution, Result, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const CREDIT_DIM: usize = 9;
pub const CREDIT_STRATEGIC: usize = 3;

/// Ground-truth logistic coefficients of the credit generator.
const CREDIT_BETA: [f64; CREDIT_DIM] = [1.2, -0.9, 0.8, 0.6, -0.5, 0.4, 0.3, -0.25, 0.15];
/// Correlation between neighbouring features.
const CREDIT_RHO: f64 = 0.3;

pub fn credit_mask() -> Vec<bool> {
    (0..CREDIT_DIM).map(|j| j < CREDIT_STRATEGIC).collect()
}

/// `n` standardized, neighbour-correlated Gaussian feature vectors with labels
/// drawn from a logistic model. Classes are balanced in expectation.
pub fn gen_credit_data(n: usize, seed: u64) -> Result<EmpiricalDistribution<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (1.0 + CREDIT_RHO * CREDIT_RHO).sqrt();
    let samples = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..CREDIT_DIM).map(|_| rng.sample(StandardNormal)).collect();
            let x: Vec<f64> = (0..CREDIT_DIM)
                .map(|j| {
                    let prev = if j == 0 { z[CREDIT_DIM - 1] } else { z[j - 1] };
                    (z[j] + CREDIT_RHO * prev) * scale
                })
                .collect();
            let score: f64 = x.iter().zip(&CREDIT_BETA).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-score).exp());
            let label = rng.random::<f64>() < p;
            Sample::new(x, label)
        })
        .collect();
    EmpiricalDistribution::uniform(samples)
}

pub const FAIR_MEAN_MAJORITY: f64 = 1.0;
pub const FAIR_MEAN_MINORITY: f64 = 0.8;
pub const FAIR_VARIANCE: f64 = 0.1;

/// Pooled two-group sample with group membership.
#[derive(Debug, Clone)]
pub struct FairnessData {
    pub population: EmpiricalDistribution<f64>,
    pub is_majority: Vec<bool>,
    pub majority: EmpiricalDistribution<f64>,
    pub minority: EmpiricalDistribution<f64>,
}

impl FairnessData {
    pub fn majority_share(&self) -> f64 {
        self.majority.len() as f64 / self.population.len() as f64
    }
}

/// Draws `n` points from `γ·N(1·𝟙, 0.1 I) + (1 − γ)·N(0.8·𝟙, 0.1 I)` in
/// dimension `d`. Within each group the label is `1` exactly when the feature
/// sum exceeds the group mean's sum.
pub fn gen_fairness_data(d: usize, n: usize, gamma: f64, seed: u64) -> Result<FairnessData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = FAIR_VARIANCE.sqrt();
    let mut samples = Vec::with_capacity(n);
    let mut is_majority = Vec::with_capacity(n);
    for _ in 0..n {
        let major = rng.random::<f64>() < gamma;
        let mean = if major { FAIR_MEAN_MAJORITY } else { FAIR_MEAN_MINORITY };
        let x: Vec<f64> = (0..d)
            .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let label = x.iter().sum::<f64>() > mean * d as f64;
        samples.push(Sample::new(x, label));
        is_majority.push(major);
    }
    let population = EmpiricalDistribution::uniform(samples)?;
    let majority = population.filter(|i, _| is_majority[i])?;
    let minority = population.filter(|i, _| !is_majority[i])?;
    Ok(FairnessData {
        population,
        is_majority,
        majority,
        minority,
    })
}

/// Fairness strategic mask: the first `⌊d/2⌋` coordinates.
pub fn fairness_mask(d: usize) -> Vec<bool> {
    (0..d).map(|j| j < d / 2).collect()
}
