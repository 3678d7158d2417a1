//! Samples, weighted empirical distributions, CSV ingestion and resampling.

use std::fs::File;
use std::path::Path;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{pairwise_sum, Scalar};

/// One data point `z = (x, y)` with a binary label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub features: Vec<T>,
    pub label: bool,
}

impl<T: Scalar> Sample<T> {
    pub fn new(features: Vec<T>, label: bool) -> Self {
        Self { features, label }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    /// Label as `0` or `1` in the scalar type.
    pub fn y(&self) -> T {
        if self.label {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Finite weighted atom set standing in for a probability measure.
///
/// Invariants: nonempty, every sample has the same dimension, weights are
/// nonnegative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<T> {
    samples: Vec<Sample<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> EmpiricalDistribution<T> {
    pub fn new(samples: Vec<Sample<T>>, weights: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyData("distribution has no atoms".into()));
        }
        if samples.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: weights.len(),
            });
        }
        let d = samples[0].dim();
        for s in &samples {
            crate::error::ensure_dim(d, s.dim())?;
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("non-finite feature value".into()));
            }
        }
        Self::check_weights(&weights)?;
        Ok(Self { samples, weights })
    }

    /// Checks that `weights` is a probability vector: finite, nonnegative, summing to one.
    pub fn check_weights(weights: &[T]) -> Result<()> {
        if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::Argument("weights must be finite and nonnegative".into()));
        }
        let total = pairwise_sum(weights);
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        if (total - T::one()).abs() > tol {
            return Err(Error::Argument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Equal mass `1/n` on each sample.
    pub fn uniform(samples: Vec<Sample<T>>) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::EmptyData("distribution has no atoms".into()));
        }
        let w = T::one() / T::from_count(n);
        Self::new(samples, vec![w; n])
    }

    /// Renormalizes arbitrary nonnegative weights before construction.
    pub fn from_unnormalized(samples: Vec<Sample<T>>, weights: Vec<T>) -> Result<Self> {
        let total = pairwise_sum(&weights);
        if !(total > T::zero()) {
            return Err(Error::Argument("weights must have positive total".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::new(samples, weights)
    }

    pub(crate) fn from_parts_unchecked(samples: Vec<Sample<T>>, weights: Vec<T>) -> Self {
        Self { samples, weights }
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sample<T>, T)> + '_ {
        self.samples.iter().zip(self.weights.iter().copied())
    }

    /// Keeps the atoms for which `keep` is true and renormalizes.
    pub fn filter<F: Fn(usize, &Sample<T>) -> bool>(&self, keep: F) -> Result<Self> {
        let (samples, weights): (Vec<_>, Vec<_>) = self
            .iter()
            .enumerate()
            .filter(|(i, (s, _))| keep(*i, s))
            .map(|(_, (s, w))| (s.clone(), w))
            .unzip();
        if samples.is_empty() {
            return Err(Error::EmptyData("filter removed every atom".into()));
        }
        Self::from_unnormalized(samples, weights)
    }

    /// Appends a constant `1` feature to every sample (intercept column).
    pub fn with_intercept(&self) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let mut f = s.features.clone();
                f.push(T::one());
                Sample::new(f, s.label)
            })
            .collect();
        Self {
            samples,
            weights: self.weights.clone(),
        }
    }

    /// Total weight carried by label-1 atoms.
    pub fn positive_mass(&self) -> T {
        let w: Vec<T> = self
            .iter()
            .map(|(s, w)| if s.label { w } else { T::zero() })
            .collect();
        pairwise_sum(&w)
    }
}

/// Column layout of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub feature_columns: Vec<String>,
    pub label_column: String,
    /// `true` for features that respond strategically; same length as `feature_columns`.
    pub strategic_mask: Vec<bool>,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::Schema("at least one feature column is required".into()));
        }
        if self.strategic_mask.len() != self.feature_columns.len() {
            return Err(Error::Schema(format!(
                "strategic_mask has length {}, expected {}",
                self.strategic_mask.len(),
                self.feature_columns.len()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.feature_columns.len()
    }
}

/// Reads a headered, comma-separated file into a uniform-weight distribution.
///
/// Labels must parse to `0` or `1`; NaN and infinite cells are rejected.
pub fn load_csv<T: Scalar>(path: &Path, schema: &DatasetSchema) -> Result<EmpiricalDistribution<T>> {
    schema.validate()?;
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<T: Scalar, R: std::io::Read>(
    reader: R,
    schema: &DatasetSchema,
) -> Result<EmpiricalDistribution<T>> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let feature_idx = schema
        .feature_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = find(&schema.label_column)?;

    let mut samples = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut features = Vec::with_capacity(feature_idx.len());
        for (&idx, name) in feature_idx.iter().zip(&schema.feature_columns) {
            features.push(parse_cell::<T>(record.get(idx), row, name)?);
        }
        let label = match record.get(label_idx).map(str::trim) {
            Some("1") | Some("1.0") => true,
            Some("0") | Some("0.0") => false,
            other => {
                return Err(Error::Parse {
                    row,
                    column: schema.label_column.clone(),
                    message: format!("label must be 0 or 1, got {:?}", other.unwrap_or("")),
                })
            }
        };
        samples.push(Sample::new(features, label));
    }
    if samples.is_empty() {
        return Err(Error::EmptyData("csv file has no data rows".into()));
    }
    EmpiricalDistribution::uniform(samples)
}

fn parse_cell<T: Scalar>(cell: Option<&str>, row: usize, column: &str) -> Result<T> {
    let text = cell.unwrap_or("").trim();
    let parse_err = |message: String| Error::Parse {
        row,
        column: column.to_string(),
        message,
    };
    let v: f64 = text
        .parse()
        .map_err(|_| parse_err(format!("not a number: {text:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(format!("non-finite value {text:?}")));
    }
    Ok(T::lit(v))
}

/// Draws `n` atoms i.i.d. with probabilities equal to the weights; the result is uniform.
pub fn bootstrap_resample<T: Scalar>(
    dist: &EmpiricalDistribution<T>,
    n: usize,
    seed: u64,
) -> Result<EmpiricalDistribution<T>> {
    if n == 0 {
        return Err(Error::Argument("bootstrap sample size must be positive".into()));
    }
    let probs: Vec<f64> = dist.weights.iter().map(|w| w.as_f64()).collect();
    let index = WeightedIndex::new(&probs)
        .map_err(|e| Error::Argument(format!("invalid sampling weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| dist.samples[index.sample(&mut rng)].clone())
        .collect();
    EmpiricalDistribution::uniform(samples)
}

/// Weighted mean and weighted covariance (normalized by the unit total weight).
pub fn moments<T: Scalar>(dist: &EmpiricalDistribution<T>) -> (Vec<T>, Matrix<T>) {
    let d = dist.dim();
    let mean: Vec<T> = (0..d)
        .map(|j| {
            let terms: Vec<T> = dist.iter().map(|(s, w)| w * s.features[j]).collect();
            pairwise_sum(&terms)
        })
        .collect();
    let mut cov = Matrix::zeros(d, d);
    let mut terms = Vec::with_capacity(dist.len());
    for i in 0..d {
        for j in i..d {
            terms.clear();
            terms.extend(
                dist.iter()
                    .map(|(s, w)| w * (s.features[i] - mean[i]) * (s.features[j] - mean[j])),
            );
            let c = pairwise_sum(&terms);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    (mean, cov)
}
