//! Loss histograms under the base and worst-case weights.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use super::LossProfile;
use crate::error::{ensure_dim, Error, Result};
use crate::scalar::Scalar;

/// One bin: its center and the mass the two weightings put in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub loss: f64,
    pub base_weight: f64,
    pub tilted_weight: f64,
}

/// Bins the losses into `bins` equal-width bins over their range.
pub fn loss_histogram<T: Scalar>(
    profile: &LossProfile<T>,
    tilted: &[T],
    bins: usize,
) -> Result<Vec<HistogramBin>> {
    ensure_dim(profile.len(), tilted.len())?;
    if bins == 0 {
        return Err(Error::Argument("histogram needs at least one bin".into()));
    }
    let losses = profile.losses();
    let lo = losses.iter().fold(f64::INFINITY, |m, l| m.min(l.as_f64()));
    let hi = losses.iter().fold(f64::NEG_INFINITY, |m, l| m.max(l.as_f64()));
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            loss: lo + (b as f64 + 0.5) * width,
            base_weight: 0.0,
            tilted_weight: 0.0,
        })
        .collect();
    for ((&l, &w), &q) in losses.iter().zip(profile.weights()).zip(tilted) {
        let b = (((l.as_f64() - lo) / width) as usize).min(bins - 1);
        out[b].base_weight += w.as_f64();
        out[b].tilted_weight += q.as_f64();
    }
    Ok(out)
}

/// Writes the histogram as CSV with columns `loss,base_weight,tilted_weight`.
pub fn write_loss_histogram(path: &Path, bins: &[HistogramBin]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    if bins.is_empty() {
        w.write_record(["loss", "base_weight", "tilted_weight"])?;
    }
    for b in bins {
        w.serialize(b)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}
