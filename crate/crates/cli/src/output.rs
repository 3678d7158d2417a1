//! Sweep results and their CSV/SVG emission.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use perfdro_core::solvers::MuRhoRow;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;
use crate::svg::{LineChart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Po,
    Drpo,
    Tpo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Po => "po",
            Self::Drpo => "drpo",
            Self::Tpo => "tpo",
        })
    }
}

/// One evaluated cell of a sweep: a fitted parameter scored under one true map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub trial: usize,
    pub method: Method,
    /// `ρ` for robust fits, `α` for tilted fits, `0` for the baseline.
    pub tuning: f64,
    pub eta: f64,
    pub eps_true: f64,
    /// Values in the order of [`SweepResult::metric_names`]; `NaN` when undefined.
    pub metrics: Vec<f64>,
}

/// Worst case over the `ε_true` grid of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trial: usize,
    pub method: Method,
    pub tuning: f64,
    pub eta: f64,
    pub worst_pr: f64,
    pub pr_range: f64,
    /// `(worst(PO) − worst(θ)) / worst(PO) × 100`.
    pub rel_improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub trial: usize,
    pub eta: f64,
    pub selected: f64,
    pub criterion: f64,
    pub infeasible: bool,
    /// Minority/majority risk ratio of the selected fit on held-out data.
    pub heldout_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub method: Method,
    pub tuning: f64,
    pub message: String,
    pub divergence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: ExperimentKind,
    pub metric_names: Vec<String>,
    pub cells: Vec<Cell>,
    pub summaries: Vec<Summary>,
    pub calibration: Vec<CalibrationRow>,
    pub mu_rho: Vec<MuRhoRow<f64>>,
    pub failures: Vec<Failure>,
}

fn key_cmp(a: (&usize, &Method, &f64, &f64, &f64), b: (&usize, &Method, &f64, &f64, &f64)) -> Ordering {
    a.0.cmp(b.0)
        .then(a.1.cmp(b.1))
        .then(a.2.total_cmp(b.2))
        .then(a.3.total_cmp(b.3))
        .then(a.4.total_cmp(b.4))
}

impl SweepResult {
    pub fn new(experiment: ExperimentKind, metric_names: &[&str]) -> Self {
        Self {
            experiment,
            metric_names: metric_names.iter().map(|s| s.to_string()).collect(),
            cells: Vec::new(),
            summaries: Vec::new(),
            calibration: Vec::new(),
            mu_rho: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Puts every table in key order so emission does not depend on scheduling.
    pub fn sort(&mut self) {
        self.cells.sort_by(|a, b| {
            key_cmp(
                (&a.trial, &a.method, &a.tuning, &a.eta, &a.eps_true),
                (&b.trial, &b.method, &b.tuning, &b.eta, &b.eps_true),
            )
        });
        self.summaries.sort_by(|a, b| {
            key_cmp((&a.trial, &a.method, &a.tuning, &a.eta, &0.0), (&b.trial, &b.method, &b.tuning, &b.eta, &0.0))
        });
        self.calibration
            .sort_by(|a, b| a.trial.cmp(&b.trial).then(a.eta.total_cmp(&b.eta)));
        self.mu_rho.sort_by(|a, b| a.rho.total_cmp(&b.rho));
        self.failures
            .sort_by(|a, b| key_cmp((&a.trial, &a.method, &a.tuning, &0.0, &0.0), (&b.trial, &b.method, &b.tuning, &0.0, &0.0)));
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metric_names.iter().position(|m| m == name)
    }

    pub fn has_divergence(&self) -> bool {
        self.failures.iter().any(|f| f.divergence)
    }
}

/// Mean and standard error over trials of one `(method, tuning, η, ε_true)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub tuning: f64,
    pub eta: f64,
    pub eps_true: f64,
    pub count: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Sample mean and `s/√n` with the `n − 1` denominator; the error is `NaN` for one value.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct AggKey(Method, OrdF64, OrdF64, OrdF64);

struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn aggregate(result: &SweepResult) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<AggKey, Vec<&Cell>> = BTreeMap::new();
    for c in &result.cells {
        groups
            .entry(AggKey(c.method, OrdF64(c.tuning), OrdF64(c.eta), OrdF64(c.eps_true)))
            .or_default()
            .push(c);
    }
    groups
        .into_iter()
        .map(|(AggKey(method, tuning, eta, eps), cells)| {
            let (mean, stderr) = (0..result.metric_names.len())
                .map(|m| mean_stderr(&cells.iter().map(|c| c.metrics[m]).collect::<Vec<_>>()))
                .unzip();
            AggregateRow {
                method,
                tuning: tuning.0,
                eta: eta.0,
                eps_true: eps.0,
                count: cells.len(),
                mean,
                stderr,
            }
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), EmitError> {
    let csv_err = |source| EmitError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Writes `results.csv`, `aggregate.csv`, the optional side tables, and one SVG
/// chart per panel into `dir`. Returns the paths written, in order.
pub fn emit_outputs(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(dir).map_err(|source| EmitError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut sorted = result.clone();
    sorted.sort();
    let result = &sorted;
    let mut written = Vec::new();

    let mut header = strings(&["trial", "method", "tuning", "eta", "eps_true"]);
    header.extend(result.metric_names.iter().cloned());
    let rows: Vec<Vec<String>> = result
        .cells
        .iter()
        .map(|c| {
            let mut r = vec![c.trial.to_string(), c.method.to_string(), num(c.tuning), num(c.eta), num(c.eps_true)];
            r.extend(c.metrics.iter().map(|&v| num(v)));
            r
        })
        .collect();
    let path = dir.join("results.csv");
    write_table(&path, &header, &rows)?;
    written.push(path);

    let agg = aggregate(result);
    let mut header = strings(&["method", "tuning", "eta", "eps_true", "trials"]);
    for m in &result.metric_names {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_stderr"));
    }
    let rows: Vec<Vec<String>> = agg
        .iter()
        .map(|a| {
            let mut r = vec![a.method.to_string(), num(a.tuning), num(a.eta), num(a.eps_true), a.count.to_string()];
            for (m, s) in a.mean.iter().zip(&a.stderr) {
                r.push(num(*m));
                r.push(num(*s));
            }
            r
        })
        .collect();
    let path = dir.join("aggregate.csv");
    write_table(&path, &header, &rows)?;
    written.push(path);

    if !result.summaries.is_empty() {
        let rows: Vec<Vec<String>> = result
            .summaries
            .iter()
            .map(|s| {
                vec![
                    s.trial.to_string(),
                    s.method.to_string(),
                    num(s.tuning),
                    num(s.eta),
                    num(s.worst_pr),
                    num(s.pr_range),
                    num(s.rel_improvement),
                ]
            })
            .collect();
        let path = dir.join("summary.csv");
        write_table(
            &path,
            &strings(&["trial", "method", "tuning", "eta", "worst_pr", "pr_range", "rel_improvement_pct"]),
            &rows,
        )?;
        written.push(path);
    }
    if !result.calibration.is_empty() {
        let rows: Vec<Vec<String>> = result
            .calibration
            .iter()
            .map(|c| {
                vec![
                    c.trial.to_string(),
                    num(c.eta),
                    num(c.selected),
                    num(c.criterion),
                    c.infeasible.to_string(),
                    c.heldout_ratio.map_or(String::new(), num),
                ]
            })
            .collect();
        let path = dir.join("calibration.csv");
        write_table(
            &path,
            &strings(&["trial", "eta", "selected", "criterion", "infeasible", "heldout_ratio"]),
            &rows,
        )?;
        written.push(path);
    }
    if !result.mu_rho.is_empty() {
        let rows: Vec<Vec<String>> = result
            .mu_rho
            .iter()
            .map(|r| vec![num(r.rho), num(r.mu_star), num(r.alpha)])
            .collect();
        let path = dir.join("mu_rho.csv");
        write_table(&path, &strings(&["rho", "mu_star", "alpha"]), &rows)?;
        written.push(path);
    }
    if !result.failures.is_empty() {
        let rows: Vec<Vec<String>> = result
            .failures
            .iter()
            .map(|f| vec![f.trial.to_string(), f.method.to_string(), num(f.tuning), f.message.clone()])
            .collect();
        let path = dir.join("failures.csv");
        write_table(&path, &strings(&["trial", "method", "tuning", "message"]), &rows)?;
        written.push(path);
    }

    for (name, chart) in charts(result, &agg) {
        let path = dir.join(format!("{name}.svg"));
        fs::write(&path, chart.render()).map_err(|source| EmitError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

fn series_label(method: Method, tuning: f64, experiment: ExperimentKind) -> String {
    match (method, experiment) {
        (Method::Po, _) => "PO".into(),
        (Method::Drpo, _) => format!("DRPO rho={tuning}"),
        (Method::Tpo, _) => format!("TPO alpha={tuning}"),
    }
}

/// One chart per panel: risk against `ε_true` for each `η` in the misspecification
/// sweeps, risks against the tuning value otherwise.
fn charts(result: &SweepResult, agg: &[AggregateRow]) -> Vec<(String, LineChart)> {
    if agg.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    match result.experiment {
        ExperimentKind::Strategic | ExperimentKind::Location => {
            let Some(pr) = result.metric_index("pr_true") else {
                return out;
            };
            let mut etas: Vec<f64> = agg.iter().map(|a| a.eta).collect();
            etas.sort_by(f64::total_cmp);
            etas.dedup();
            for (k, &eta) in etas.iter().enumerate() {
                let mut series: BTreeMap<(Method, OrdF64), Series> = BTreeMap::new();
                for a in agg.iter().filter(|a| a.eta == eta) {
                    series
                        .entry((a.method, OrdF64(a.tuning)))
                        .or_insert_with(|| Series::new(series_label(a.method, a.tuning, result.experiment)))
                        .push(a.eps_true, a.mean[pr], a.stderr[pr]);
                }
                out.push((
                    format!("pr_true_eta{k}"),
                    LineChart {
                        title: format!("{} sweep, eta = {eta}", result.experiment),
                        x_label: "true performativity".into(),
                        y_label: "performative risk".into(),
                        series: series.into_values().collect(),
                    },
                ));
            }
        }
        ExperimentKind::Fairness => {
            let mut series = Vec::new();
            for name in ["pr_population", "pr_majority", "pr_minority"] {
                let Some(i) = result.metric_index(name) else { continue };
                let mut s = Series::new(name.trim_start_matches("pr_").to_string());
                for a in agg.iter().filter(|a| a.method != Method::Po) {
                    s.push(a.tuning, a.mean[i], a.stderr[i]);
                }
                series.push(s);
            }
            out.push((
                "fairness_risk".into(),
                LineChart {
                    title: "fairness sweep".into(),
                    x_label: "tilt alpha".into(),
                    y_label: "performative risk".into(),
                    series,
                },
            ));
        }
        ExperimentKind::Toy => {
            let mut series = Vec::new();
            for name in ["theta", "theta_closed"] {
                let Some(i) = result.metric_index(name) else { continue };
                let mut s = Series::new(name.to_string());
                for a in agg {
                    s.push(a.tuning, a.mean[i], a.stderr[i]);
                }
                series.push(s);
            }
            out.push((
                "toy_theta".into(),
                LineChart {
                    title: "toy problem".into(),
                    x_label: "radius rho".into(),
                    y_label: "theta".into(),
                    series,
                },
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_two_values() {
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        // sample sd = √2, so s/√2 = 1
        assert!((s - 1.0).abs() < 1e-15);
        assert!(mean_stderr(&[4.0]).1.is_nan());
    }

    #[test]
    fn empty_result_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let r = SweepResult::new(ExperimentKind::Strategic, &["pr_true"]);
        let files = emit_outputs(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(!files.iter().any(|p| p.extension().is_some_and(|e| e == "svg")));
    }
}
