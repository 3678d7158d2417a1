//! JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use perfdro_core::{CalObjective, DatasetSchema, SolveConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Strategic,
    Location,
    Fairness,
    Toy,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strategic => "strategic",
            Self::Location => "location",
            Self::Fairness => "fairness",
            Self::Toy => "toy",
        })
    }
}

/// Where the base data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSpec {
    /// Bundled credit-style generator: 9 features, the first 3 strategic.
    Synthetic {
        #[serde(default = "default_population")]
        n: usize,
        /// Defaults to the experiment seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
        #[serde(flatten)]
        schema: DatasetSchema,
    },
}

impl Default for DataSpec {
    fn default() -> Self {
        Self::Synthetic {
            n: default_population(),
            seed: None,
        }
    }
}

fn default_population() -> usize {
    14878
}

/// Settings of the radius and tilt selection procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSpec {
    /// Run post-fit calibration inside the strategic sweep.
    pub post_fit: bool,
    pub rho_bracket: (f64, f64),
    pub tol: f64,
    /// Misspecification range used by `calibrate --method post-fit`.
    pub eta: f64,
    /// True performativity of the calibration sample for `--method cal-set`.
    pub eps_cal: Option<f64>,
    /// Size of the calibration sample for `--method cal-set`.
    pub n_cal: usize,
    pub objective: CalObjective,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            post_fit: false,
            rho_bracket: (0.0, 2.0),
            tol: 1e-3,
            eta: 1.0,
            eps_cal: None,
            n_cal: 125,
            objective: CalObjective::Risk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FairnessSpec {
    pub dim: usize,
    pub gamma: f64,
    /// Training sample size; `n_train` of the experiment is ignored here.
    pub n: usize,
    pub n_cal: usize,
    pub n_eval: usize,
}

impl Default for FairnessSpec {
    fn default() -> Self {
        Self {
            dim: 10,
            gamma: 0.8,
            n: 12500,
            n_cal: 125,
            n_eval: 20000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToySpec {
    pub a1: f64,
    pub a0: f64,
    pub sigma2: f64,
    pub n_atoms: usize,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            a1: 1.0,
            a0: 1.0,
            sigma2: 1.0,
            n_atoms: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub eps_nominal: f64,
    pub eta_list: Vec<f64>,
    pub rho_list: Vec<f64>,
    pub alpha_list: Vec<f64>,
    /// Points in each `ε_true` grid.
    pub eps_true_points: usize,
    pub trials: usize,
    pub n_train: usize,
    pub seed: u64,
    pub lambda: f64,
    pub workers: Option<usize>,
    pub data: DataSpec,
    pub solver: SolveConfig,
    pub calibration: CalibrationSpec,
    pub fairness: FairnessSpec,
    pub toy: ToySpec,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Strategic,
            eps_nominal: 0.5,
            eta_list: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            rho_list: vec![0.0, 0.001, 0.0025, 0.005, 0.01],
            alpha_list: vec![0.0, 1.0, 2.0, 4.0, 8.0],
            eps_true_points: 21,
            trials: 10,
            n_train: 5000,
            seed: 0,
            lambda: 1e-3,
            workers: None,
            data: DataSpec::default(),
            solver: SolveConfig::default(),
            calibration: CalibrationSpec::default(),
            fairness: FairnessSpec::default(),
            toy: ToySpec::default(),
            output_dir: None,
        }
    }
}

/// Problems with a configuration file; the CLI maps these to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ExperimentConfig {
    /// Reads and validates a config. A relative CSV path is resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if let DataSpec::Csv { path: data, .. } = &mut cfg.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_train == 0 {
            return bad("n_train must be positive".into());
        }
        if self.eps_true_points == 0 {
            return bad("eps_true_points must be positive".into());
        }
        if !self.eps_nominal.is_finite() {
            return bad("eps_nominal must be finite".into());
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be finite and nonnegative, got {}", self.lambda));
        }
        let grid = |name: &str, xs: &[f64]| {
            if xs.is_empty() {
                return bad(format!("{name} must be nonempty"));
            }
            if xs.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return bad(format!("{name} entries must be finite and nonnegative"));
            }
            Ok(())
        };
        match self.experiment {
            ExperimentKind::Strategic => {
                grid("eta_list", &self.eta_list)?;
                grid("rho_list", &self.rho_list)?;
            }
            ExperimentKind::Location => {
                grid("eta_list", &self.eta_list)?;
                grid("alpha_list", &self.alpha_list)?;
            }
            ExperimentKind::Fairness => grid("alpha_list", &self.alpha_list)?,
            ExperimentKind::Toy => grid("rho_list", &self.rho_list)?,
        }
        if let Some(0) = self.workers {
            return bad("workers must be positive".into());
        }
        self.solver
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let (lo, hi) = self.calibration.rho_bracket;
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) || !(self.calibration.tol > 0.0) || self.calibration.n_cal == 0 {
            return bad("calibration bracket must satisfy 0 <= lo < hi and tol > 0".into());
        }
        let f = &self.fairness;
        if f.dim < 2 || f.n < 2 || f.n_cal < 2 || f.n_eval < 2 || !(f.gamma > 0.0 && f.gamma < 1.0) {
            return bad("fairness needs dim >= 2, sample sizes >= 2 and gamma in (0, 1)".into());
        }
        let t = &self.toy;
        if !(t.a1 > 0.0 && t.a0 > 0.0 && t.sigma2 > 0.0) || t.n_atoms == 0 {
            return bad("toy needs positive a1, a0, sigma2 and n_atoms".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"experiment": "toy"}"#).unwrap();
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.eps_true_points, 21);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn csv_data_spec_parses() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"data": {"source": "csv", "path": "d.csv", "feature_columns": ["a", "b"],
                "label_column": "y", "strategic_mask": [true, false]}}"#,
        )
        .unwrap();
        match cfg.data {
            DataSpec::Csv { schema, .. } => assert_eq!(schema.dim(), 2),
            _ => panic!("expected csv"),
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.rho_list.clear();
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
