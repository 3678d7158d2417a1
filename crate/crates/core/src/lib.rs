//! Distributionally robust performative prediction.
//!
//! Data distributions depend on the deployed parameter through a response map
//! applied to a base sample (`𝒟(θ) = T_θ ♯ base`). On top of that the crate
//! evaluates and minimizes the performative risk, its KL and φ-divergence
//! robust versions, and the exponentially tilted risk, and calibrates the
//! robustness radius.
//!
//! Everything is generic over the floating-point type; the `*F64` aliases at
//! the crate root cover the common case.

pub mod analytic;
pub mod calibrate;
pub mod datamodel;
pub mod distmap;
pub mod error;
pub mod linalg;
pub mod lossmodel;
pub mod risk;
pub mod scalar;
pub mod solvers;

pub use calibrate::{
    calibration_set_select, four_fifth_select, post_fit_calibrate, post_fit_calibrate_with,
    CalObjective, CalibrationResult, MisspecScenario,
};
pub use datamodel::{
    bootstrap_resample, load_csv, moments, read_csv, DatasetSchema, EmpiricalDistribution, Sample,
};
pub use distmap::{
    best_response, mixture_pushforward, partial_identify, pushforward, DistributionMap, MixtureMap,
    ResponseMap,
};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use lossmodel::{composed_loss_grad, loss, metrics, LinearLoss, LossModel, Metrics, PerformativeLoss};
pub use risk::{
    drpr, drpr_dual_objective, loss_profile, performative_risk, tilted_risk, worst_case_weights,
    LossProfile,
};
pub use scalar::Scalar;
pub use solvers::{
    minimize_augpr, minimize_drpr, minimize_pr, minimize_tpr, mu_rho_correspondence, DualSolution,
    SolveConfig,
};

pub type SampleF64 = Sample<f64>;
pub type EmpiricalDistributionF64 = EmpiricalDistribution<f64>;
pub type DistributionMapF64 = DistributionMap<f64>;
pub type MixtureMapF64 = MixtureMap<f64>;
pub type ResponseMapF64 = ResponseMap<f64>;
pub type MatrixF64 = Matrix<f64>;
pub type LossModelF64 = LossModel<f64>;
pub type LossProfileF64 = LossProfile<f64>;
pub type DualSolutionF64 = DualSolution<f64>;
pub type CalibrationResultF64 = CalibrationResult<f64>;

pub type SampleF32 = Sample<f32>;
pub type EmpiricalDistributionF32 = EmpiricalDistribution<f32>;
pub type DistributionMapF32 = DistributionMap<f32>;
pub type LossModelF32 = LossModel<f32>;
pub type LossProfileF32 = LossProfile<f32>;
pub type DualSolutionF32 = DualSolution<f32>;
