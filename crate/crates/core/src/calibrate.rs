//! Choosing the robustness radius or tilt: post-fit bisection on the KL
//! criterion, calibration-set grid selection, and the four-fifth fairness rule.

use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::moments;
use crate::distmap::{pushforward, DistributionMap, MixtureMap, ResponseMap};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lossmodel::{metrics, LossModel};
use crate::risk::{gaussian_kl_location, loss_profile, performative_risk};
use crate::scalar::Scalar;
use crate::solvers::{minimize_drpr, SolveConfig};

/// Candidate true performativity levels and the nominal one the model was fit with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MisspecScenario<T> {
    eps_candidates: Vec<T>,
    eps_nominal: T,
}

impl<T: Scalar> MisspecScenario<T> {
    pub fn new(eps_candidates: Vec<T>, eps_nominal: T) -> Result<Self> {
        if eps_candidates.is_empty() {
            return Err(Error::Argument("scenario needs at least one candidate".into()));
        }
        if !eps_nominal.is_finite() || eps_candidates.iter().any(|e| !e.is_finite()) {
            return Err(Error::Argument("scenario values must be finite".into()));
        }
        Ok(Self {
            eps_candidates,
            eps_nominal,
        })
    }

    /// `count` evenly spaced values over `[ε₀ − ε₀η, ε₀ + ε₀η]`.
    pub fn symmetric(eps_nominal: T, eta: T, count: usize) -> Result<Self> {
        let half = eps_nominal.abs() * eta;
        Self::new(linspace(eps_nominal - half, eps_nominal + half, count), eps_nominal)
    }

    pub fn eps_candidates(&self) -> &[T] {
        &self.eps_candidates
    }

    pub fn eps_nominal(&self) -> T {
        self.eps_nominal
    }
}

/// `count` evenly spaced points from `a` to `b` inclusive (just `a` when `count == 1`).
pub fn linspace<T: Scalar>(a: T, b: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count)
            .map(|i| a + (b - a) * T::from_count(i) / T::from_count(count - 1))
            .collect(),
    }
}

/// How the selection was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Bisection,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CalibrationResult<T> {
    /// Selected radius or tilt.
    pub selected: T,
    pub achieved_criterion: T,
    /// `(candidate, criterion)` for every probe, in evaluation order.
    pub search_trace: Vec<(T, T)>,
    pub method: SearchMethod,
    /// Set when no candidate met the constraint and the fallback was used.
    pub infeasible: bool,
}

impl<T: Scalar> CalibrationResult<T> {
    /// Writes `candidate,criterion` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_writer(File::create(path).map_err(io)?);
        w.write_record(["candidate", "criterion"])?;
        for (c, v) in &self.search_trace {
            w.write_record([c.to_string(), v.to_string()])?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }
}

/// Direction matrix of the misspecification: the true map moves features by
/// `ε_true · D · θ` instead of `ε_nominal · D · θ`.
fn misspec_direction<T: Scalar>(map: &DistributionMap<T>) -> Result<Matrix<T>> {
    match map.response() {
        ResponseMap::StrategicLinear { mask, .. } => Ok(Matrix::from_diag(
            &mask.iter().map(|&m| if m { T::one() } else { T::zero() }).collect::<Vec<_>>(),
        )),
        ResponseMap::LocationShift { a } => Ok(a.clone()),
        ResponseMap::Identity => Err(Error::Argument(
            "post-fit calibration needs a strategic or location response map".into(),
        )),
    }
}

/// Largest plug-in KL over the scenario at a fixed `θ`.
pub fn max_scenario_kl<T: Scalar>(
    theta: &[T],
    direction: &Matrix<T>,
    scenario: &MisspecScenario<T>,
    sigma_hat: &Matrix<T>,
) -> Result<T> {
    let mut worst = T::zero();
    for &eps in &scenario.eps_candidates {
        worst = worst.max(gaussian_kl_location(theta, direction, eps, scenario.eps_nominal, sigma_hat)?);
    }
    Ok(worst)
}

/// Smallest `ρ` in the bracket with `g(ρ) ≤ 0` for a decreasing criterion `g`.
///
/// `g(hi)` is probed first and must be feasible. Bisection keeps `g(lo) > 0`
/// (or `lo` at the bracket end) and `g(hi) ≤ 0` until `hi − lo ≤ tol`, and
/// returns `hi`. If the probes show `g` increasing somewhere, the search
/// restarts on 32 log-spaced points over the bracket.
pub fn bisect_radius<T: Scalar, G: FnMut(T) -> Result<T>>(
    mut g: G,
    bracket: (T, T),
    tol: T,
) -> Result<CalibrationResult<T>> {
    let (mut lo, mut hi) = bracket;
    if !(lo >= T::zero()) || !(lo < hi) || !hi.is_finite() {
        return Err(Error::Bracket(format!("need 0 <= lo < hi, got ({lo}, {hi})")));
    }
    if !(tol > T::zero()) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let g_hi = g(hi)?;
    let mut trace = vec![(hi, g_hi)];
    if g_hi > T::zero() {
        return Err(Error::Bracket(format!(
            "upper end {hi} is infeasible (criterion {g_hi}); use a larger upper bound"
        )));
    }
    let mut best = (hi, g_hi);
    while hi - lo > tol {
        let mid = lo + (hi - lo) / T::lit(2.0);
        let gm = g(mid)?;
        trace.push((mid, gm));
        if gm <= T::zero() {
            hi = mid;
            best = (mid, gm);
        } else {
            lo = mid;
        }
    }
    if is_monotone(&trace) {
        return Ok(CalibrationResult {
            selected: best.0,
            achieved_criterion: best.1,
            search_trace: trace,
            method: SearchMethod::Bisection,
            infeasible: false,
        });
    }
    grid_radius(g, bracket, trace)
}

/// Whether the probed criterion is nonincreasing in the candidate.
fn is_monotone<T: Scalar>(trace: &[(T, T)]) -> bool {
    let mut sorted = trace.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    sorted.windows(2).all(|w| {
        let slack = T::lit(1e-9) * w[0].1.abs().max(w[1].1.abs()).max(T::one());
        w[1].1 <= w[0].1 + slack
    })
}

fn grid_radius<T: Scalar, G: FnMut(T) -> Result<T>>(
    mut g: G,
    (lo, hi): (T, T),
    mut trace: Vec<(T, T)>,
) -> Result<CalibrationResult<T>> {
    let start = if lo > T::zero() { lo } else { hi * T::lit(1e-4) };
    let mut grid: Vec<T> = linspace(start.ln(), hi.ln(), 32).into_iter().map(T::exp).collect();
    if lo == T::zero() {
        grid.insert(0, T::zero());
    }
    let mut chosen = None;
    for &r in &grid {
        let v = g(r)?;
        trace.push((r, v));
        if v <= T::zero() && chosen.is_none() {
            chosen = Some((r, v));
        }
    }
    let (selected, achieved_criterion) = chosen.ok_or_else(|| {
        Error::Bracket("no grid point satisfies the calibration criterion".into())
    })?;
    Ok(CalibrationResult {
        selected,
        achieved_criterion,
        search_trace: trace,
        method: SearchMethod::Grid,
        infeasible: false,
    })
}

/// Post-fit calibration with a caller-supplied fit `ρ ↦ θ(ρ)`.
///
/// The criterion is `g(ρ) = max_ε KL(ε; θ(ρ)) − ρ` with the Gaussian plug-in
/// KL, direction taken from the map, and `Σ̂` the base covariance.
pub fn post_fit_calibrate_with<T: Scalar, F: FnMut(T) -> Result<Vec<T>>>(
    mut fit: F,
    map: &DistributionMap<T>,
    scenario: &MisspecScenario<T>,
    rho_bracket: (T, T),
    tol: T,
) -> Result<CalibrationResult<T>> {
    let direction = misspec_direction(map)?;
    let (_, sigma_hat) = moments(map.base());
    bisect_radius(
        |rho| {
            let theta = fit(rho)?;
            Ok(max_scenario_kl(&theta, &direction, scenario, &sigma_hat)? - rho)
        },
        rho_bracket,
        tol,
    )
}

/// Post-fit calibration: each probe refits the robust solution at `ρ`,
/// warm-started from the previous probe's `θ`.
pub fn post_fit_calibrate<T: Scalar>(
    model: &LossModel<T>,
    map: &DistributionMap<T>,
    scenario: &MisspecScenario<T>,
    rho_bracket: (T, T),
    cfg: &SolveConfig,
    tol: T,
) -> Result<CalibrationResult<T>> {
    let mut warm = vec![T::zero(); map.param_dim()];
    post_fit_calibrate_with(
        |rho| {
            let sol = minimize_drpr(model, map, rho, cfg, &warm)?;
            warm.clone_from(&sol.theta);
            Ok(sol.theta)
        },
        map,
        scenario,
        rho_bracket,
        tol,
    )
}

/// Metric minimized on the calibration set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalObjective {
    #[default]
    Risk,
    Ber,
}

/// Picks the tuning value whose `θ` performs best on the calibration map's
/// pushforward at that `θ`. Ties go to the smaller tuning value.
pub fn calibration_set_select<T: Scalar>(
    candidates: &[(T, Vec<T>)],
    cal_map: &DistributionMap<T>,
    model: &LossModel<T>,
    objective: CalObjective,
) -> Result<CalibrationResult<T>> {
    if candidates.is_empty() {
        return Err(Error::Argument("no candidates to select from".into()));
    }
    let trace: Vec<(T, T)> = candidates
        .par_iter()
        .map(|(value, theta)| {
            let m = metrics(model, &pushforward(cal_map, theta)?, theta)?;
            let crit = match objective {
                CalObjective::Risk => m.risk,
                CalObjective::Ber => m.ber()?,
            };
            Ok((*value, crit))
        })
        .collect::<Result<_>>()?;
    let best = trace
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        })
        .expect("nonempty");
    Ok(CalibrationResult {
        selected: best.0,
        achieved_criterion: best.1,
        search_trace: trace,
        method: SearchMethod::Grid,
        infeasible: false,
    })
}

/// Minority risk may exceed majority risk by at most this factor.
pub const FOUR_FIFTH_RATIO: f64 = 1.25;

/// Subgroup risks of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GroupRisks<T> {
    pub majority: T,
    pub minority: T,
    pub population: T,
}

impl<T: Scalar> GroupRisks<T> {
    pub fn ratio(&self) -> T {
        self.minority / self.majority
    }

    pub fn satisfies_four_fifth(&self) -> bool {
        self.minority <= T::lit(FOUR_FIFTH_RATIO) * self.majority
    }
}

/// Performative risks of `θ` on the two subpopulations and on their mixture.
pub fn group_risks<T: Scalar>(
    model: &LossModel<T>,
    majority_map: &DistributionMap<T>,
    minority_map: &DistributionMap<T>,
    population_map: &MixtureMap<T>,
    theta: &[T],
) -> Result<GroupRisks<T>> {
    let majority = performative_risk(&loss_profile(model, majority_map, theta)?);
    let minority = performative_risk(&loss_profile(model, minority_map, theta)?);
    let mut population = T::zero();
    for (c, &g) in population_map.components().iter().zip(population_map.mixture_weights()) {
        population += g * performative_risk(&loss_profile(model, c, theta)?);
    }
    Ok(GroupRisks {
        majority,
        minority,
        population,
    })
}

/// Among tilts whose solution keeps the minority risk within 1.25× the majority
/// risk, returns the one with the smallest population risk. When none qualifies,
/// returns the tilt with the smallest minority/majority ratio and sets
/// `infeasible`. The trace holds `(α, population risk)`.
pub fn four_fifth_select<T: Scalar>(
    alpha_grid: &[T],
    solutions: &[Vec<T>],
    majority_map: &DistributionMap<T>,
    minority_map: &DistributionMap<T>,
    population_map: &MixtureMap<T>,
    model: &LossModel<T>,
) -> Result<CalibrationResult<T>> {
    if alpha_grid.is_empty() || alpha_grid.len() != solutions.len() {
        return Err(Error::Argument(format!(
            "need one solution per tilt: {} tilts, {} solutions",
            alpha_grid.len(),
            solutions.len()
        )));
    }
    let risks: Vec<GroupRisks<T>> = solutions
        .par_iter()
        .map(|th| group_risks(model, majority_map, minority_map, population_map, th))
        .collect::<Result<_>>()?;
    let trace: Vec<(T, T)> = alpha_grid.iter().zip(&risks).map(|(&a, r)| (a, r.population)).collect();
    let pick = |key: &dyn Fn(&GroupRisks<T>) -> T, filter: &dyn Fn(&GroupRisks<T>) -> bool| {
        alpha_grid
            .iter()
            .zip(&risks)
            .filter(|(_, r)| filter(r))
            .map(|(&a, r)| (a, key(r), *r))
            .reduce(|x, y| if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) { y } else { x })
    };
    if let Some((a, _, r)) = pick(&|r| r.population, &|r| r.satisfies_four_fifth()) {
        return Ok(CalibrationResult {
            selected: a,
            achieved_criterion: r.population,
            search_trace: trace,
            method: SearchMethod::Grid,
            infeasible: false,
        });
    }
    let (a, _, r) = pick(&|r| r.ratio(), &|_| true).expect("nonempty grid");
    Ok(CalibrationResult {
        selected: a,
        achieved_criterion: r.population,
        search_trace: trace,
        method: SearchMethod::Grid,
        infeasible: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{EmpiricalDistribution, Sample};

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
        let s = MisspecScenario::symmetric(0.5_f64, 0.6, 21).unwrap();
        assert!((s.eps_candidates()[0] - 0.2).abs() < 1e-15);
        assert!((s.eps_candidates()[20] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn bisection_finds_linear_crossing() {
        let r = bisect_radius(|rho: f64| Ok(0.3 - rho), (0.0, 1.0), 1e-4).unwrap();
        assert!(r.selected >= 0.3 && r.selected - 0.3 <= 1e-4);
        assert_eq!(r.method, SearchMethod::Bisection);
        let bound = (1.0_f64 / 1e-4).log2().ceil() as usize + 1;
        assert!(r.search_trace.len() <= bound);
        assert!(r.search_trace.iter().any(|&(c, _)| c == r.selected));
    }

    #[test]
    fn everywhere_feasible_goes_to_lower_end() {
        let r = bisect_radius(|rho: f64| Ok(-rho), (0.0, 2.0), 1e-3).unwrap();
        assert!(r.selected <= 1e-3);
    }

    #[test]
    fn infeasible_upper_end_is_bracket_error() {
        assert!(matches!(
            bisect_radius(|rho: f64| Ok(5.0 - rho), (0.0, 1.0), 1e-3),
            Err(Error::Bracket(_))
        ));
        assert!(bisect_radius(|rho: f64| Ok(-rho), (1.0, 0.5), 1e-3).is_err());
    }

    #[test]
    fn non_monotone_criterion_falls_back_to_grid() {
        // dips below zero on (0.2, 0.3), positive again until 0.7
        let g = |rho: f64| {
            Ok(if (0.2..0.3).contains(&rho) {
                -0.1
            } else if rho < 0.7 {
                0.5 - rho
            } else {
                -rho
            })
        };
        let r = bisect_radius(g, (0.0, 1.0), 1e-3).unwrap();
        assert_eq!(r.method, SearchMethod::Grid);
        assert!(g(r.selected).unwrap() <= 0.0);
    }

    fn tiny_map(eps: f64) -> DistributionMap<f64> {
        let base = EmpiricalDistribution::uniform(vec![
            Sample::new(vec![1.0, 0.0], true),
            Sample::new(vec![0.0, 1.0], false),
            Sample::new(vec![-1.0, 0.5], false),
            Sample::new(vec![0.3, -1.0], true),
        ])
        .unwrap();
        DistributionMap::new(base, ResponseMap::strategic(eps, vec![true, false])).unwrap()
    }

    #[test]
    fn frozen_theta_matches_closed_form() {
        let map = tiny_map(0.5);
        let theta = vec![0.8, -0.3];
        let scenario = MisspecScenario::new(vec![1.0], 0.5).unwrap();
        let (_, sigma) = moments(map.base());
        let b = Matrix::from_diag(&[1.0, 0.0]);
        let exact = gaussian_kl_location(&theta, &b, 1.0, 0.5, &sigma).unwrap();
        let tol = 1e-3;
        let r = post_fit_calibrate_with(|_| Ok(theta.clone()), &map, &scenario, (0.0, 10.0), tol)
            .unwrap();
        assert!(r.selected >= exact && r.selected - exact <= tol);
    }

    #[test]
    fn nominal_only_scenario_gives_lower_end() {
        let map = tiny_map(0.5);
        let scenario = MisspecScenario::new(vec![0.5], 0.5).unwrap();
        let r = post_fit_calibrate(
            &LossModel::default(),
            &map,
            &scenario,
            (0.0, 1.0),
            &SolveConfig::default(),
            0.05,
        )
        .unwrap();
        assert!(r.selected <= 0.05);
    }

    #[test]
    fn calibration_set_tie_and_dominance() {
        let map = tiny_map(0.0);
        let m = LossModel::default();
        let one = calibration_set_select(&[(0.3, vec![0.1, 0.1])], &map, &m, CalObjective::Risk).unwrap();
        assert_eq!(one.selected, 0.3);
        let good = vec![0.0, -2.0];
        let bad = vec![0.0, 2.0];
        let r = calibration_set_select(&[(0.1, bad.clone()), (0.2, good.clone())], &map, &m, CalObjective::Risk)
            .unwrap();
        assert_eq!(r.selected, 0.2);
        let tie = calibration_set_select(&[(0.5, good.clone()), (0.2, good)], &map, &m, CalObjective::Risk)
            .unwrap();
        assert_eq!(tie.selected, 0.2);
    }

    #[test]
    fn four_fifth_identical_groups() {
        let comp = tiny_map(0.5);
        let pop = MixtureMap::new(vec![comp.clone(), comp.clone()], vec![0.8, 0.2]).unwrap();
        let m = LossModel::default();
        let alphas = [0.0, 0.5, 1.0];
        let sols = vec![vec![0.0, -1.0], vec![0.0, -0.5], vec![0.0, 0.0]];
        let r = four_fifth_select(&alphas, &sols, &comp, &comp, &pop, &m).unwrap();
        assert!(!r.infeasible);
        let best = r
            .search_trace
            .iter()
            .fold(f64::INFINITY, |a, &(_, v)| a.min(v));
        assert_eq!(r.achieved_criterion, best);
    }
}
