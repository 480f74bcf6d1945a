//! Optimal slicing of a parent order across intraday time slices.
//!
//! A buy of v* shares is spread over N slices; trading v_n shares in
//! slice n costs spread (a psi_n), earns signal alpha (A_n), pays
//! temporary impact (power law in the participation rate), and carries
//! price risk on the remaining position. Three nested criteria are
//! supported:
//!
//! - **expectation** ([`expected_cost`]/[`solve_expectation`]): minimize
//!   the conditioned expected cost; closed-form weights proportional to
//!   V_n/sigma_n.
//! - **mean-variance** ([`mv_cost`]/[`solve_mv`]): add risk aversion
//!   lambda on conditioned variance; tridiagonal linear system.
//! - **statistical** ([`statistical_cost`]/[`solve_statistical`]):
//!   unconditioned version using the distribution of the market context
//!   (ratio statistics, spread variance, impact-model noise); adds a
//!   quartic term and is solved by a damped Newton iteration.
//!
//! [`greeks`] reports the sensitivities of the optimal statistical cost
//! to the half-spread, the impact coefficient, and the slice count.
//! [`minimize_cost`] is an independent derivative-free-gradient numeric
//! minimizer used both as a test oracle and for nonnegativity-projected
//! solves ([`solve_projected`]).

mod costs;
mod greeks;
mod numeric;
mod solve;

pub use costs::{expected_cost, mv_cost, statistical_cost};
pub use greeks::{greeks, Greeks};
pub use numeric::{minimize_cost, solve_projected, OracleOptions};
pub use solve::{
    impact_weights, signal_sensitivities, solve_expectation, solve_mv, solve_statistical,
};

use crate::market_data::{MarketDataError, SlicedMarketProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("total quantity must be positive, got {0}")]
    NonPositiveQuantity(f64),
    #[error("impact coefficient kappa must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("closed-form solvers require impact exponent gamma = 1, got {0}")]
    GammaNotUnit(f64),
    #[error("impact exponent gamma must be nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("impact noise variance must be nonnegative, got {0}")]
    NegativeNoise(f64),
    #[error("risk aversion must be nonnegative, got {0}")]
    NegativeRiskAversion(f64),
    #[error("volatility is zero in slice {0}; impact weights are undefined")]
    ZeroVolatility(usize),
    #[error("signal arrays have length {got}, expected {expected}")]
    SignalLengthMismatch { expected: usize, got: usize },
    #[error("signal variance must be nonnegative in slice {0}")]
    NegativeSignalVariance(usize),
    #[error("trajectory has {got} slices, problem has {expected}")]
    TrajectoryLengthMismatch { expected: usize, got: usize },
    #[error("remaining path must have at least 3 entries and end at 0")]
    BadTrajectory,
    #[error(
        "quadratic form is not positive definite (impact-plus-signal-variance \
         coefficient is {coefficient} in slice {slice}); parameters infeasible"
    )]
    IndefiniteSystem { slice: usize, coefficient: f64 },
    #[error("tridiagonal system is numerically singular at row {0}")]
    SingularSystem(usize),
    #[error("solver did not converge within {iterations} iterations (gradient norm {residual})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("statistical criterion needs strictly positive quadratic coefficients; slice {slice} has {coefficient}")]
    NonPositiveQuadratic { slice: usize, coefficient: f64 },
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
}

/// Temporary market-impact model: per-share cost
/// a psi_n + kappa sigma_n (v/V_n)^gamma plus an i.i.d. residual with
/// variance `var_noise`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactParams {
    /// Spread-cost coefficient (dimensionless multiple of the half-spread).
    pub a: f64,
    /// Impact coefficient kappa (price units per participation-rate unit).
    pub kappa: f64,
    /// Impact exponent; cost evaluators accept any gamma >= 0, closed-form
    /// solvers require gamma = 1.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Variance of the impact-model residual (price units squared).
    #[serde(default)]
    pub var_noise: f64,
}

fn default_gamma() -> f64 {
    1.0
}

impl ImpactParams {
    pub fn validate(&self) -> Result<(), SchedulerError> {
        if !(self.kappa > 0.0) {
            return Err(SchedulerError::NonPositiveKappa(self.kappa));
        }
        if !(self.gamma >= 0.0) {
            return Err(SchedulerError::NegativeGamma(self.gamma));
        }
        if !(self.var_noise >= 0.0) {
            return Err(SchedulerError::NegativeNoise(self.var_noise));
        }
        Ok(())
    }
}

/// Per-slice arbitrage signal: expected gain E A_n (price units) earned per
/// share traded in slice n, with variance V A_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArbitrageSignal {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl ArbitrageSignal {
    /// A zero signal over `n` slices.
    pub fn zero(n: usize) -> Self {
        ArbitrageSignal {
            mean: vec![0.0; n],
            variance: vec![0.0; n],
        }
    }
}

/// Full description of one execution problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionProblem {
    /// Shares to buy, v* > 0.
    pub total_quantity: f64,
    pub profile: SlicedMarketProfile,
    pub impact: ImpactParams,
    pub signal: ArbitrageSignal,
    /// Risk aversion lambda >= 0 weighting the cost variance.
    pub risk_aversion: f64,
    /// Reference price S_0; enters every criterion as the constant S_0 v*.
    pub initial_price: f64,
}

impl ExecutionProblem {
    pub fn n_slices(&self) -> usize {
        self.profile.n_slices()
    }

    pub fn validate(&self) -> Result<(), SchedulerError> {
        if !(self.total_quantity > 0.0) {
            return Err(SchedulerError::NonPositiveQuantity(self.total_quantity));
        }
        self.profile.validate()?;
        self.impact.validate()?;
        if !(self.risk_aversion >= 0.0) {
            return Err(SchedulerError::NegativeRiskAversion(self.risk_aversion));
        }
        let n = self.n_slices();
        if self.signal.mean.len() != n || self.signal.variance.len() != n {
            return Err(SchedulerError::SignalLengthMismatch {
                expected: n,
                got: self.signal.mean.len().max(self.signal.variance.len()),
            });
        }
        if let Some(slice) = self.signal.variance.iter().position(|v| *v < 0.0) {
            return Err(SchedulerError::NegativeSignalVariance(slice));
        }
        Ok(())
    }
}

/// Remaining-quantity path of an execution: remaining[0] is the position
/// before trading (v*), remaining[n] the position entering slice n, and
/// remaining[N+1] = 0.
///
/// The cost evaluators read remaining[1..=N+1] and accept any interior
/// values, so the quadratic/quartic structure of the criteria can be probed
/// point-wise; the solvers always return paths with
/// remaining[1] = remaining[0] (all trading happens inside the N slices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Trajectory {
    remaining: Vec<f64>,
}

impl Trajectory {
    /// Validated constructor from a raw remaining path of length N + 2
    /// ending exactly at 0.
    pub fn from_remaining(remaining: Vec<f64>) -> Result<Self, SchedulerError> {
        if remaining.len() < 3
            || remaining.iter().any(|x| !x.is_finite())
            || *remaining.last().unwrap() != 0.0
        {
            return Err(SchedulerError::BadTrajectory);
        }
        Ok(Trajectory { remaining })
    }

    /// Build a path that trades `volumes[n]` in slice n + 1 and nothing
    /// before slice 1; the terminal condition is exact by construction.
    pub fn from_volumes(volumes: &[f64]) -> Self {
        let n = volumes.len();
        assert!(n >= 1, "need at least one slice");
        let mut remaining = vec![0.0; n + 2];
        for i in (1..=n).rev() {
            remaining[i] = remaining[i + 1] + volumes[i - 1];
        }
        remaining[0] = remaining[1];
        Trajectory { remaining }
    }

    /// Number of trading slices N.
    pub fn n_slices(&self) -> usize {
        self.remaining.len() - 2
    }

    /// Total quantity v* = remaining[0].
    pub fn total_quantity(&self) -> f64 {
        self.remaining[0]
    }

    /// The raw remaining path, length N + 2.
    pub fn remaining(&self) -> &[f64] {
        &self.remaining
    }

    /// Per-slice traded volumes v_n = remaining[n] - remaining[n+1] for
    /// n = 1..N (length N).
    pub fn volumes(&self) -> Vec<f64> {
        (1..=self.n_slices())
            .map(|n| self.remaining[n] - self.remaining[n + 1])
            .collect()
    }
}

impl TryFrom<Vec<f64>> for Trajectory {
    type Error = SchedulerError;
    fn try_from(remaining: Vec<f64>) -> Result<Self, Self::Error> {
        Trajectory::from_remaining(remaining)
    }
}

impl From<Trajectory> for Vec<f64> {
    fn from(t: Trajectory) -> Vec<f64> {
        t.remaining
    }
}

/// Which execution criterion to cost or solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Expectation,
    MeanVariance,
    Statistical,
}

/// Evaluate the chosen criterion's cost functional.
pub fn criterion_cost(kind: CriterionKind, traj: &Trajectory, problem: &ExecutionProblem) -> f64 {
    match kind {
        CriterionKind::Expectation => expected_cost(traj, problem),
        CriterionKind::MeanVariance => mv_cost(traj, problem),
        CriterionKind::Statistical => statistical_cost(traj, problem),
    }
}

/// Solve the chosen criterion with its dedicated solver.
pub fn solve(kind: CriterionKind, problem: &ExecutionProblem) -> Result<Trajectory, SchedulerError> {
    match kind {
        CriterionKind::Expectation => solve_expectation(problem),
        CriterionKind::MeanVariance => solve_mv(problem),
        CriterionKind::Statistical => solve_statistical(problem),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trajectory_from_volumes_has_exact_boundaries() {
        let traj = Trajectory::from_volumes(&[0.3, 0.5, 0.2]);
        assert_eq!(traj.n_slices(), 3);
        assert_eq!(*traj.remaining().last().unwrap(), 0.0);
        assert_eq!(traj.remaining()[0], traj.remaining()[1]);
        assert_relative_eq!(traj.total_quantity(), 1.0, max_relative = 1e-15);
        let volumes = traj.volumes();
        assert_relative_eq!(volumes[0], 0.3);
        assert_relative_eq!(volumes[1], 0.5);
        assert_relative_eq!(volumes[2], 0.2);
    }

    #[test]
    fn trajectory_rejects_bad_paths() {
        assert!(Trajectory::from_remaining(vec![1.0, 0.0]).is_err());
        assert!(Trajectory::from_remaining(vec![1.0, 1.0, 0.5]).is_err());
        assert!(Trajectory::from_remaining(vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(Trajectory::from_remaining(vec![1.0, 0.5, 0.0]).is_ok());
    }

    #[test]
    fn problem_validation_catches_mismatches() {
        let mut problem = test_fixtures::flat_problem(3, 1.0);
        problem.validate().unwrap();
        problem.signal.mean.pop();
        assert!(matches!(
            problem.validate(),
            Err(SchedulerError::SignalLengthMismatch { .. })
        ));

        let mut bad_total = test_fixtures::flat_problem(2, 1.0);
        bad_total.total_quantity = 0.0;
        assert!(bad_total.validate().is_err());

        let mut bad_kappa = test_fixtures::flat_problem(2, 1.0);
        bad_kappa.impact.kappa = 0.0;
        assert!(bad_kappa.validate().is_err());
    }
}
