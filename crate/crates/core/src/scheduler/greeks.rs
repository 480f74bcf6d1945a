//! Sensitivities of the optimal statistical cost.
//!
//! With x* the minimizer of [`super::statistical_cost`], the envelope
//! theorem gives the derivative of the optimal value with respect to a
//! model parameter as the partial derivative of the cost at x* (the
//! indirect term through x* vanishes at the optimum, and the pinned
//! endpoints do not depend on the parameters):
//!
//! - per-slice half-spread: dC*/dpsi_l = a v*_l,
//! - impact coefficient: dC*/dkappa =
//!   sum_n E[rho_n] v*_n^2 + 2 lambda kappa Var[rho_n] v*_n^4
//!   (rho_n = sigma_n/V_n the volatility-to-volume ratio),
//!
//! where v*_n are the optimal per-slice volumes. The slice-count
//! sensitivity has no continuous parameter; it is reported as a forward
//! difference, re-solving with one extra slice that inherits the final
//! slice's statistics.

use super::{solve_statistical, statistical_cost, ExecutionProblem, SchedulerError};
use serde::{Deserialize, Serialize};

/// Sensitivities of the optimal statistical cost, keyed in serialized
/// form by the greek letters conventionally used for them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Greeks {
    /// dC*/dpsi_l per slice: marginal cost of a wider half-spread.
    #[serde(rename = "psi")]
    pub spread_sensitivity: Vec<f64>,
    /// dC*/dkappa: marginal cost of a stronger impact coefficient.
    #[serde(rename = "lambda")]
    pub impact_sensitivity: f64,
    /// C*(N+1) - C*(N) with the appended slice inheriting the final
    /// slice's statistics: the value of one more trading slice.
    #[serde(rename = "phi")]
    pub slice_count_sensitivity: f64,
}

/// Append one slice that duplicates the final slice's statistics.
fn with_extra_slice(problem: &ExecutionProblem) -> ExecutionProblem {
    let mut extended = problem.clone();
    let p = &mut extended.profile;
    for field in [
        &mut p.expected_volume,
        &mut p.volatility,
        &mut p.half_spread,
        &mut p.mean_ratio,
        &mut p.var_ratio,
        &mut p.var_half_spread,
    ] {
        field.push(*field.last().unwrap());
    }
    extended.signal.mean.push(*extended.signal.mean.last().unwrap());
    extended
        .signal
        .variance
        .push(*extended.signal.variance.last().unwrap());
    extended
}

/// Compute the [`Greeks`] of `problem` at the statistical optimum.
pub fn greeks(problem: &ExecutionProblem) -> Result<Greeks, SchedulerError> {
    let optimal = solve_statistical(problem)?;
    let volumes = optimal.volumes();

    let spread_sensitivity: Vec<f64> = volumes.iter().map(|v| problem.impact.a * v).collect();

    let kappa = problem.impact.kappa;
    let impact_sensitivity: f64 = volumes
        .iter()
        .enumerate()
        .map(|(n, v)| {
            problem.profile.mean_ratio[n] * v * v
                + 2.0 * problem.risk_aversion * kappa * problem.profile.var_ratio[n] * v.powi(4)
        })
        .sum();

    let extended = with_extra_slice(problem);
    let extended_value = statistical_cost(&solve_statistical(&extended)?, &extended);
    let base_value = statistical_cost(&optimal, problem);
    let slice_count_sensitivity = extended_value - base_value;

    Ok(Greeks {
        spread_sensitivity,
        impact_sensitivity,
        slice_count_sensitivity,
    })
}
