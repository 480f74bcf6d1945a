//! Cost functionals of the three execution criteria.
//!
//! All three read the trajectory through `remaining[1..=N+1]`: x_n is the
//! position entering slice n and dx_n = x_n - x_{n+1} the volume traded in
//! slice n. The position entry `remaining[0]` only fixes the constant
//! S_0 v* term via v* = remaining[0].

use super::{ExecutionProblem, Trajectory};

fn check_lengths(traj: &Trajectory, problem: &ExecutionProblem) {
    assert_eq!(
        traj.n_slices(),
        problem.n_slices(),
        "trajectory has {} slices, problem has {}",
        traj.n_slices(),
        problem.n_slices()
    );
}

/// Conditioned expected cost:
/// S_0 v* + sum_n (a psi_n - E A_n) v_n + kappa sigma_n v_n^{gamma+1} / V_n^gamma.
///
/// Uses the conditioned point values sigma_n, V_n. For gamma = 1 the impact
/// term is the familiar kappa (sigma_n/V_n) v_n^2; other exponents apply
/// the power law to the unsigned volume.
pub fn expected_cost(traj: &Trajectory, problem: &ExecutionProblem) -> f64 {
    check_lengths(traj, problem);
    let impact = &problem.impact;
    let profile = &problem.profile;
    let remaining = traj.remaining();

    let mut cost = problem.initial_price * traj.total_quantity();
    for n in 0..problem.n_slices() {
        let volume = remaining[n + 1] - remaining[n + 2];
        let spread_and_signal =
            (impact.a * profile.half_spread[n] - problem.signal.mean[n]) * volume;
        let participation_cost = impact.kappa * profile.volatility[n]
            / profile.expected_volume[n].powf(impact.gamma)
            * volume.abs().powf(impact.gamma + 1.0);
        cost += spread_and_signal + participation_cost;
    }
    cost
}

/// Conditioned mean-variance cost:
/// S_0 v* + sum_n (a psi_n - E A_n) dx_n + (kappa sigma_n/V_n + lambda V A_n) dx_n^2
///          + lambda sigma_n^2 x_n^2.
///
/// # Panics
/// The formula is derived for a linear impact model; panics if
/// `impact.gamma != 1`.
pub fn mv_cost(traj: &Trajectory, problem: &ExecutionProblem) -> f64 {
    check_lengths(traj, problem);
    assert_eq!(
        problem.impact.gamma, 1.0,
        "mean-variance cost is defined for gamma = 1"
    );
    let impact = &problem.impact;
    let profile = &problem.profile;
    let lambda = problem.risk_aversion;
    let remaining = traj.remaining();

    let mut cost = problem.initial_price * traj.total_quantity();
    for n in 0..problem.n_slices() {
        let x = remaining[n + 1];
        let dx = remaining[n + 1] - remaining[n + 2];
        let linear = (impact.a * profile.half_spread[n] - problem.signal.mean[n]) * dx;
        let quadratic = (impact.kappa * profile.volatility[n] / profile.expected_volume[n]
            + lambda * problem.signal.variance[n])
            * dx
            * dx;
        let risk = lambda * profile.volatility[n] * profile.volatility[n] * x * x;
        cost += linear + quadratic + risk;
    }
    cost
}

/// Unconditioned (statistical) cost:
/// S_0 v* + sum_n (a E psi_n - E A_n) dx_n
///        + (kappa E(sigma_n/V_n) + lambda (a^2 V psi_n + V A_n + V eps)) dx_n^2
///        + lambda sigma_n^2 x_n^2
///        + lambda kappa^2 V(sigma_n/V_n) dx_n^4.
///
/// Ratio statistics come from `mean_ratio`/`var_ratio`, the spread variance
/// from `var_half_spread`; the risk term keeps the conditioned point value
/// sigma_n (the criterion does not split it into mean and variance parts).
///
/// # Panics
/// Panics if `impact.gamma != 1` (the unconditioned algebra assumes a
/// linear impact model).
pub fn statistical_cost(traj: &Trajectory, problem: &ExecutionProblem) -> f64 {
    check_lengths(traj, problem);
    assert_eq!(
        problem.impact.gamma, 1.0,
        "statistical cost is defined for gamma = 1"
    );
    let impact = &problem.impact;
    let profile = &problem.profile;
    let lambda = problem.risk_aversion;
    let remaining = traj.remaining();

    let mut cost = problem.initial_price * traj.total_quantity();
    for n in 0..problem.n_slices() {
        let x = remaining[n + 1];
        let dx = remaining[n + 1] - remaining[n + 2];
        let linear = (impact.a * profile.half_spread[n] - problem.signal.mean[n]) * dx;
        let quadratic = (impact.kappa * profile.mean_ratio[n]
            + lambda
                * (impact.a * impact.a * profile.var_half_spread[n]
                    + problem.signal.variance[n]
                    + impact.var_noise))
            * dx
            * dx;
        let risk = lambda * profile.volatility[n] * profile.volatility[n] * x * x;
        let quartic =
            lambda * impact.kappa * impact.kappa * profile.var_ratio[n] * dx * dx * dx * dx;
        cost += linear + quadratic + risk + quartic;
    }
    cost
}
