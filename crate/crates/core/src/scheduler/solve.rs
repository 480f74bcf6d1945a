//! Criterion-specific solvers.
//!
//! All three minimize their cost functional over the interior positions
//! x_2..x_N with the endpoints pinned at x_1 = v* and x_{N+1} = 0 (the
//! parent order trades exactly inside the N slices). The expectation
//! criterion has a closed form; the mean-variance criterion is a
//! symmetric positive-definite tridiagonal linear system; the statistical
//! criterion adds a quartic term and is solved by damped Newton steps,
//! each of which is itself a tridiagonal solve.

use super::{ExecutionProblem, SchedulerError, Trajectory};

/// Impact weights w_n = (V_n/sigma_n) / sum_l (V_l/sigma_l).
///
/// The expectation-optimal schedule trades proportionally to these weights
/// when spread and signal are flat. Errors if any volatility vanishes.
pub fn impact_weights(
    profile: &crate::market_data::SlicedMarketProfile,
) -> Result<Vec<f64>, SchedulerError> {
    profile.validate()?;
    let mut weights = Vec::with_capacity(profile.n_slices());
    for (n, (volume, sigma)) in profile
        .expected_volume
        .iter()
        .zip(&profile.volatility)
        .enumerate()
    {
        if *sigma <= 0.0 {
            return Err(SchedulerError::ZeroVolatility(n));
        }
        weights.push(volume / sigma);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

fn require_linear_impact(problem: &ExecutionProblem) -> Result<(), SchedulerError> {
    if problem.impact.gamma != 1.0 {
        return Err(SchedulerError::GammaNotUnit(problem.impact.gamma));
    }
    Ok(())
}

/// Closed-form minimizer of [`super::expected_cost`] under sum(v) = v*.
///
/// The first-order conditions a psi_n - E A_n + 2 kappa (sigma_n/V_n) v_n =
/// const give
///
/// ```text
/// v_n = w_n [ v* + (G/2kappa) ((EA_n - <EA>_w) - a (psi_n - <psi>_w)) ]
/// ```
///
/// with G = sum_l V_l/sigma_l and <.>_w the w-weighted mean. Volumes may
/// come out negative; see [`super::solve_projected`] for the sign-
/// constrained variant.
pub fn solve_expectation(problem: &ExecutionProblem) -> Result<Trajectory, SchedulerError> {
    problem.validate()?;
    require_linear_impact(problem)?;
    let weights = impact_weights(&problem.profile)?;
    let inverse_ratio_sum: f64 = problem
        .profile
        .expected_volume
        .iter()
        .zip(&problem.profile.volatility)
        .map(|(v, s)| v / s)
        .sum();

    let a = problem.impact.a;
    let spread_mean: f64 = weights
        .iter()
        .zip(&problem.profile.half_spread)
        .map(|(w, psi)| w * psi)
        .sum();
    let signal_mean: f64 = weights
        .iter()
        .zip(&problem.signal.mean)
        .map(|(w, ea)| w * ea)
        .sum();

    let scale = inverse_ratio_sum / (2.0 * problem.impact.kappa);
    let volumes: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let signal_tilt = problem.signal.mean[n] - signal_mean;
            let spread_tilt = problem.profile.half_spread[n] - spread_mean;
            w * (problem.total_quantity + scale * (signal_tilt - a * spread_tilt))
        })
        .collect();
    Ok(Trajectory::from_volumes(&volumes))
}

/// Analytic sensitivities of the [`solve_expectation`] volumes:
/// (dv_n/dEA_n, dv_n/dpsi_n) for each slice.
///
/// From the closed form, dv_n/dEA_n = w_n (1 - w_n) G/(2 kappa) > 0 and
/// dv_n/dpsi_n = -a dv_n/dEA_n <= 0.
pub fn signal_sensitivities(
    problem: &ExecutionProblem,
) -> Result<(Vec<f64>, Vec<f64>), SchedulerError> {
    problem.validate()?;
    require_linear_impact(problem)?;
    let weights = impact_weights(&problem.profile)?;
    let inverse_ratio_sum: f64 = problem
        .profile
        .expected_volume
        .iter()
        .zip(&problem.profile.volatility)
        .map(|(v, s)| v / s)
        .sum();
    let scale = inverse_ratio_sum / (2.0 * problem.impact.kappa);

    let dv_dsignal: Vec<f64> = weights.iter().map(|w| w * (1.0 - w) * scale).collect();
    let dv_dspread: Vec<f64> = dv_dsignal.iter().map(|d| -problem.impact.a * d).collect();
    Ok((dv_dsignal, dv_dspread))
}

/// Solve the symmetric tridiagonal system A y = rhs by Thomas elimination.
///
/// `sub[i]` couples row i to row i-1 (sub[0] unused), `upper[i]` couples
/// row i to row i+1 (last entry unused).
fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, SchedulerError> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut pivot = diag[0];
    let scale = diag.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if pivot.abs() <= 1e-14 * scale.max(1.0) {
        return Err(SchedulerError::SingularSystem(0));
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..m {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.abs() <= 1e-14 * scale.max(1.0) {
            return Err(SchedulerError::SingularSystem(i));
        }
        if i < m - 1 {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    let mut y = d;
    for i in (0..m.saturating_sub(1)).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    Ok(y)
}

/// Per-slice coefficient view of a quadratic criterion
/// sum_n lin_n dx_n + quad_n dx_n^2 + risk_n x_n^2 (arrays 0-based on
/// slices 1..N).
struct QuadraticCoefficients {
    lin: Vec<f64>,
    quad: Vec<f64>,
    risk: Vec<f64>,
}

/// Minimize the quadratic criterion over x_2..x_N with x_1 = total and
/// x_{N+1} = 0; returns the full remaining path.
fn solve_quadratic_interior(
    coefficients: &QuadraticCoefficients,
    total: f64,
) -> Result<Vec<f64>, SchedulerError> {
    let n = coefficients.lin.len();
    let mut remaining = Vec::with_capacity(n + 2);
    remaining.push(total);
    remaining.push(total);
    if n == 1 {
        remaining.push(0.0);
        return Ok(remaining);
    }

    let m = n - 1;
    let quad = &coefficients.quad;
    let risk = &coefficients.risk;
    let lin = &coefficients.lin;
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        // Row i is the stationarity condition at slice n = i + 2.
        diag[i] = 2.0 * (quad[i] + quad[i + 1] + risk[i + 1]);
        if i > 0 {
            sub[i] = -2.0 * quad[i];
        }
        if i < m - 1 {
            upper[i] = -2.0 * quad[i + 1];
        }
        rhs[i] = -(lin[i + 1] - lin[i]);
    }
    rhs[0] += 2.0 * quad[0] * total;

    let interior = solve_tridiagonal(&sub, &diag, &upper, &rhs)?;
    remaining.extend(interior);
    remaining.push(0.0);
    Ok(remaining)
}

fn mv_coefficients(problem: &ExecutionProblem) -> QuadraticCoefficients {
    let n = problem.n_slices();
    let mut coefficients = QuadraticCoefficients {
        lin: Vec::with_capacity(n),
        quad: Vec::with_capacity(n),
        risk: Vec::with_capacity(n),
    };
    for i in 0..n {
        coefficients.lin.push(
            problem.impact.a * problem.profile.half_spread[i] - problem.signal.mean[i],
        );
        coefficients.quad.push(
            problem.impact.kappa * problem.profile.volatility[i]
                / problem.profile.expected_volume[i]
                + problem.risk_aversion * problem.signal.variance[i],
        );
        coefficients
            .risk
            .push(problem.risk_aversion * problem.profile.volatility[i].powi(2));
    }
    coefficients
}

/// Minimize [`super::mv_cost`]: one positive-definite tridiagonal solve.
///
/// Positive definiteness needs every dx^2 coefficient
/// kappa sigma_n/V_n + lambda V A_n to be strictly positive; degenerate
/// parameters are reported as infeasible.
pub fn solve_mv(problem: &ExecutionProblem) -> Result<Trajectory, SchedulerError> {
    problem.validate()?;
    require_linear_impact(problem)?;
    let coefficients = mv_coefficients(problem);
    for (slice, q) in coefficients.quad.iter().enumerate() {
        if !(*q > 0.0) {
            return Err(SchedulerError::IndefiniteSystem {
                slice,
                coefficient: *q,
            });
        }
    }
    let remaining = solve_quadratic_interior(&coefficients, problem.total_quantity)?;
    Trajectory::from_remaining(remaining)
}

/// Coefficients of the statistical criterion; the quartic weight is
/// lambda kappa^2 V(sigma_n/V_n).
struct QuarticObjective {
    base: QuadraticCoefficients,
    quart: Vec<f64>,
    total: f64,
}

impl QuarticObjective {
    fn positions(&self, interior: &[f64]) -> Vec<f64> {
        // p[j] = x_{j+1} for j = 0..N: entry position of each slice plus
        // the terminal zero.
        let mut p = Vec::with_capacity(interior.len() + 2);
        p.push(self.total);
        p.extend_from_slice(interior);
        p.push(0.0);
        p
    }

    fn value(&self, interior: &[f64]) -> f64 {
        let p = self.positions(interior);
        let mut f = 0.0;
        for j in 0..self.base.lin.len() {
            let dx = p[j] - p[j + 1];
            f += self.base.lin[j] * dx
                + self.base.quad[j] * dx * dx
                + self.quart[j] * dx * dx * dx * dx
                + self.base.risk[j] * p[j] * p[j];
        }
        f
    }

    fn gradient(&self, interior: &[f64]) -> Vec<f64> {
        let p = self.positions(interior);
        let marginal = |j: usize| {
            let dx = p[j] - p[j + 1];
            self.base.lin[j] + 2.0 * self.base.quad[j] * dx + 4.0 * self.quart[j] * dx * dx * dx
        };
        (0..interior.len())
            .map(|i| {
                // y[i] = p[i+1] closes slice i and opens slice i+1.
                -marginal(i) + marginal(i + 1) + 2.0 * self.base.risk[i + 1] * p[i + 1]
            })
            .collect()
    }

    fn hessian(&self, interior: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.positions(interior);
        let m = interior.len();
        let curvature = |j: usize| {
            let dx = p[j] - p[j + 1];
            2.0 * self.base.quad[j] + 12.0 * self.quart[j] * dx * dx
        };
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            diag[i] = curvature(i) + curvature(i + 1) + 2.0 * self.base.risk[i + 1];
            if i > 0 {
                sub[i] = -curvature(i);
            }
            if i < m - 1 {
                upper[i] = -curvature(i + 1);
            }
        }
        (sub, diag, upper)
    }
}

const NEWTON_ITERATION_CAP: usize = 10_000;

/// Minimize [`super::statistical_cost`] by damped Newton iteration.
///
/// The objective is convex (all even-power coefficients positive), so the
/// stationary point is the global minimum. Starts from the minimizer of
/// the quadratic part and stops when the gradient norm falls below
/// 1e-8 (1 + |objective|).
pub fn solve_statistical(problem: &ExecutionProblem) -> Result<Trajectory, SchedulerError> {
    problem.validate()?;
    require_linear_impact(problem)?;

    let n = problem.n_slices();
    let mut base = QuadraticCoefficients {
        lin: Vec::with_capacity(n),
        quad: Vec::with_capacity(n),
        risk: Vec::with_capacity(n),
    };
    let mut quart = Vec::with_capacity(n);
    let impact = &problem.impact;
    for i in 0..n {
        base.lin
            .push(impact.a * problem.profile.half_spread[i] - problem.signal.mean[i]);
        let quad = impact.kappa * problem.profile.mean_ratio[i]
            + problem.risk_aversion
                * (impact.a * impact.a * problem.profile.var_half_spread[i]
                    + problem.signal.variance[i]
                    + impact.var_noise);
        if !(quad > 0.0) {
            return Err(SchedulerError::NonPositiveQuadratic {
                slice: i,
                coefficient: quad,
            });
        }
        base.quad.push(quad);
        base.risk
            .push(problem.risk_aversion * problem.profile.volatility[i].powi(2));
        quart.push(
            problem.risk_aversion * impact.kappa * impact.kappa * problem.profile.var_ratio[i],
        );
    }

    if n == 1 {
        return Ok(Trajectory::from_volumes(&[problem.total_quantity]));
    }

    // Warm start at the minimizer of the quadratic part.
    let warm = solve_quadratic_interior(&base, problem.total_quantity)?;
    let mut interior = warm[2..warm.len() - 1].to_vec();

    let objective = QuarticObjective {
        base,
        quart,
        total: problem.total_quantity,
    };

    let finish = |interior: &[f64]| -> Result<Trajectory, SchedulerError> {
        let mut remaining = Vec::with_capacity(n + 2);
        remaining.push(problem.total_quantity);
        remaining.push(problem.total_quantity);
        remaining.extend_from_slice(interior);
        remaining.push(0.0);
        Trajectory::from_remaining(remaining)
    };

    let mut value = objective.value(&interior);
    let mut stagnant_steps = 0usize;
    for _ in 0..NEWTON_ITERATION_CAP {
        let gradient = objective.gradient(&interior);
        let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        let tolerance = 1e-8 * (1.0 + value.abs());
        if norm <= tolerance {
            return finish(&interior);
        }

        let (sub, diag, upper) = objective.hessian(&interior);
        let negative_gradient: Vec<f64> = gradient.iter().map(|g| -g).collect();
        let direction = solve_tridiagonal(&sub, &diag, &upper, &negative_gradient)?;
        let slope: f64 = gradient.iter().zip(&direction).map(|(g, d)| g * d).sum();

        // Backtracking line search (Armijo). Convexity guarantees the
        // Newton direction is a descent direction.
        let mut step = 1.0;
        let mut accepted = false;
        let previous = value;
        for _ in 0..60 {
            let candidate: Vec<f64> = interior
                .iter()
                .zip(&direction)
                .map(|(y, d)| y + step * d)
                .collect();
            let candidate_value = objective.value(&candidate);
            if candidate_value.is_finite() && candidate_value <= value + 1e-4 * step * slope {
                interior = candidate;
                value = candidate_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        // Once the objective decrease per step falls to the floating-point
        // noise of the objective itself, the gradient cannot be driven any
        // lower; accept the iterate if it is within a hundredfold of the
        // tight tolerance (still far below every downstream use), otherwise
        // report the residual.
        let noise_floor = 4.0 * f64::EPSILON * (1.0 + value.abs());
        if accepted && previous - value > noise_floor {
            stagnant_steps = 0;
            continue;
        }
        stagnant_steps += 1;
        if !accepted || stagnant_steps >= 3 {
            if norm <= 100.0 * tolerance {
                return finish(&interior);
            }
            return Err(SchedulerError::NonConvergence {
                iterations: NEWTON_ITERATION_CAP,
                residual: norm,
            });
        }
    }

    let residual = objective
        .gradient(&interior)
        .iter()
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    Err(SchedulerError::NonConvergence {
        iterations: NEWTON_ITERATION_CAP,
        residual,
    })
}
