//! Derivative-free-gradient numeric minimizer.
//!
//! Deliberately independent of the closed-form machinery in
//! [`super::solve`]: it sees the criterion only through a black-box cost
//! closure, estimates gradients by central finite differences, and runs a
//! Barzilai-Borwein gradient iteration with an Armijo backtracking
//! safeguard from several starting points. It is used as a cross-check
//! oracle for the dedicated solvers and to solve the sign-constrained
//! (no-selling) variant, where each step is projected back onto the
//! simplex of nonnegative volumes summing to the parent order.

use super::{criterion_cost, CriterionKind, ExecutionProblem, SchedulerError, Trajectory};
use crate::par::{map_collect, Parallelism};
use crate::rng::stream_rng;
use crate::simplex::project_simplex;
use rand::Rng;

/// Knobs for [`minimize_cost`].
#[derive(Clone, Debug)]
pub struct OracleOptions {
    /// Number of random restarts in addition to the deterministic
    /// uniform-schedule start.
    pub restarts: usize,
    /// Gradient-iteration cap per start.
    pub max_iters: usize,
    /// Seed for the random starts.
    pub seed: u64,
    /// If set, minimize over nonnegative per-slice volumes summing to the
    /// total (projected gradient); otherwise the interior positions are
    /// unconstrained.
    pub nonnegative: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            restarts: 10,
            max_iters: 600,
            seed: 0,
            nonnegative: false,
        }
    }
}

/// Minimize a black-box trajectory cost over schedules of `n_slices`
/// slices that buy `total` in all, returning the best trajectory and its
/// cost.
///
/// The search variables are the interior positions x_2..x_N (free mode)
/// or the per-slice volumes on the scaled simplex (nonnegative mode); the
/// endpoints x_1 = total and x_{N+1} = 0 are always pinned. Starts run in
/// parallel under the `parallel` feature; results are deterministic for a
/// fixed seed either way.
pub fn minimize_cost<F>(
    cost: F,
    n_slices: usize,
    total: f64,
    options: &OracleOptions,
) -> (Trajectory, f64)
where
    F: Fn(&Trajectory) -> f64 + Sync,
{
    assert!(n_slices >= 1, "need at least one slice");
    let nonnegative = options.nonnegative;

    let assemble = move |vars: &[f64]| -> Trajectory {
        if nonnegative {
            Trajectory::from_volumes(vars)
        } else {
            let mut remaining = Vec::with_capacity(n_slices + 2);
            remaining.push(total);
            remaining.push(total);
            remaining.extend_from_slice(vars);
            remaining.push(0.0);
            Trajectory { remaining }
        }
    };
    let eval = |vars: &[f64]| -> f64 {
        if vars.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let value = cost(&assemble(vars));
        if value.is_finite() {
            value
        } else {
            f64::INFINITY
        }
    };

    // One slice leaves nothing to optimize.
    if n_slices == 1 {
        let vars = if nonnegative {
            vec![total]
        } else {
            Vec::new()
        };
        let value = eval(&vars);
        return (assemble(&vars), value);
    }

    let dim = if nonnegative { n_slices } else { n_slices - 1 };
    let make_start = |start: usize| -> Vec<f64> {
        if start == 0 {
            // Deterministic start: the uniform schedule.
            return if nonnegative {
                vec![total / n_slices as f64; dim]
            } else {
                (0..dim)
                    .map(|i| total * (n_slices - 1 - i) as f64 / n_slices as f64)
                    .collect()
            };
        }
        let mut rng = stream_rng(options.seed, start as u64);
        if nonnegative {
            // Normalized exponentials: uniform over the volume simplex.
            let mut vars: Vec<f64> =
                (0..dim).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let sum: f64 = vars.iter().sum();
            vars.iter_mut().for_each(|v| *v *= total / sum);
            vars
        } else {
            (0..dim)
                .map(|_| total * rng.random_range(-0.25..1.25))
                .collect()
        }
    };

    let optimize = |mut vars: Vec<f64>| -> (f64, Vec<f64>) {
        let gradient = |vars: &[f64]| -> Vec<f64> {
            let mut scratch = vars.to_vec();
            (0..vars.len())
                .map(|i| {
                    let h = 1e-6 * (1.0 + vars[i].abs());
                    scratch[i] = vars[i] + h;
                    let up = eval(&scratch);
                    scratch[i] = vars[i] - h;
                    let down = eval(&scratch);
                    scratch[i] = vars[i];
                    (up - down) / (2.0 * h)
                })
                .collect()
        };

        let mut value = eval(&vars);
        let mut grad = gradient(&vars);
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for _ in 0..options.max_iters {
            let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if grad_norm <= 1e-11 * (1.0 + value.abs()) {
                break;
            }
            // Barzilai-Borwein step length from the previous pair, with a
            // conservative first step.
            let mut alpha = match &prev {
                Some((old_vars, old_grad)) => {
                    let mut ss = 0.0;
                    let mut sy = 0.0;
                    for i in 0..vars.len() {
                        let s = vars[i] - old_vars[i];
                        let y = grad[i] - old_grad[i];
                        ss += s * s;
                        sy += s * y;
                    }
                    if sy > 1e-300 {
                        (ss / sy).clamp(1e-12, 1e6)
                    } else {
                        1.0 / (1.0 + grad_norm)
                    }
                }
                None => 1.0 / (1.0 + grad_norm),
            };

            let mut accepted = false;
            for _ in 0..50 {
                let mut candidate: Vec<f64> = vars
                    .iter()
                    .zip(&grad)
                    .map(|(v, g)| v - alpha * g)
                    .collect();
                if nonnegative {
                    project_simplex(&mut candidate, total);
                }
                let candidate_value = eval(&candidate);
                // Armijo condition written against the realized step so it
                // also covers the projected case.
                let predicted: f64 = grad
                    .iter()
                    .zip(vars.iter().zip(&candidate))
                    .map(|(g, (v, c))| g * (v - c))
                    .sum();
                if candidate_value <= value - 1e-4 * predicted.max(0.0)
                    && candidate_value < f64::INFINITY
                    && candidate_value <= value
                {
                    let moved = vars
                        .iter()
                        .zip(&candidate)
                        .map(|(v, c)| (v - c).abs())
                        .fold(0.0f64, f64::max);
                    let new_grad = gradient(&candidate);
                    prev = Some((std::mem::replace(&mut vars, candidate), std::mem::replace(&mut grad, new_grad)));
                    value = candidate_value;
                    accepted = moved > 1e-13 * (1.0 + vars.iter().fold(0.0f64, |a, v| a.max(v.abs())));
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (value, vars)
    };

    let n_starts = options.restarts + 1;
    let runs = map_collect(Parallelism::Auto, n_starts, |start| {
        optimize(make_start(start))
    });
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 < runs[best].0 {
            best = i;
        }
    }
    let (value, vars) = &runs[best];
    (assemble(vars), *value)
}

/// Solve the chosen criterion under the no-selling constraint
/// (all per-slice volumes nonnegative) by projected gradient descent.
pub fn solve_projected(
    problem: &ExecutionProblem,
    kind: CriterionKind,
    seed: u64,
) -> Result<Trajectory, SchedulerError> {
    problem.validate()?;
    let options = OracleOptions {
        nonnegative: true,
        seed,
        ..OracleOptions::default()
    };
    let (trajectory, _) = minimize_cost(
        |t| criterion_cost(kind, t, problem),
        problem.n_slices(),
        problem.total_quantity,
        &options,
    );
    Ok(trajectory)
}
