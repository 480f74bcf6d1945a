//! Smart order routing across venues by stochastic approximation.
//!
//! K venues each carry a Poisson flow of liquidity-consuming events and a
//! resting queue ahead of our order. Splitting an order of size V with an
//! allocation key r sends r^k V to venue k, which finishes once the venue's
//! cumulative event flow has eaten the queue plus our slice. The routing
//! criterion is the expected time until the *last* venue finishes,
//!
//! ```text
//! C(r) = E max_k  dT^k(r^k V)
//! ```
//!
//! [`criterion`] estimates C(r) by Monte Carlo; [`learner_step`] performs
//! one step of the stochastic-approximation update that decreases C(r)
//! using only the identity of the last venue to finish and the size of its
//! completing event; [`run_sor`] iterates the learner over a generated
//! order flow. At a minimum of the criterion the per-venue means of
//! V·D^k·1{k*=k} balance, which [`balance_statistics`] measures.

use crate::par::{map_collect, Parallelism};
use crate::rng::{derive_seed, stream_rng};
use crate::simplex::project_simplex;
use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SorError {
    #[error("venue intensity must be positive, got {0}")]
    BadIntensity(f64),
    #[error("{0}")]
    BadLaw(String),
    #[error("allocation key must be nonnegative and sum to 1 (sum = {0})")]
    BadKey(f64),
    #[error("step schedule needs gamma0 > 0, got {0}")]
    BadGamma(f64),
    #[error("step exponent beta must lie in (0.5, 1], got {0}")]
    BadBeta(f64),
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("order flow must have strictly increasing times and positive sizes")]
    BadOrderFlow,
}

/// Law of the resting queue sampled ahead of our order at each arrival.
/// Queue values are nonnegative and may be zero.
///
/// The exponential law is the continuous choice: with it the first-passage
/// time depends smoothly on the slice size, so the routing criterion is a
/// smooth function of the allocation key (integer-valued queues make it
/// piecewise constant between lattice thresholds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QueueLaw {
    /// Always the same resting quantity.
    Constant { value: f64 },
    /// Geometric on {0, 1, 2, ...} with the given mean.
    Geometric { mean: f64 },
    /// Exponential on [0, inf) with the given mean (degenerate at 0 when
    /// the mean is 0).
    Exponential { mean: f64 },
}

impl QueueLaw {
    fn validate(&self) -> Result<(), SorError> {
        match self {
            QueueLaw::Constant { value } if !(*value >= 0.0) => Err(SorError::BadLaw(format!(
                "constant queue must be nonnegative, got {value}"
            ))),
            QueueLaw::Geometric { mean } if !(*mean >= 0.0) => Err(SorError::BadLaw(format!(
                "geometric queue mean must be nonnegative, got {mean}"
            ))),
            QueueLaw::Exponential { mean } if !(*mean >= 0.0) => Err(SorError::BadLaw(format!(
                "exponential queue mean must be nonnegative, got {mean}"
            ))),
            _ => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            QueueLaw::Constant { value } => *value,
            QueueLaw::Geometric { mean } => {
                let p = 1.0 / (1.0 + mean);
                Geometric::new(p).expect("validated p").sample(rng) as f64
            }
            QueueLaw::Exponential { mean } => {
                if *mean > 0.0 {
                    Exp::new(1.0 / mean).expect("validated rate").sample(rng)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Law of a strictly positive size (per-event consumption or order size).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SizeLaw {
    /// Always the same size.
    Constant { value: f64 },
    /// Shifted geometric on {1, 2, ...} with the given mean (>= 1).
    Geometric { mean: f64 },
}

impl SizeLaw {
    /// One share per event; the default venue event size.
    pub fn unit() -> Self {
        SizeLaw::Constant { value: 1.0 }
    }

    fn validate(&self) -> Result<(), SorError> {
        match self {
            SizeLaw::Constant { value } if !(*value > 0.0) => Err(SorError::BadLaw(format!(
                "constant size must be positive, got {value}"
            ))),
            SizeLaw::Geometric { mean } if !(*mean >= 1.0) => Err(SorError::BadLaw(format!(
                "geometric size mean must be at least 1, got {mean}"
            ))),
            _ => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            SizeLaw::Constant { value } => *value,
            SizeLaw::Geometric { mean } => {
                let p = (1.0 / mean).min(1.0);
                1.0 + Geometric::new(p).expect("validated p").sample(rng) as f64
            }
        }
    }
}

/// One trading venue: Poisson event intensity, queue law, event-size law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VenueSpec {
    /// Liquidity-consuming events per unit time.
    pub intensity: f64,
    /// Resting quantity ahead of our order, resampled per arrival.
    pub queue_law: QueueLaw,
    /// Shares consumed per event (defaults to 1).
    #[serde(default = "SizeLaw::unit")]
    pub event_size: SizeLaw,
}

impl VenueSpec {
    pub fn validate(&self) -> Result<(), SorError> {
        if !(self.intensity > 0.0) {
            return Err(SorError::BadIntensity(self.intensity));
        }
        self.queue_law.validate()?;
        self.event_size.validate()
    }
}

/// Simplex weights over K venues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AllocationKey(Vec<f64>);

impl AllocationKey {
    /// Validated constructor: nonnegative weights summing to 1 within 1e-9.
    pub fn new(weights: Vec<f64>) -> Result<Self, SorError> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SorError::BadKey(sum));
        }
        Ok(AllocationKey(weights))
    }

    /// Equal weight on each of `k` venues.
    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1);
        AllocationKey(vec![1.0 / k as f64; k])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for AllocationKey {
    type Error = SorError;
    fn try_from(weights: Vec<f64>) -> Result<Self, Self::Error> {
        AllocationKey::new(weights)
    }
}

impl From<AllocationKey> for Vec<f64> {
    fn from(key: AllocationKey) -> Vec<f64> {
        key.0
    }
}

/// A generated stream of order arrivals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFlow {
    /// Strictly increasing arrival times (unit-rate Poisson; the learner
    /// only consumes arrival order, not clock time).
    pub times: Vec<f64>,
    /// Strictly positive order sizes.
    pub sizes: Vec<f64>,
}

impl OrderFlow {
    /// Generate `n` arrivals with sizes drawn from `law`.
    pub fn generate(n: usize, law: &SizeLaw, seed: u64) -> Result<OrderFlow, SorError> {
        law.validate()?;
        let mut rng = stream_rng(seed, 0);
        let exp = Exp::new(1.0).expect("unit rate");
        let mut times = Vec::with_capacity(n);
        let mut sizes = Vec::with_capacity(n);
        let mut t = 0.0;
        for _ in 0..n {
            t += exp.sample(&mut rng);
            times.push(t);
            sizes.push(law.sample(&mut rng));
        }
        Ok(OrderFlow { times, sizes })
    }

    pub fn validate(&self) -> Result<(), SorError> {
        let increasing = self.times.windows(2).all(|w| w[1] > w[0]);
        let positive = self.sizes.iter().all(|s| *s > 0.0);
        if self.times.len() != self.sizes.len() || !increasing || !positive {
            return Err(SorError::BadOrderFlow);
        }
        Ok(())
    }
}

/// Step schedule and run length of the stochastic-approximation learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Step scale: gamma_n = gamma0 / n^beta.
    pub gamma0: f64,
    /// Step exponent, in (0.5, 1] so steps are square-summable but not
    /// summable.
    pub beta: f64,
    /// Number of order arrivals to process.
    pub iterations: usize,
    /// Master seed; order flow and per-iteration simulations derive from
    /// it.
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            gamma0: 0.1,
            beta: 1.0,
            iterations: 10_000,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), SorError> {
        if !(self.gamma0 > 0.0) {
            return Err(SorError::BadGamma(self.gamma0));
        }
        if !(self.beta > 0.5 && self.beta <= 1.0) {
            return Err(SorError::BadBeta(self.beta));
        }
        if self.iterations == 0 {
            return Err(SorError::NoIterations);
        }
        Ok(())
    }

    /// Step size at (1-based) iteration n.
    pub fn gamma(&self, n: usize) -> f64 {
        self.gamma0 / (n as f64).powf(self.beta)
    }
}

/// Outcome of waiting for one venue to consume a slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaitOutcome {
    /// Elapsed time until the first-passage condition held.
    pub elapsed: f64,
    /// Size of the event that completed the slice; 0 when nothing had to
    /// be consumed (zero queue and zero slice).
    pub completing_jump: f64,
}

/// First-passage time for a slice of `v` shares on one venue.
///
/// Samples the resting queue I, then draws Poisson events until the
/// cumulative consumed quantity reaches I + v. Returns the elapsed time and
/// the completing event's size. When I + v = 0 there is nothing to consume
/// and both outputs are 0.
pub fn simulate_waiting_time<R: Rng>(venue: &VenueSpec, v: f64, rng: &mut R) -> WaitOutcome {
    debug_assert!(v >= 0.0, "slice must be nonnegative");
    let queue = venue.queue_law.sample(rng);
    let need = queue + v;
    if need <= 0.0 {
        return WaitOutcome {
            elapsed: 0.0,
            completing_jump: 0.0,
        };
    }
    let exp = Exp::new(venue.intensity).expect("validated intensity");
    let mut elapsed = 0.0;
    let mut consumed = 0.0;
    loop {
        elapsed += exp.sample(rng);
        let size = venue.event_size.sample(rng);
        consumed += size;
        if consumed >= need {
            return WaitOutcome {
                elapsed,
                completing_jump: size,
            };
        }
    }
}

/// Monte Carlo estimate of the routing criterion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Estimate C(r) = E max_k dT^k(r^k V) over `samples` independent draws.
///
/// Each draw gets its own derived RNG stream, so the estimate is identical
/// whether the batch runs in parallel or sequentially.
pub fn criterion(
    key: &AllocationKey,
    venues: &[VenueSpec],
    order_size_law: &SizeLaw,
    samples: usize,
    seed: u64,
) -> Result<CriterionEstimate, SorError> {
    assert_eq!(key.len(), venues.len(), "key/venue count mismatch");
    assert!(samples >= 1);
    for venue in venues {
        venue.validate()?;
    }
    order_size_law.validate()?;

    let draws = map_collect(Parallelism::Auto, samples, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let order = order_size_law.sample(&mut rng);
        let mut worst = 0.0f64;
        for (r, venue) in key.weights().iter().zip(venues) {
            let outcome = simulate_waiting_time(venue, r * order, &mut rng);
            worst = worst.max(outcome.elapsed);
        }
        worst
    });
    Ok(CriterionEstimate {
        mean: crate::stats::mean(&draws),
        std_error: crate::stats::standard_error(&draws),
    })
}

/// One stochastic-approximation update of the allocation key.
///
/// Simulates all K venue executions of the split order, finds the slowest
/// venue k* (ties broken by lowest index), and applies
///
/// ```text
/// r^k <- r^k - gamma (V D^k 1{k*=k} - (1/K) sum_l V D^l 1{k*=l})
/// ```
///
/// with D^k the reciprocal of the completing event size. The increment is
/// mean-centered so it conserves the weight sum exactly; a Euclidean
/// simplex projection then restores nonnegativity if a weight went below
/// zero.
pub fn learner_step<R: Rng>(
    key: &AllocationKey,
    order_size: f64,
    venues: &[VenueSpec],
    gamma: f64,
    rng: &mut R,
) -> AllocationKey {
    assert_eq!(key.len(), venues.len(), "key/venue count mismatch");
    let k = key.len();

    let mut slowest = 0usize;
    let mut slowest_time = f64::NEG_INFINITY;
    let mut slowest_jump = 0.0;
    for (idx, (r, venue)) in key.weights().iter().zip(venues).enumerate() {
        let outcome = simulate_waiting_time(venue, r * order_size, rng);
        if outcome.elapsed > slowest_time {
            slowest = idx;
            slowest_time = outcome.elapsed;
            slowest_jump = outcome.completing_jump;
        }
    }

    let d_star = if slowest_jump > 0.0 {
        1.0 / slowest_jump
    } else {
        0.0
    };
    let pull = order_size * d_star;
    let mean_pull = pull / k as f64;

    let mut weights = key.weights().to_vec();
    for (idx, w) in weights.iter_mut().enumerate() {
        let own = if idx == slowest { pull } else { 0.0 };
        *w -= gamma * (own - mean_pull);
    }
    project_simplex(&mut weights, 1.0);
    AllocationKey(weights)
}

/// Full learner run: key path and tail-averaged final key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SorRun {
    /// Key after each iteration (iterations x K).
    pub path: Vec<Vec<f64>>,
    /// Average of the last 10% of the path (at least one entry).
    pub final_key: AllocationKey,
}

/// Iterate the learner over a generated order flow.
///
/// The key starts uniform. Iteration n (1-based) uses step size
/// gamma0/n^beta and its own derived RNG stream, so runs are reproducible
/// bit for bit for a given config.
pub fn run_sor(
    venues: &[VenueSpec],
    order_size_law: &SizeLaw,
    config: &LearnerConfig,
) -> Result<SorRun, SorError> {
    config.validate()?;
    for venue in venues {
        venue.validate()?;
    }
    let flow = OrderFlow::generate(
        config.iterations,
        order_size_law,
        derive_seed(config.seed, "sor/order-flow"),
    )?;
    let step_seed = derive_seed(config.seed, "sor/learner");

    let mut key = AllocationKey::uniform(venues.len());
    let mut path = Vec::with_capacity(config.iterations);
    for n in 1..=config.iterations {
        let mut rng = stream_rng(step_seed, n as u64);
        key = learner_step(&key, flow.sizes[n - 1], venues, config.gamma(n), &mut rng);
        path.push(key.weights().to_vec());
    }

    let tail = (config.iterations / 10).max(1);
    let k = venues.len();
    let mut final_weights = vec![0.0; k];
    for row in &path[path.len() - tail..] {
        for (acc, w) in final_weights.iter_mut().zip(row) {
            *acc += w;
        }
    }
    let sum: f64 = final_weights.iter().sum();
    final_weights.iter_mut().for_each(|w| *w /= sum);

    Ok(SorRun {
        path,
        final_key: AllocationKey(final_weights),
    })
}

/// Per-venue balance diagnostics at a fixed key.
///
/// At a minimum of the criterion, the means of V·D^k·1{k*=k} are equal
/// across venues; `max_pairwise_z` is the largest pairwise difference in
/// combined-standard-error units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceDiagnostics {
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub max_pairwise_z: f64,
}

/// Estimate the balance statistics over `draws` fresh order draws.
pub fn balance_statistics(
    key: &AllocationKey,
    venues: &[VenueSpec],
    order_size_law: &SizeLaw,
    draws: usize,
    seed: u64,
) -> Result<BalanceDiagnostics, SorError> {
    assert_eq!(key.len(), venues.len(), "key/venue count mismatch");
    assert!(draws >= 2);
    for venue in venues {
        venue.validate()?;
    }
    order_size_law.validate()?;
    let k = venues.len();

    let rows = map_collect(Parallelism::Auto, draws, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let order = order_size_law.sample(&mut rng);
        let mut slowest = 0usize;
        let mut slowest_time = f64::NEG_INFINITY;
        let mut slowest_jump = 0.0;
        for (idx, (r, venue)) in key.weights().iter().zip(venues).enumerate() {
            let outcome = simulate_waiting_time(venue, r * order, &mut rng);
            if outcome.elapsed > slowest_time {
                slowest = idx;
                slowest_time = outcome.elapsed;
                slowest_jump = outcome.completing_jump;
            }
        }
        let pull = if slowest_jump > 0.0 {
            order / slowest_jump
        } else {
            0.0
        };
        (slowest, pull)
    });

    let mut means = vec![0.0; k];
    let mut std_errors = vec![0.0; k];
    for venue in 0..k {
        let column: Vec<f64> = rows
            .iter()
            .map(|(star, pull)| if *star == venue { *pull } else { 0.0 })
            .collect();
        means[venue] = crate::stats::mean(&column);
        std_errors[venue] = crate::stats::standard_error(&column);
    }

    let mut max_z = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let se = (std_errors[i] * std_errors[i] + std_errors[j] * std_errors[j]).sqrt();
            if se > 0.0 {
                max_z = max_z.max((means[i] - means[j]).abs() / se);
            }
        }
    }
    Ok(BalanceDiagnostics {
        means,
        std_errors,
        max_pairwise_z: max_z,
    })
}
