//! Hot-potato flash-crash volume recursion.
//!
//! A percentage-of-volume seller targets a participation rate rho of the
//! market volume it observes. Each slice of its own volume v_t triggers an
//! echo of intermediating market-maker volume (the hot potato), which
//! inflates the volume measure the algorithm reacts to in the next slice:
//!
//! ```text
//! v_{t+1} = (M v_t + Vbar/T) * rho / (1 - rho)
//! ```
//!
//! where M is the echo multiplier. The recursion is affine, so the path
//! either converges geometrically to a fixed point (growth factor
//! g = M rho/(1-rho) < 1) or explodes (g > 1).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrashError {
    #[error("daily volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("slice count must be at least 1")]
    NoSlices,
    #[error("participation must lie in (0,1), got {0}")]
    BadParticipation(f64),
    #[error("echo factor must be nonnegative, got {0}")]
    BadEchoFactor(f64),
    #[error("pass-through must lie in (0,1], got {0}")]
    BadPassThrough(f64),
}

/// Parameters of the crash recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashParams {
    /// Fundamental daily volume Vbar (shares) spread uniformly over slices.
    pub daily_volume: f64,
    /// Number of intraday slices T.
    pub n_slices: usize,
    /// Participation rate rho in (0,1) targeted by the selling algorithm.
    pub participation: f64,
    /// Optional distinct participation for slice 0 only; reproduces the
    /// narrative where the seller starts at one rate and then falls back to
    /// another after lagging its schedule.
    #[serde(default)]
    pub initial_participation: Option<f64>,
    /// Echo multiplier M: market-maker volume triggered per share of algo
    /// volume, fed back into the next slice's volume measure.
    pub echo_factor: f64,
    /// Fraction q of each hot-potato leg that is NOT re-hedged; only enters
    /// through [`echo_sum`]/[`echo_sum_limit`] when used to derive the
    /// multiplier, and is reported alongside the path.
    pub pass_through: f64,
}

impl CrashParams {
    pub fn validate(&self) -> Result<(), CrashError> {
        if !(self.daily_volume > 0.0) {
            return Err(CrashError::NonPositiveVolume(self.daily_volume));
        }
        if self.n_slices < 1 {
            return Err(CrashError::NoSlices);
        }
        for rho in std::iter::once(self.participation).chain(self.initial_participation) {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(CrashError::BadParticipation(rho));
            }
        }
        if !(self.echo_factor >= 0.0) {
            return Err(CrashError::BadEchoFactor(self.echo_factor));
        }
        if !(self.pass_through > 0.0 && self.pass_through <= 1.0) {
            return Err(CrashError::BadPassThrough(self.pass_through));
        }
        Ok(())
    }

    /// Growth factor g = M rho / (1 - rho) of the recursion.
    pub fn growth_factor(&self) -> f64 {
        self.echo_factor * self.participation / (1.0 - self.participation)
    }
}

/// Simulated per-slice volumes of a crash episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrashPath {
    /// Algo volume v_t per slice.
    pub algo_volume: Vec<f64>,
    /// Echo (hot-potato) volume M * v_t triggered by slice t.
    pub echo_volume: Vec<f64>,
    /// Total slice volume: fundamental flow Vbar/T plus algo volume plus
    /// the echo it triggers.
    pub total_volume: Vec<f64>,
    /// Growth factor g = M rho/(1-rho); the path explodes iff g > 1.
    pub growth_factor: f64,
    /// True when the recursion grows without bound (g > 1).
    pub explosive: bool,
    /// Fixed point (Vbar/T) (rho/(1-rho)) / (1 - g) when g < 1.
    pub fixed_point: Option<f64>,
}

/// Echo volume generated by a trade of `v` shares over `rounds` hot-potato
/// rounds: v * sum_{n=1..rounds} (1-q)^(2n).
///
/// Each round passes the inventory through two legs, each retaining a
/// fraction (1-q); q = 1 or zero rounds give no echo.
pub fn echo_volume(v: f64, q: f64, rounds: u32) -> f64 {
    let leg = (1.0 - q) * (1.0 - q);
    let mut factor = 0.0;
    let mut power = 1.0;
    for _ in 0..rounds {
        power *= leg;
        factor += power;
    }
    v * factor
}

/// Limit of the echo sum over infinitely many rounds,
/// (1-q)^2 / (1 - (1-q)^2) for q in (0,1].
///
/// Used to derive a default echo multiplier from the pass-through fraction
/// alone.
pub fn echo_sum_limit(q: f64) -> f64 {
    let leg = (1.0 - q) * (1.0 - q);
    leg / (1.0 - leg)
}

/// Iterate the crash recursion over `n_slices` slices.
///
/// Slice 0 seeds the path with v_0 = (Vbar/T) rho_0/(1-rho_0); subsequent
/// slices apply v_{t+1} = (M v_t + Vbar/T) rho/(1-rho). The reported path
/// also carries the growth factor, the explosive flag, and, in the
/// contracting regime, the fixed point the path converges to.
pub fn simulate_crash(params: &CrashParams) -> Result<CrashPath, CrashError> {
    params.validate()?;
    let slice_volume = params.daily_volume / params.n_slices as f64;
    let rho = params.participation;
    let rho0 = params.initial_participation.unwrap_or(rho);
    let rate = rho / (1.0 - rho);
    let growth = params.growth_factor();

    let mut algo = Vec::with_capacity(params.n_slices);
    algo.push(slice_volume * rho0 / (1.0 - rho0));
    for t in 1..params.n_slices {
        let prev = algo[t - 1];
        algo.push((params.echo_factor * prev + slice_volume) * rate);
    }

    let echo: Vec<f64> = algo.iter().map(|v| params.echo_factor * v).collect();
    let total: Vec<f64> = algo
        .iter()
        .zip(&echo)
        .map(|(v, e)| slice_volume + v + e)
        .collect();

    Ok(CrashPath {
        algo_volume: algo,
        echo_volume: echo,
        total_volume: total,
        growth_factor: growth,
        explosive: growth > 1.0,
        fixed_point: (growth < 1.0).then(|| slice_volume * rate / (1.0 - growth)),
    })
}
