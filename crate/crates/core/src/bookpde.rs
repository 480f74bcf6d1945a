//! Diffusion dynamics of a signed latent order-book density.
//!
//! The book is a signed density m(t, p) on a price grid: positive mass is
//! bid-side liquidity below the trading price p*, negative mass ask-side
//! liquidity above it, and p* is the unique zero crossing. Liquidity
//! diffuses (agents reassess their reservation prices), matched volume
//! flows through p* at the rate lambda = -(eps^2/2) d_p m, and that volume
//! is reinjected as a dipole at p* -/+ a (buyers re-enter below the price,
//! sellers above). A trend-following variant recenters the dipole at
//! p* + (p*(t) - p*(t - h)), chasing the recent price move.
//!
//! The stepper is explicit Euler with flux-free (Neumann) boundaries in
//! conservative form, so the total signed mass is conserved to rounding;
//! the dipole deposits cancel exactly by construction. An explicit scheme
//! is used because the source is state-dependent (lambda depends on the
//! current gradient at a moving p*), which would force inner iterations in
//! an implicit scheme; the stability bound (eps^2/2) dt/dp^2 <= 1/2 is
//! enforced at grid construction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BookError {
    #[error("price bounds must satisfy p_min < p_max, got [{0}, {1}]")]
    BadBounds(f64, f64),
    #[error("grid needs at least 16 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("time step violates the diffusion stability bound: (eps^2/2) dt/dp^2 = {0} > 0.5")]
    CflViolation(f64),
    #[error("reinjection offset must be at least one grid step (offset {offset}, dp {dp})")]
    OffsetTooSmall { offset: f64, dp: f64 },
    #[error("trend horizon must be positive and at least one time step")]
    BadHorizon(f64),
    #[error("density has {got} nodes, grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("density must be finite everywhere")]
    NonFiniteDensity,
    #[error("book is depleted: density does not change sign")]
    Depleted,
    #[error("book depleted after {step} steps")]
    DepletedAt { step: usize },
    #[error("density changes sign more than once; crossed books are outside the model")]
    CrossedBook,
    #[error("sign change too close to the grid boundary to evaluate the trading flow")]
    BoundaryCrossing,
}

/// Price grid and scheme constants for one simulation.
///
/// `diffusion` is the coefficient eps^2/2 of the parabolic equation;
/// `reinjection_offset` is the distance a at which consumed volume
/// re-enters the book on each side of the trading price.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BookGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub n_points: usize,
    pub dp: f64,
    pub dt: f64,
    pub diffusion: f64,
    pub reinjection_offset: f64,
}

impl BookGrid {
    /// Build a grid from the price bounds, node count, time step, noise
    /// scale eps, and reinjection offset, checking the stability bound.
    pub fn new(
        p_min: f64,
        p_max: f64,
        n_points: usize,
        dt: f64,
        eps: f64,
        reinjection_offset: f64,
    ) -> Result<Self, BookError> {
        let dp = (p_max - p_min) / (n_points.max(2) - 1) as f64;
        let grid = BookGrid {
            p_min,
            p_max,
            n_points,
            dp,
            dt,
            diffusion: eps * eps / 2.0,
            reinjection_offset,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), BookError> {
        if !(self.p_min < self.p_max) {
            return Err(BookError::BadBounds(self.p_min, self.p_max));
        }
        if self.n_points < 16 {
            return Err(BookError::TooFewNodes(self.n_points));
        }
        let courant = self.diffusion * self.dt / (self.dp * self.dp);
        if !(courant <= 0.5) {
            return Err(BookError::CflViolation(courant));
        }
        if !(self.reinjection_offset >= self.dp) {
            return Err(BookError::OffsetTooSmall {
                offset: self.reinjection_offset,
                dp: self.dp,
            });
        }
        Ok(())
    }

    /// Price of grid node i.
    pub fn price(&self, i: usize) -> f64 {
        self.p_min + i as f64 * self.dp
    }

    /// Index of the grid node nearest to `p`, clamped to the domain.
    pub fn nearest_node(&self, p: f64) -> usize {
        let i = ((p - self.p_min) / self.dp).round();
        (i.max(0.0) as usize).min(self.n_points - 1)
    }

    /// Signed mass integral of a density on this grid.
    pub fn mass(&self, density: &[f64]) -> f64 {
        density.iter().sum::<f64>() * self.dp
    }
}

/// Dipole recentring rule: when enabled, consumed volume is reinjected
/// around p*(t) + (p*(t) - p*(t - h)) instead of around p*(t), extrapolating
/// the price move over the last horizon h. Before time h the static
/// placement is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendFollowerSource {
    pub horizon: f64,
    pub enabled: bool,
}

impl TrendFollowerSource {
    /// A source with the trend term switched off (static dipole at p* -/+ a).
    pub fn disabled() -> Self {
        TrendFollowerSource {
            horizon: 1.0,
            enabled: false,
        }
    }

    pub fn validate(&self, grid: &BookGrid) -> Result<(), BookError> {
        if self.enabled && !(self.horizon > 0.0 && self.horizon >= grid.dt) {
            return Err(BookError::BadHorizon(self.horizon));
        }
        Ok(())
    }
}

/// Book density, trading price, and price history at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BookState {
    /// Signed density per node: positive = bid side, negative = ask side.
    pub density: Vec<f64>,
    /// Current zero crossing of the density.
    pub trading_price: f64,
    pub time: f64,
    /// p* after each step, starting with the initial value; used by the
    /// trend-following source to look up p*(t - h).
    pub price_history: Vec<f64>,
}

impl BookState {
    /// Validate a raw density against the grid and locate its zero crossing.
    pub fn new(density: Vec<f64>, grid: &BookGrid) -> Result<Self, BookError> {
        if density.len() != grid.n_points {
            return Err(BookError::LengthMismatch {
                expected: grid.n_points,
                got: density.len(),
            });
        }
        if density.iter().any(|m| !m.is_finite()) {
            return Err(BookError::NonFiniteDensity);
        }
        let trading_price = locate_price(&density, grid)?;
        Ok(BookState {
            density,
            trading_price,
            time: 0.0,
            price_history: vec![trading_price],
        })
    }
}

/// Indices of the last bid-side node (m > 0) and first ask-side node
/// (m < 0); errors if either side is missing or the sides interleave.
fn crossing_indices(density: &[f64]) -> Result<(usize, usize), BookError> {
    let last_bid = density.iter().rposition(|m| *m > 0.0);
    let first_ask = density.iter().position(|m| *m < 0.0);
    match (last_bid, first_ask) {
        (Some(ib), Some(ia)) if ib < ia => Ok((ib, ia)),
        (Some(_), Some(_)) => Err(BookError::CrossedBook),
        _ => Err(BookError::Depleted),
    }
}

/// Trading price: the zero crossing of the signed density, located by
/// linear interpolation between the innermost bid and ask nodes (midpoint
/// of the zero plateau if the crossing spans several exact-zero nodes).
pub fn locate_price(density: &[f64], grid: &BookGrid) -> Result<f64, BookError> {
    let (ib, ia) = crossing_indices(density)?;
    if ia == ib + 1 {
        let mb = density[ib];
        let ma = density[ia];
        Ok(grid.price(ib) + grid.dp * mb / (mb - ma))
    } else {
        Ok(0.5 * (grid.price(ib + 1) + grid.price(ia - 1)))
    }
}

/// Both one-sided estimates of the trading flow at p*.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowEstimate {
    /// -(eps^2/2) d_p m from the bid side of the crossing.
    pub bid: f64,
    /// -(eps^2/2) d_p m from the ask side of the crossing.
    pub ask: f64,
}

impl FlowEstimate {
    /// The flow value used by the stepper: mean of the two estimates.
    pub fn value(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    /// Relative discrepancy of the two estimates; on smooth books this is
    /// a pure discretization error and stays within 10%.
    pub fn discrepancy(&self) -> f64 {
        (self.bid - self.ask).abs() / self.bid.abs().max(self.ask.abs()).max(f64::MIN_POSITIVE)
    }
}

/// One-sided estimates of lambda(t) = -(eps^2/2) d_p m at the trading
/// price: the rate at which bid and ask volume meet and transact.
///
/// Each side uses the two innermost nodes of that side, so a locally
/// linear book yields the exact slope from both sides and a locally flat
/// book yields exactly zero.
pub fn trading_flow_estimates(
    state: &BookState,
    grid: &BookGrid,
) -> Result<FlowEstimate, BookError> {
    let (ib, ia) = crossing_indices(&state.density)?;
    if ib == 0 || ia == grid.n_points - 1 {
        return Err(BookError::BoundaryCrossing);
    }
    let m = &state.density;
    let slope_bid = (m[ib] - m[ib - 1]) / grid.dp;
    let slope_ask = (m[ia + 1] - m[ia]) / grid.dp;
    Ok(FlowEstimate {
        bid: -grid.diffusion * slope_bid,
        ask: -grid.diffusion * slope_ask,
    })
}

/// The trading flow lambda(t) >= 0 consumed at p* (mean of the two
/// one-sided estimates).
pub fn trading_flow(state: &BookState, grid: &BookGrid) -> Result<f64, BookError> {
    Ok(trading_flow_estimates(state, grid)?.value())
}

/// Dipole recentring shift p*(t) - p*(t - h), or 0 when the source is
/// static or the history is still shorter than the horizon.
fn reinjection_shift(state: &BookState, grid: &BookGrid, source: &TrendFollowerSource) -> f64 {
    if !source.enabled {
        return 0.0;
    }
    let lag = (source.horizon / grid.dt).round() as usize;
    let history = &state.price_history;
    if history.len() > lag {
        state.trading_price - history[history.len() - 1 - lag]
    } else {
        0.0
    }
}

/// Advance the book by one time step.
///
/// The flow lambda is evaluated on the incoming state, the density
/// diffuses one explicit Euler step with conservative Neumann boundaries,
/// and lambda dt of volume is reinjected at the node nearest
/// p* + shift - a (bid) and removed at the node nearest p* + shift + a
/// (ask), where shift is the trend-follower recentring (0 for the static
/// source). Passing `None` for the source disables consumption and
/// reinjection entirely, leaving pure diffusion.
pub fn step(
    state: BookState,
    grid: &BookGrid,
    source: Option<&TrendFollowerSource>,
) -> Result<BookState, BookError> {
    let flow = match source {
        Some(_) => Some(trading_flow(&state, grid)?),
        None => None,
    };

    let r = grid.diffusion * grid.dt / (grid.dp * grid.dp);
    let m = &state.density;
    let n = m.len();
    let mut next = vec![0.0; n];
    next[0] = m[0] + r * (m[1] - m[0]);
    for i in 1..n - 1 {
        next[i] = m[i] + r * (m[i + 1] - 2.0 * m[i] + m[i - 1]);
    }
    next[n - 1] = m[n - 1] + r * (m[n - 2] - m[n - 1]);

    if let (Some(lambda), Some(src)) = (flow, source) {
        let center = state.trading_price + reinjection_shift(&state, grid, src);
        let deposit = lambda * grid.dt / grid.dp;
        next[grid.nearest_node(center - grid.reinjection_offset)] += deposit;
        next[grid.nearest_node(center + grid.reinjection_offset)] -= deposit;
    }

    let trading_price = locate_price(&next, grid)?;
    let mut price_history = state.price_history;
    price_history.push(trading_price);
    Ok(BookState {
        density: next,
        trading_price,
        time: state.time + grid.dt,
        price_history,
    })
}

/// Iterate [`step`] `n_steps` times; returns the final state and the p*
/// trajectory (length n_steps + 1, starting at the initial price).
///
/// Depletion is reported with the index of the step that failed.
pub fn run_book(
    initial: BookState,
    grid: &BookGrid,
    source: Option<&TrendFollowerSource>,
    n_steps: usize,
) -> Result<(BookState, Vec<f64>), BookError> {
    grid.validate()?;
    if let Some(src) = source {
        src.validate(grid)?;
    }
    let mut state = initial;
    for step_index in 0..n_steps {
        state = step(state, grid, source).map_err(|e| match e {
            BookError::Depleted | BookError::BoundaryCrossing => {
                BookError::DepletedAt { step: step_index }
            }
            other => other,
        })?;
    }
    let path = state.price_history.clone();
    Ok((state, path))
}

/// Preset: linear book m(p) = -slope (p - center), exactly antisymmetric
/// about the center with constant gradient.
pub fn linear_book(grid: &BookGrid, center: f64, slope: f64) -> Vec<f64> {
    (0..grid.n_points)
        .map(|i| -slope * (grid.price(i) - center))
        .collect()
}

/// Preset: Gaussian flanks, a bid bump at center - flank_distance and an
/// ask dip at center + flank_distance, each with the given width and
/// amplitude. Antisymmetric about the center.
pub fn gaussian_flank_book(
    grid: &BookGrid,
    center: f64,
    flank_distance: f64,
    width: f64,
    amplitude: f64,
) -> Vec<f64> {
    let bump = |p: f64, mu: f64| (-((p - mu) * (p - mu)) / (2.0 * width * width)).exp();
    (0..grid.n_points)
        .map(|i| {
            let p = grid.price(i);
            amplitude * (bump(p, center - flank_distance) - bump(p, center + flank_distance))
        })
        .collect()
}
