//! Quantitative toolkit for trade execution analysis.
//!
//! The crate groups several related building blocks:
//!
//! - [`market_data`]: intraday volume/volatility profile estimation from
//!   daily slice records, ratio-of-means diagnostics, and venue
//!   fragmentation entropy.
//! - [`scheduler`]: optimal slicing of a parent order across intraday
//!   slices under spread, impact, signal, and risk terms, with closed-form
//!   and iterative solvers plus sensitivity ("greeks") reports.
//! - [`sor`]: smart order routing across venues by stochastic
//!   approximation of an expected-completion-time criterion.
//! - [`flashcrash`]: a deterministic feedback recursion modelling
//!   participation-driven volume amplification and its echo volume.
//! - [`bookpde`]: diffusion dynamics of a signed latent order-book density
//!   with flow reinjection at the trading price.
//! - [`hawkes`]: mutually exciting bid/ask event streams with diagnostics
//!   (time rescaling, cross-correlation, diffusivity) and a queue-driven
//!   price mapping.
//!
//! Monte Carlo batches run in parallel by default via the `parallel`
//! feature; disabling it yields a dependency-free sequential fallback with
//! bit-identical results (see [`par`]).

pub mod bookpde;
pub mod flashcrash;
pub mod hawkes;
pub mod market_data;
pub mod par;
pub mod rng;
pub mod scheduler;
pub mod simplex;
pub mod sor;
pub mod stats;
