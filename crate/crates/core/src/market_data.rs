//! Intraday profile estimation and fragmentation analytics.
//!
//! Raw observations arrive as one [`ProfileSample`] per trading day, each
//! carrying per-slice volume, volatility, and half-spread. From two or more
//! days, [`estimate_profile`] builds the [`SlicedMarketProfile`] consumed
//! by the scheduler: per-slice means plus the ratio statistics
//! E(sigma/V) and Var(sigma/V). The expectation of the ratio and the ratio
//! of expectations differ in general — [`ratio_gap`] measures exactly that
//! difference, which is nonnegative when volatility and volume are
//! independent.
//!
//! [`fragmentation_entropy`] reduces venue market shares to a single
//! normalized concentration indicator in [0, 1].

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use thiserror::Error;

/// Errors from profile estimation and share analytics.
#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("profile estimation needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample '{day}' has {got} slices, expected {expected}")]
    SliceCountMismatch {
        day: String,
        expected: usize,
        got: usize,
    },
    #[error("sample '{day}' slice {slice} has non-positive volume {volume}")]
    NonPositiveVolume {
        day: String,
        slice: usize,
        volume: f64,
    },
    #[error("sample '{day}' slice {slice} has negative {field}")]
    NegativeField {
        day: String,
        slice: usize,
        field: &'static str,
    },
    #[error("sample '{day}' is missing slice {slice} (slices must cover 0..N-1)")]
    MissingSlice { day: String, slice: usize },
    #[error("sample '{day}' has no slices")]
    EmptySample { day: String },
    #[error("entropy needs at least 2 venues, got {0}")]
    SingleVenue(usize),
    #[error("market shares must be nonnegative and sum to 1 (sum = {0})")]
    InvalidShares(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv row {row}: {message}")]
    MalformedRow { row: usize, message: String },
}

/// Per-slice statistics of the intraday market, estimated across days.
///
/// All arrays share the same length N (slices per day). `mean_ratio` and
/// `var_ratio` are the sample mean and unbiased sample variance of the
/// per-day ratio volatility/volume, kept separately from
/// `volatility`/`expected_volume` because E(sigma/V) != E sigma / E V.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlicedMarketProfile {
    /// Mean traded volume per slice (shares), V_n > 0.
    pub expected_volume: Vec<f64>,
    /// Mean per-slice volatility (price units per sqrt-slice), sigma_n >= 0.
    pub volatility: Vec<f64>,
    /// Mean half-spread per slice (price units), psi_n >= 0.
    pub half_spread: Vec<f64>,
    /// Mean of the per-day ratio sigma_n / V_n.
    pub mean_ratio: Vec<f64>,
    /// Unbiased variance of the per-day ratio sigma_n / V_n.
    pub var_ratio: Vec<f64>,
    /// Unbiased variance of the per-day half-spread.
    pub var_half_spread: Vec<f64>,
}

impl SlicedMarketProfile {
    /// Number of intraday slices N.
    pub fn n_slices(&self) -> usize {
        self.expected_volume.len()
    }

    /// Check the structural invariants: equal array lengths of at least 1,
    /// strictly positive volumes, nonnegative volatilities, spreads, and
    /// variances.
    pub fn validate(&self) -> Result<(), MarketDataError> {
        let n = self.expected_volume.len();
        if n == 0 {
            return Err(MarketDataError::EmptySample {
                day: "<profile>".into(),
            });
        }
        for (name, len) in [
            ("volatility", self.volatility.len()),
            ("half_spread", self.half_spread.len()),
            ("mean_ratio", self.mean_ratio.len()),
            ("var_ratio", self.var_ratio.len()),
            ("var_half_spread", self.var_half_spread.len()),
        ] {
            if len != n {
                return Err(MarketDataError::SliceCountMismatch {
                    day: format!("<profile field {name}>"),
                    expected: n,
                    got: len,
                });
            }
        }
        for i in 0..n {
            if !(self.expected_volume[i] > 0.0) {
                return Err(MarketDataError::NonPositiveVolume {
                    day: "<profile>".into(),
                    slice: i,
                    volume: self.expected_volume[i],
                });
            }
            for (field, value) in [
                ("volatility", self.volatility[i]),
                ("half_spread", self.half_spread[i]),
                ("var_ratio", self.var_ratio[i]),
                ("var_half_spread", self.var_half_spread[i]),
            ] {
                if !(value >= 0.0) {
                    return Err(MarketDataError::NegativeField {
                        day: "<profile>".into(),
                        slice: i,
                        field,
                    });
                }
            }
        }
        Ok(())
    }
}

/// One trading day of per-slice observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    /// Day identifier (e.g. an ISO date); only used in error messages and
    /// for grouping CSV rows.
    pub day: String,
    /// Observed traded volume per slice (shares), strictly positive.
    pub volume: Vec<f64>,
    /// Observed volatility per slice.
    pub volatility: Vec<f64>,
    /// Observed half-spread per slice.
    pub half_spread: Vec<f64>,
}

impl ProfileSample {
    /// Check lengths and sign constraints; zero-volume slices are rejected
    /// here so the ratio sigma/V is always defined downstream.
    pub fn validate(&self) -> Result<(), MarketDataError> {
        let n = self.volume.len();
        if n == 0 {
            return Err(MarketDataError::EmptySample {
                day: self.day.clone(),
            });
        }
        if self.volatility.len() != n || self.half_spread.len() != n {
            return Err(MarketDataError::SliceCountMismatch {
                day: self.day.clone(),
                expected: n,
                got: self.volatility.len().max(self.half_spread.len()),
            });
        }
        for i in 0..n {
            if !(self.volume[i] > 0.0) {
                return Err(MarketDataError::NonPositiveVolume {
                    day: self.day.clone(),
                    slice: i,
                    volume: self.volume[i],
                });
            }
            if !(self.volatility[i] >= 0.0) {
                return Err(MarketDataError::NegativeField {
                    day: self.day.clone(),
                    slice: i,
                    field: "volatility",
                });
            }
            if !(self.half_spread[i] >= 0.0) {
                return Err(MarketDataError::NegativeField {
                    day: self.day.clone(),
                    slice: i,
                    field: "half_spread",
                });
            }
        }
        Ok(())
    }
}

/// Venue market shares, nonnegative and summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketShares {
    pub shares: Vec<f64>,
}

impl MarketShares {
    /// Build and validate: shares must be nonnegative and sum to 1 within
    /// 1e-9.
    pub fn new(shares: Vec<f64>) -> Result<Self, MarketDataError> {
        let sum: f64 = shares.iter().sum();
        if shares.iter().any(|q| *q < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(MarketDataError::InvalidShares(sum));
        }
        Ok(MarketShares { shares })
    }
}

/// Estimate a sliced profile from day-level samples.
///
/// Per slice: sample means of volume, volatility, and half-spread, plus the
/// sample mean and unbiased variance of the per-day ratio sigma/V and the
/// unbiased variance of the half-spread. At least two days are required for
/// the variances to exist; all days must have the same slice count.
pub fn estimate_profile(
    samples: &[ProfileSample],
) -> Result<SlicedMarketProfile, MarketDataError> {
    if samples.len() < 2 {
        return Err(MarketDataError::TooFewSamples(samples.len()));
    }
    for s in samples {
        s.validate()?;
    }
    let n = samples[0].volume.len();
    for s in samples {
        if s.volume.len() != n {
            return Err(MarketDataError::SliceCountMismatch {
                day: s.day.clone(),
                expected: n,
                got: s.volume.len(),
            });
        }
    }

    let days = samples.len() as f64;
    let mut profile = SlicedMarketProfile {
        expected_volume: vec![0.0; n],
        volatility: vec![0.0; n],
        half_spread: vec![0.0; n],
        mean_ratio: vec![0.0; n],
        var_ratio: vec![0.0; n],
        var_half_spread: vec![0.0; n],
    };

    for slice in 0..n {
        let ratios: Vec<f64> = samples
            .iter()
            .map(|s| s.volatility[slice] / s.volume[slice])
            .collect();
        let spreads: Vec<f64> = samples.iter().map(|s| s.half_spread[slice]).collect();
        profile.expected_volume[slice] =
            samples.iter().map(|s| s.volume[slice]).sum::<f64>() / days;
        profile.volatility[slice] =
            samples.iter().map(|s| s.volatility[slice]).sum::<f64>() / days;
        profile.half_spread[slice] = crate::stats::mean(&spreads);
        profile.mean_ratio[slice] = crate::stats::mean(&ratios);
        profile.var_ratio[slice] = crate::stats::sample_variance(&ratios);
        profile.var_half_spread[slice] = crate::stats::sample_variance(&spreads);
    }
    Ok(profile)
}

/// Per-slice difference between the expectation of the ratio and the ratio
/// of the expectations: mean_ratio[n] - volatility[n]/expected_volume[n].
///
/// Zero for deterministic days; nonnegative when volatility and volume are
/// independent across days.
pub fn ratio_gap(profile: &SlicedMarketProfile) -> Vec<f64> {
    profile
        .mean_ratio
        .iter()
        .zip(&profile.volatility)
        .zip(&profile.expected_volume)
        .map(|((ratio, sigma), volume)| ratio - sigma / volume)
        .collect()
}

/// Normalized fragmentation entropy (-sum q ln q) / ln K in [0, 1].
///
/// 1 at equal shares, 0 when a single venue concentrates all volume. The
/// convention 0 ln 0 = 0 applies. Errors for K < 2 (ln K = 0).
///
/// The two boundary identities hold exactly: equal shares return 1.0 (the
/// maximum-entropy case is detected rather than left to the cancellation of
/// rounded logarithms), and a single concentrated venue returns 0.0.
pub fn fragmentation_entropy(shares: &MarketShares) -> Result<f64, MarketDataError> {
    let k = shares.shares.len();
    if k < 2 {
        return Err(MarketDataError::SingleVenue(k));
    }
    let first = shares.shares[0];
    if shares.shares.iter().all(|q| *q == first) {
        return Ok(1.0);
    }
    let raw: f64 = shares
        .shares
        .iter()
        .map(|q| if *q > 0.0 { -q * q.ln() } else { 0.0 })
        .sum();
    Ok(raw / (k as f64).ln())
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    day: String,
    slice: usize,
    volume: f64,
    volatility: f64,
    half_spread: f64,
}

/// Read day-level samples from CSV with header
/// `day,slice,volume,volatility,half_spread`.
///
/// Slices are 0-indexed and must cover 0..N-1 for each day (any order
/// within the file); duplicate (day, slice) pairs are rejected. Days are
/// returned in order of first appearance.
pub fn read_profile_samples<R: Read>(reader: R) -> Result<Vec<ProfileSample>, MarketDataError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut order: Vec<String> = Vec::new();
    let mut by_day: BTreeMap<String, BTreeMap<usize, (f64, f64, f64)>> = BTreeMap::new();

    for (idx, record) in csv_reader.deserialize::<ProfileRow>().enumerate() {
        let row = record?;
        if !by_day.contains_key(&row.day) {
            order.push(row.day.clone());
        }
        let slices = by_day.entry(row.day.clone()).or_default();
        if slices
            .insert(row.slice, (row.volume, row.volatility, row.half_spread))
            .is_some()
        {
            return Err(MarketDataError::MalformedRow {
                row: idx + 2, // 1-based, after the header line
                message: format!("duplicate slice {} for day '{}'", row.slice, row.day),
            });
        }
    }

    let mut samples = Vec::with_capacity(order.len());
    for day in order {
        let slices = &by_day[&day];
        let n = slices.len();
        let mut sample = ProfileSample {
            day: day.clone(),
            volume: Vec::with_capacity(n),
            volatility: Vec::with_capacity(n),
            half_spread: Vec::with_capacity(n),
        };
        for i in 0..n {
            let (volume, volatility, half_spread) = slices
                .get(&i)
                .copied()
                .ok_or(MarketDataError::MissingSlice {
                    day: day.clone(),
                    slice: i,
                })?;
            sample.volume.push(volume);
            sample.volatility.push(volatility);
            sample.half_spread.push(half_spread);
        }
        sample.validate()?;
        samples.push(sample);
    }
    Ok(samples)
}
