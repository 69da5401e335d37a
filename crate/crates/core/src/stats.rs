//! Measurement: falling depth and speed, volatility, regulation
//! effectiveness predicates, and stylized-fact statistics (excess kurtosis
//! and squared-return autocorrelation of fixed-horizon log returns).
//!
//! Moments use the population convention (divide by the sample count), so
//! a symmetric two-point series has excess kurtosis exactly -2.

use crate::error::SimError;

/// Fixed-horizon log returns, the input to the stylized-fact statistics.
#[derive(Clone, Debug)]
pub struct ReturnSeries {
    returns: Vec<f64>,
}

impl ReturnSeries {
    /// Wraps a precomputed return series (at least two values).
    pub fn from_returns(returns: Vec<f64>) -> Result<Self, SimError> {
        if returns.len() < 2 {
            return Err(SimError::arg("return series needs at least two values"));
        }
        Ok(ReturnSeries { returns })
    }

    /// Non-overlapping log returns over `horizon` ticks:
    /// `ln(mids[k*h] / mids[(k-1)*h])`.
    pub fn from_mids(mids: &[f64], horizon: usize) -> Result<Self, SimError> {
        Self::from_returns(non_overlapping_log_returns(mids, horizon)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Fourth standardized moment minus 3 (zero for a normal sample).
    pub fn excess_kurtosis(&self) -> Result<f64, SimError> {
        if self.returns.len() < 4 {
            return Err(SimError::arg("kurtosis needs at least four returns"));
        }
        let n = self.returns.len() as f64;
        let mean = self.returns.iter().sum::<f64>() / n;
        let m2 = self.returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        if m2 == 0.0 {
            return Err(SimError::arg("kurtosis undefined for zero variance"));
        }
        let m4 = self.returns.iter().map(|r| (r - mean).powi(4)).sum::<f64>() / n;
        Ok(m4 / (m2 * m2) - 3.0)
    }

    /// Sample autocorrelation of the squared returns at lags `1..=max_lag`.
    pub fn autocorr_squared(&self, max_lag: usize) -> Result<Vec<f64>, SimError> {
        let squared: Vec<f64> = self.returns.iter().map(|r| r * r).collect();
        autocorrelation(&squared, max_lag)
    }
}

/// Sample autocorrelation of `series` at lags `1..=max_lag`, using the
/// overall mean and variance as the normalizer.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>, SimError> {
    if max_lag == 0 || series.len() <= max_lag {
        return Err(SimError::arg(
            "series must be longer than the largest requested lag",
        ));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|s| (s - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(SimError::arg("autocorrelation undefined for zero variance"));
    }
    Ok((1..=max_lag)
        .map(|lag| {
            let num: f64 = (0..n - lag)
                .map(|k| (series[k] - mean) * (series[k + lag] - mean))
                .sum();
            num / denom
        })
        .collect())
}

/// Depth of the fall: the fundamental value minus the lowest mid reached.
pub fn falling_depth(mids: &[f64], p_f: f64) -> Result<f64, SimError> {
    if mids.is_empty() {
        return Err(SimError::arg("falling depth of an empty series"));
    }
    let min = mids.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(p_f - min)
}

/// Magnitude of the least-squares slope of `mids[window]` against the tick
/// index: the average fall in price units per tick over the window.
pub fn estimate_falling_speed(
    mids: &[f64],
    window: std::ops::Range<usize>,
) -> Result<f64, SimError> {
    if window.end > mids.len() || window.end - window.start < 2 {
        return Err(SimError::arg("falling-speed window is degenerate"));
    }
    let slice = &mids[window];
    let n = slice.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = slice.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, y) in slice.iter().enumerate() {
        let dt = k as f64 - t_mean;
        num += dt * (y - y_mean);
        den += dt * dt;
    }
    Ok((num / den).abs())
}

/// Standard deviation (population) of non-overlapping `horizon`-tick log
/// returns of the mid series.
pub fn volatility(mids: &[f64], horizon: usize) -> Result<f64, SimError> {
    let returns = non_overlapping_log_returns(mids, horizon)?;
    if returns.len() < 2 {
        return Err(SimError::arg("volatility needs at least two returns"));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt())
}

fn non_overlapping_log_returns(mids: &[f64], horizon: usize) -> Result<Vec<f64>, SimError> {
    if horizon == 0 {
        return Err(SimError::arg("return horizon must be positive"));
    }
    if mids.len() <= horizon {
        return Err(SimError::arg("series shorter than the return horizon"));
    }
    let mut returns = Vec::with_capacity(mids.len() / horizon);
    let mut k = horizon;
    while k < mids.len() {
        let (prev, cur) = (mids[k - horizon], mids[k]);
        if !(prev > 0.0 && cur > 0.0) {
            return Err(SimError::arg("mids must be positive for log returns"));
        }
        returns.push((cur / prev).ln());
        k += horizon;
    }
    Ok(returns)
}

/// The four regulation-effectiveness conditions on `(band, lookback)`
/// given the measured market quantities. All comparisons are strict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EffectivenessChecks {
    /// Band-per-lookback stays below the falling speed
    /// (`band / lookback < fall_speed`); cells violating this are the
    /// shaded ones in the sweep tables.
    pub slope_ok: bool,
    /// Band exceeds the lookback-horizon volatility (`band > volatility`).
    pub vol_ok: bool,
    /// Lookback is shorter than the shock period (`lookback < shock`).
    pub window_ok: bool,
    /// Band is smaller than the unregulated crash depth (`band < depth`).
    pub depth_ok: bool,
}

/// Evaluates the four effectiveness predicates.
pub fn condition_predicates(
    band: f64,
    lookback: f64,
    fall_speed: f64,
    volatility: f64,
    shock_duration: f64,
    crash_depth: f64,
) -> EffectivenessChecks {
    EffectivenessChecks {
        slope_ok: band / lookback < fall_speed,
        vol_ok: band > volatility,
        window_ok: lookback < shock_duration,
        depth_ok: band < crash_depth,
    }
}
