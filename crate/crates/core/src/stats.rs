//! Measured quantities: strategy ledgers and P&L, interval return series,
//! and the stylized-facts statistics.
//!
//! All moments are population moments, computed by direct formula.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::Side;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series too short: need at least {need}, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub tick: i64,
    pub side: Side,
    pub price: f64,
}

/// Cumulative fill record for one strategy agent, real or shadow. Cash is the
/// signed sum of trade cash flows: sells add the price, buys subtract it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub fills: Vec<Fill>,
    pub cash: f64,
    pub position: i64,
}

impl Ledger {
    pub fn record_fill(&mut self, tick: i64, side: Side, price: f64) {
        self.fills.push(Fill { tick, side, price });
        match side {
            Side::Buy => {
                self.cash -= price;
                self.position += 1;
            }
            Side::Sell => {
                self.cash += price;
                self.position -= 1;
            }
        }
    }
}

/// Final earnings as a percentage of the fundamental price, with any open
/// position marked to the final mid.
pub fn final_return(ledger: &Ledger, final_mid: f64, p_f: f64) -> f64 {
    (ledger.cash + ledger.position as f64 * final_mid) / p_f * 100.0
}

/// Shares traded; every fill is one share.
pub fn trading_volume(ledger: &Ledger) -> usize {
    ledger.fills.len()
}

/// Non-overlapping log returns `ln(P[t0 + k*interval] / P[t0 + (k-1)*interval])`
/// over `[t0, t_end]`.
pub fn return_series(mids: &[f64], t0: i64, t_end: i64, interval: i64) -> Vec<f64> {
    let count = (t_end - t0) / interval;
    (1..=count)
        .map(|k| {
            let hi = (t0 + k * interval) as usize;
            let lo = (t0 + (k - 1) * interval) as usize;
            (mids[hi] / mids[lo]).ln()
        })
        .collect()
}

fn central_moments(series: &[f64]) -> (f64, f64, f64) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in series {
        let d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    (mean, m2 / n, m4 / n)
}

/// Population standard deviation, as a percentage.
pub fn stdev_returns(series: &[f64]) -> Result<f64, StatsError> {
    if series.len() < 2 {
        return Err(StatsError::TooShort { need: 2, got: series.len() });
    }
    let (_, m2, _) = central_moments(series);
    Ok(m2.sqrt() * 100.0)
}

/// Excess kurtosis `m4/m2^2 - 3`; the normal baseline maps to zero.
pub fn excess_kurtosis(series: &[f64]) -> Result<f64, StatsError> {
    if series.len() < 2 {
        return Err(StatsError::TooShort { need: 2, got: series.len() });
    }
    let (_, m2, m4) = central_moments(series);
    if m2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Sample autocorrelation of the squared series at each of `lags`.
pub fn squared_return_autocorr(series: &[f64], lags: usize) -> Result<Vec<f64>, StatsError> {
    if series.len() <= lags + 1 {
        return Err(StatsError::TooShort { need: lags + 2, got: series.len() });
    }
    let sq: Vec<f64> = series.iter().map(|r| r * r).collect();
    let n = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / n;
    let denom: f64 = sq.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((1..=lags)
        .map(|lag| {
            let num: f64 = sq[..sq.len() - lag]
                .iter()
                .zip(&sq[lag..])
                .map(|(&a, &b)| (a - mean) * (b - mean))
                .sum();
            num / denom
        })
        .collect())
}
