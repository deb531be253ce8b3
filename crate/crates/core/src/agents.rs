//! Agent behaviors: normal-agent expectation and order generation, plus the
//! trend-following and short-term-reversal strategy state machines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::Side;

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("normal agent weights sum to zero")]
    ZeroWeightSum,
}

/// Per-agent expectation weights and chartist lookback, drawn once at
/// simulation start and immutable thereafter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaParams {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub tau: i64,
}

/// Inputs to one expectation evaluation. `mid_lagged` is `None` while the
/// chartist lookback reaches before the start of the price history, which
/// zeroes the chartist term.
#[derive(Debug, Clone, Copy)]
pub struct ExpectationInputs {
    pub fundamental: f64,
    pub mid_now: f64,
    pub mid_lagged: Option<f64>,
    pub noise_draw: f64,
}

/// Weighted blend of fundamentalist pull, chartist momentum, and noise,
/// normalized by the weight sum.
pub fn na_expected_return(params: &NaParams, inputs: &ExpectationInputs) -> Result<f64, AgentError> {
    let sum = params.w1 + params.w2 + params.w3;
    if !(sum > 0.0) {
        return Err(AgentError::ZeroWeightSum);
    }
    let fundamental = params.w1 * (inputs.fundamental / inputs.mid_now).ln();
    let chartist = match inputs.mid_lagged {
        Some(lagged) => params.w2 * (inputs.mid_now / lagged).ln(),
        None => 0.0,
    };
    let noise = params.w3 * inputs.noise_draw;
    Ok((fundamental + chartist + noise) / sum)
}

pub fn na_expected_price(mid_now: f64, expected_return: f64) -> f64 {
    mid_now * expected_return.exp()
}

/// Scatter an order price uniformly on `(expected - p_d, expected + p_d)` and
/// pick the side by comparing the reference price against the order price.
/// During warm-up the reference is the fundamental price, which seeds both
/// sides of the book. Returns `None` when the scattered price is not positive.
pub fn na_generate_order(
    expected_price: f64,
    uniform_draw: f64,
    p_d: f64,
    p_f: f64,
    warmup: bool,
) -> Option<(Side, f64)> {
    let order_price = expected_price - p_d + 2.0 * p_d * uniform_draw;
    if !(order_price > 0.0) {
        return None;
    }
    let reference = if warmup { p_f } else { expected_price };
    let side = if reference > order_price {
        Side::Buy
    } else {
        Side::Sell
    };
    Some((side, order_price))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Max,
    Min,
}

/// True iff `current_mid` reaches the window extreme. `window` holds the mids
/// of the last `lookback` ticks including the current one; ties count as
/// reaching the extreme. A window shorter than the lookback never triggers.
pub fn rolling_is_extreme(window: &[f64], current_mid: f64, lookback: usize, mode: Extreme) -> bool {
    if window.len() < lookback {
        return false;
    }
    let window = &window[window.len() - lookback..];
    match mode {
        Extreme::Max => window.iter().all(|&m| current_mid >= m),
        Extreme::Min => window.iter().all(|&m| current_mid <= m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    TrendFollower,
    Reversal,
}

/// Decision lookbacks and the shared order-cycle period. `dt` must be even so
/// the reversal agent's half-cycle offset lands on an integer tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyWindows {
    pub dt: i64,
    pub dt1: i64,
    pub dt2: i64,
    pub dt3: i64,
}

impl Default for StrategyWindows {
    fn default() -> Self {
        Self {
            dt: 200,
            dt1: 2000,
            dt2: 500,
            dt3: 100,
        }
    }
}

fn at_extreme(mids: &[f64], lookback: i64, mode: Extreme) -> bool {
    let lookback = lookback as usize;
    if mids.len() < lookback {
        return false;
    }
    let current = mids[mids.len() - 1];
    rolling_is_extreme(&mids[mids.len() - lookback..], current, lookback, mode)
}

/// Trend-follower: enter on a fresh long-window extreme, exit on an opposing
/// shorter-window extreme. `mids` is the per-tick mid history up to and
/// including the current tick.
pub fn ctaa_decide(position: i8, mids: &[f64], windows: &StrategyWindows) -> Option<Side> {
    match position {
        0 => {
            if at_extreme(mids, windows.dt1, Extreme::Max) {
                Some(Side::Buy)
            } else if at_extreme(mids, windows.dt1, Extreme::Min) {
                Some(Side::Sell)
            } else {
                None
            }
        }
        1 => at_extreme(mids, windows.dt2, Extreme::Min).then_some(Side::Sell),
        -1 => at_extreme(mids, windows.dt2, Extreme::Max).then_some(Side::Buy),
        _ => unreachable!("position limited to one share"),
    }
}

/// Reversal trader: enter against a medium-window extreme, exit on a fast
/// same-direction extreme.
pub fn strta_decide(position: i8, mids: &[f64], windows: &StrategyWindows) -> Option<Side> {
    match position {
        0 => {
            if at_extreme(mids, windows.dt2, Extreme::Min) {
                Some(Side::Buy)
            } else if at_extreme(mids, windows.dt2, Extreme::Max) {
                Some(Side::Sell)
            } else {
                None
            }
        }
        1 => at_extreme(mids, windows.dt3, Extreme::Max).then_some(Side::Sell),
        -1 => at_extreme(mids, windows.dt3, Extreme::Min).then_some(Side::Buy),
        _ => unreachable!("position limited to one share"),
    }
}
