//! Tick-time scheduler: normal-agent round-robin, strategy-agent cycle
//! interleaving, warm-up handling, RNG stream discipline, and shadow
//! (virtual) execution for counterfactual runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    ctaa_decide, na_expected_price, na_expected_return, na_generate_order, strta_decide,
    ExpectationInputs, NaParams, StrategyKind, StrategyWindows,
};
use crate::book::{round_order_price, OrderBook, Side, Trade};
use crate::stats::Ledger;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field} must be positive")]
    NotPositive { field: &'static str },
    #[error("t_end ({t_end}) must exceed t_c ({t_c})")]
    TEndBeforeWarmup { t_end: i64, t_c: i64 },
    #[error("dt must be even, got {dt}")]
    OddCycle { dt: i64 },
    #[error("tau_max must be at least 3, got {tau_max}")]
    TauMaxTooSmall { tau_max: i64 },
}

/// How a strategy agent participates in a run. A shadow agent trades
/// virtually against best quotes without touching the book; an absent agent
/// produces nothing at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentMode {
    Real,
    Shadow,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Number of normal agents.
    pub n: u32,
    pub w1_max: f64,
    pub w2_max: f64,
    pub w3_max: f64,
    pub tau_max: i64,
    pub sigma_eps: f64,
    /// Half-width of the order-price scattering interval.
    pub p_d: f64,
    /// Order lifetime and warm-up length, in ticks.
    pub t_c: i64,
    pub delta_p: f64,
    pub p_f: f64,
    pub t_end: i64,
    pub windows: StrategyWindows,
    pub ctaa_mode: AgentMode,
    pub strta_mode: AgentMode,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            w1_max: 1.0,
            w2_max: 10.0,
            w3_max: 1.0,
            tau_max: 10_000,
            sigma_eps: 0.03,
            p_d: 1000.0,
            t_c: 10_000,
            delta_p: 0.01,
            p_f: 10_000.0,
            t_end: 1_000_000,
            windows: StrategyWindows::default(),
            ctaa_mode: AgentMode::Real,
            strta_mode: AgentMode::Real,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(v: f64, field: &'static str) -> Result<(), ConfigError> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::NotPositive { field })
            }
        }
        positive(self.n as f64, "n")?;
        positive(self.w1_max, "w1_max")?;
        positive(self.w2_max, "w2_max")?;
        positive(self.w3_max, "w3_max")?;
        positive(self.sigma_eps, "sigma_eps")?;
        positive(self.p_d, "p_d")?;
        positive(self.t_c as f64, "t_c")?;
        positive(self.delta_p, "delta_p")?;
        positive(self.p_f, "p_f")?;
        positive(self.t_end as f64, "t_end")?;
        positive(self.windows.dt as f64, "dt")?;
        positive(self.windows.dt1 as f64, "dt1")?;
        positive(self.windows.dt2 as f64, "dt2")?;
        positive(self.windows.dt3 as f64, "dt3")?;
        if self.tau_max < 3 {
            return Err(ConfigError::TauMaxTooSmall { tau_max: self.tau_max });
        }
        if self.t_end <= self.t_c {
            return Err(ConfigError::TEndBeforeWarmup { t_end: self.t_end, t_c: self.t_c });
        }
        if self.windows.dt % 2 != 0 {
            return Err(ConfigError::OddCycle { dt: self.windows.dt });
        }
        Ok(())
    }
}

/// Independent deterministic RNG sub-streams, keyed only by seed. All
/// factorial cases for a seed consume identical sequences: one parameter
/// stream draw per agent at setup, and exactly one noise and one uniform
/// draw per tick regardless of what happens to the resulting order.
pub struct RngStreams {
    pub params: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub uniform: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let make = |stream: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng
        };
        Self {
            params: make(1),
            noise: make(2),
            uniform: make(3),
        }
    }
}

/// Draw all normal-agent parameters from the parameter stream.
pub fn draw_na_params(config: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<NaParams> {
    (0..config.n)
        .map(|_| NaParams {
            w1: rng.random::<f64>() * config.w1_max,
            w2: rng.random::<f64>() * config.w2_max,
            w3: rng.random::<f64>() * config.w3_max,
            tau: rng.random_range(2..config.tau_max),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// NA orders skipped because the scattered price was not positive.
    pub skipped_orders: u64,
    /// Market orders (real or virtual) that found an empty opposite side.
    pub empty_book_market_orders: u64,
    /// Ticks on which the mid fell back to the last valid value.
    pub one_sided_ticks: u64,
    pub expired_orders: u64,
}

/// Complete output of one simulation run. Virtual fills appear only in the
/// strategy ledgers, never in the trade log.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: SimConfig,
    /// Mid-price after each tick's processing; index 0 holds the initial
    /// fundamental price.
    pub mids: Vec<f64>,
    pub trades: Vec<Trade>,
    pub ctaa: Option<Ledger>,
    pub strta: Option<Ledger>,
    pub diagnostics: Diagnostics,
    /// Checksum over the per-tick noise draws, for cross-case alignment
    /// checks.
    pub noise_checksum: u64,
}

impl RunResult {
    pub fn final_mid(&self) -> f64 {
        *self.mids.last().unwrap()
    }
}

struct StrategyAgent {
    kind: StrategyKind,
    mode: AgentMode,
    agent_id: u32,
    ledger: Ledger,
}

impl StrategyAgent {
    fn decide(&self, mids: &[f64], windows: &StrategyWindows) -> Option<Side> {
        let position = self.ledger.position as i8;
        match self.kind {
            StrategyKind::TrendFollower => ctaa_decide(position, mids, windows),
            StrategyKind::Reversal => strta_decide(position, mids, windows),
        }
    }
}

/// Record a virtual fill against the best opposite quote without touching the
/// book. Returns the fill price, or `None` when the opposite side is empty.
pub fn shadow_execute(book: &OrderBook, side: Side, delta_p: f64) -> Option<f64> {
    book.best_quote(side.opposite()).map(|q| q.currency(delta_p))
}

/// Run one simulation to `t_end`. Deterministic: identical config (including
/// seed) produces an identical `RunResult`.
pub fn run_simulation(config: &SimConfig) -> Result<RunResult, ConfigError> {
    config.validate()?;

    let mut streams = RngStreams::new(config.seed);
    let na_params = draw_na_params(config, &mut streams.params);
    let normal = Normal::new(0.0, config.sigma_eps).expect("validated sigma");

    let mut book = OrderBook::new();
    let mut mids = Vec::with_capacity(config.t_end as usize + 1);
    mids.push(config.p_f);
    let mut last_valid_mid = config.p_f;
    let mut trades = Vec::new();
    let mut diagnostics = Diagnostics::default();
    let mut noise_checksum: u64 = 0;

    let make_agent = |kind, mode, agent_id| {
        (mode != AgentMode::Absent).then(|| StrategyAgent {
            kind,
            mode,
            agent_id,
            ledger: Ledger::default(),
        })
    };
    let mut ctaa = make_agent(StrategyKind::TrendFollower, config.ctaa_mode, config.n);
    let mut strta = make_agent(StrategyKind::Reversal, config.strta_mode, config.n + 1);

    let half_cycle = config.windows.dt / 2;

    for t in 1..=config.t_end {
        diagnostics.expired_orders += book.expire_orders(t, config.t_c) as u64;

        // normal agent round-robin
        let agent = ((t - 1) % config.n as i64) as usize;
        let params = &na_params[agent];
        let eps = normal.sample(&mut streams.noise);
        let uniform = streams.uniform.random::<f64>();
        noise_checksum = noise_checksum
            .rotate_left(7)
            .wrapping_add(eps.to_bits());

        let mid_now = mids[(t - 1) as usize];
        let lag_index = t - params.tau - 1;
        let mid_lagged = (lag_index >= 0).then(|| mids[lag_index as usize]);
        let inputs = ExpectationInputs {
            fundamental: config.p_f,
            mid_now,
            mid_lagged,
            noise_draw: eps,
        };
        let expected_return =
            na_expected_return(params, &inputs).expect("weight draws are positive");
        let expected_price = na_expected_price(mid_now, expected_return);

        let warmup = t < config.t_c;
        let order = na_generate_order(expected_price, uniform, config.p_d, config.p_f, warmup)
            .and_then(|(side, raw)| {
                round_order_price(raw, side, config.delta_p).map(|price| (side, price))
            });
        match order {
            Some((side, price)) => {
                if let Some(trade) = book.submit_limit(side, price, agent as u32, t) {
                    trades.push(trade);
                }
            }
            None => diagnostics.skipped_orders += 1,
        }

        // record the post-order mid for this tick
        match book.mid_price(config.delta_p) {
            Some(mid) => last_valid_mid = mid,
            None => diagnostics.one_sided_ticks += 1,
        }
        mids.push(last_valid_mid);

        // strategy agents act on their cycle ticks, after warm-up; their
        // orders do not advance tick time
        if t >= config.t_c {
            let phase = t % config.windows.dt;
            let acting = if phase == 0 {
                ctaa.as_mut()
            } else if phase == half_cycle {
                strta.as_mut()
            } else {
                None
            };
            if let Some(agent) = acting {
                if let Some(side) = agent.decide(&mids, &config.windows) {
                    match agent.mode {
                        AgentMode::Real => {
                            match book.submit_market(side, agent.agent_id, t) {
                                Some(trade) => {
                                    trades.push(trade);
                                    agent.ledger.record_fill(
                                        t,
                                        side,
                                        trade.price.currency(config.delta_p),
                                    );
                                }
                                None => diagnostics.empty_book_market_orders += 1,
                            }
                        }
                        AgentMode::Shadow => {
                            match shadow_execute(&book, side, config.delta_p) {
                                Some(price) => agent.ledger.record_fill(t, side, price),
                                None => diagnostics.empty_book_market_orders += 1,
                            }
                        }
                        AgentMode::Absent => unreachable!(),
                    }
                }
            }
        }
    }

    Ok(RunResult {
        config: config.clone(),
        mids,
        trades,
        ctaa: ctaa.map(|a| a.ledger),
        strta: strta.map(|a| a.ledger),
        diagnostics,
        noise_checksum,
    })
}
