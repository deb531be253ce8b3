//! Artificial-market simulator: a continuous double auction traded by
//! heterogeneous normal agents plus one trend-following and one short-term
//! reversal strategy agent, with an experiment harness for the 2x2 existence
//! factorial under common random numbers.

pub mod agents;
pub mod book;
pub mod experiment;
pub mod sim;
pub mod stats;

pub use book::{round_order_price, Order, OrderBook, PriceTick, Side, Trade};
pub use experiment::{
    emit_report, run_factorial, CaseId, FactorialReport, FactorialSpec, ReportFormat, RunMetrics,
};
pub use sim::{run_simulation, AgentMode, RunResult, SimConfig};
