//! Continuous double auction with price-time priority, a fixed price grid,
//! and time-based order expiry.
//!
//! All order prices are stored as integer counts of the minimum price
//! increment, so rounding and crossing comparisons are exact. Every order is
//! for exactly one share.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

/// Price expressed in integer multiples of the minimum increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PriceTick(pub i64);

impl PriceTick {
    pub fn currency(self, delta_p: f64) -> f64 {
        self.0 as f64 * delta_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: u64,
    pub side: Side,
    pub price: PriceTick,
    pub agent_id: u32,
    pub placed_tick: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub price: PriceTick,
    pub buy_agent: u32,
    pub sell_agent: u32,
    pub tick: i64,
    pub aggressor: Side,
}

/// Round a raw currency price onto the grid: buy orders round down, sell
/// orders round up. Returns `None` when the rounded price is not positive.
pub fn round_order_price(raw_price: f64, side: Side, delta_p: f64) -> Option<PriceTick> {
    if !(raw_price > 0.0) {
        return None;
    }
    let scaled = raw_price * (1.0 / delta_p);
    let ticks = match side {
        Side::Buy => scaled.floor(),
        Side::Sell => scaled.ceil(),
    } as i64;
    (ticks > 0).then_some(PriceTick(ticks))
}

/// Two price-ordered sides with FIFO queues per level and an expiry index
/// ordered by placement tick.
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    bids: BTreeMap<i64, VecDeque<Order>>,
    asks: BTreeMap<i64, VecDeque<Order>>,
    // placed_tick is nondecreasing in id, so this stays sorted by age
    expiry: VecDeque<Order>,
    next_id: u64,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn best_bid(&self) -> Option<PriceTick> {
        self.bids.keys().next_back().map(|&p| PriceTick(p))
    }

    pub fn best_ask(&self) -> Option<PriceTick> {
        self.asks.keys().next().map(|&p| PriceTick(p))
    }

    /// Best resting quote on the given side.
    pub fn best_quote(&self, side: Side) -> Option<PriceTick> {
        match side {
            Side::Buy => self.best_bid(),
            Side::Sell => self.best_ask(),
        }
    }

    /// Mid-price in currency units, `None` while either side is empty.
    /// Not grid-rounded.
    pub fn mid_price(&self, delta_p: f64) -> Option<f64> {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => Some((b.currency(delta_p) + a.currency(delta_p)) / 2.0),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.bids.values().map(VecDeque::len).sum::<usize>()
            + self.asks.values().map(VecDeque::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    /// Resting orders on one side, best price first, FIFO within a level.
    pub fn side_orders(&self, side: Side) -> Vec<Order> {
        match side {
            Side::Buy => self.bids.values().rev().flatten().copied().collect(),
            Side::Sell => self.asks.values().flatten().copied().collect(),
        }
    }

    /// Submit a one-share limit order. A crossing order (buy price >= best
    /// ask, or sell price <= best bid) executes against the oldest best
    /// opposite order at the RESTING order's price; otherwise it rests.
    pub fn submit_limit(
        &mut self,
        side: Side,
        price: PriceTick,
        agent_id: u32,
        tick: i64,
    ) -> Option<Trade> {
        let crossed = match side {
            Side::Buy => self.best_ask().is_some_and(|a| price >= a),
            Side::Sell => self.best_bid().is_some_and(|b| price <= b),
        };
        if crossed {
            return self.take_best(side, agent_id, tick);
        }
        let order = Order {
            id: self.next_id,
            side,
            price,
            agent_id,
            placed_tick: tick,
        };
        self.next_id += 1;
        let levels = match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        levels.entry(price.0).or_default().push_back(order);
        self.expiry.push_back(order);
        None
    }

    /// Submit a one-share market order. Executes at the best opposite quote;
    /// a market order against an empty side is discarded.
    pub fn submit_market(&mut self, side: Side, agent_id: u32, tick: i64) -> Option<Trade> {
        self.take_best(side, agent_id, tick)
    }

    fn take_best(&mut self, aggressor_side: Side, agent_id: u32, tick: i64) -> Option<Trade> {
        let levels = match aggressor_side {
            Side::Buy => &mut self.asks,
            Side::Sell => &mut self.bids,
        };
        let (&price, queue) = match aggressor_side {
            Side::Buy => levels.iter_mut().next()?,
            Side::Sell => levels.iter_mut().next_back()?,
        };
        let resting = queue.pop_front().expect("level queues are never empty");
        if queue.is_empty() {
            levels.remove(&price);
        }
        let (buy_agent, sell_agent) = match aggressor_side {
            Side::Buy => (agent_id, resting.agent_id),
            Side::Sell => (resting.agent_id, agent_id),
        };
        Some(Trade {
            price: PriceTick(price),
            buy_agent,
            sell_agent,
            tick,
            aggressor: aggressor_side,
        })
    }

    /// Remove every resting order with `placed_tick <= current_tick - t_c`.
    /// Returns the number of orders actually removed (filled orders still in
    /// the expiry index are skipped).
    pub fn expire_orders(&mut self, current_tick: i64, t_c: i64) -> usize {
        let cutoff = current_tick - t_c;
        let mut removed = 0;
        while let Some(front) = self.expiry.front() {
            if front.placed_tick > cutoff {
                break;
            }
            let order = self.expiry.pop_front().unwrap();
            if self.remove_resting(&order) {
                removed += 1;
            }
        }
        removed
    }

    fn remove_resting(&mut self, order: &Order) -> bool {
        let levels = match order.side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        let Some(queue) = levels.get_mut(&order.price.0) else {
            return false;
        };
        let Some(pos) = queue.iter().position(|o| o.id == order.id) else {
            return false;
        };
        queue.remove(pos);
        if queue.is_empty() {
            levels.remove(&order.price.0);
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DELTA_P: f64 = 0.01;

    fn ticks(currency: f64) -> PriceTick {
        PriceTick((currency * 100.0).round() as i64)
    }

    #[test]
    fn buy_price_rounds_down() {
        assert_eq!(
            round_order_price(10000.006, Side::Buy, DELTA_P),
            Some(ticks(10000.00))
        );
    }

    #[test]
    fn sell_price_on_grid_unchanged() {
        assert_eq!(
            round_order_price(10000.00, Side::Sell, DELTA_P),
            Some(ticks(10000.00))
        );
    }

    #[test]
    fn sell_price_rounds_up() {
        assert_eq!(
            round_order_price(10000.001, Side::Sell, DELTA_P),
            Some(ticks(10000.01))
        );
    }

    #[test]
    fn nonpositive_price_rejected() {
        assert_eq!(round_order_price(0.0, Side::Buy, DELTA_P), None);
        assert_eq!(round_order_price(-5.0, Side::Sell, DELTA_P), None);
        assert_eq!(round_order_price(0.004, Side::Buy, DELTA_P), None);
    }

    #[test]
    fn limit_on_empty_book_rests() {
        let mut book = OrderBook::new();
        let trade = book.submit_limit(Side::Buy, ticks(9999.0), 0, 1);
        assert!(trade.is_none());
        assert_eq!(book.best_bid(), Some(ticks(9999.0)));
        assert_eq!(book.len(), 1);
    }

    #[test]
    fn crossing_limit_fills_fifo() {
        let mut book = OrderBook::new();
        book.submit_limit(Side::Sell, ticks(10001.0), 1, 5);
        book.submit_limit(Side::Sell, ticks(10001.0), 2, 7);
        let trade = book.submit_limit(Side::Buy, ticks(10002.0), 3, 8).unwrap();
        assert_eq!(trade.price, ticks(10001.0));
        assert_eq!(trade.sell_agent, 1);
        assert_eq!(trade.buy_agent, 3);
        assert_eq!(trade.aggressor, Side::Buy);
        // second seller still resting
        assert_eq!(book.side_orders(Side::Sell)[0].agent_id, 2);
    }

    #[test]
    fn crossing_at_equality_executes() {
        let mut book = OrderBook::new();
        book.submit_limit(Side::Buy, ticks(9999.0), 1, 1);
        let trade = book.submit_limit(Side::Sell, ticks(9999.0), 2, 2).unwrap();
        assert_eq!(trade.price, ticks(9999.0));
        assert!(book.is_empty());
    }

    #[test]
    fn market_order_hits_best_then_next() {
        let mut book = OrderBook::new();
        book.submit_limit(Side::Sell, ticks(10003.0), 1, 1);
        book.submit_limit(Side::Sell, ticks(10001.0), 2, 2);
        let t1 = book.submit_market(Side::Buy, 9, 3).unwrap();
        assert_eq!(t1.price, ticks(10001.0));
        let t2 = book.submit_market(Side::Buy, 9, 4).unwrap();
        assert_eq!(t2.price, ticks(10003.0));
        assert!(book.submit_market(Side::Buy, 9, 5).is_none());
    }

    #[test]
    fn expiry_removes_stale_orders() {
        let mut book = OrderBook::new();
        let t_c = 10000;
        book.submit_limit(Side::Buy, ticks(9999.0), 0, 0);
        book.submit_limit(Side::Buy, ticks(9998.0), 1, 1);
        assert_eq!(book.expire_orders(10000, t_c), 1);
        assert_eq!(book.len(), 1);
        assert_eq!(book.side_orders(Side::Buy)[0].agent_id, 1);
    }

    #[test]
    fn expiry_counts_only_resting() {
        let mut book = OrderBook::new();
        // 3 stale, 2 fresh
        for t in 0..3 {
            book.submit_limit(Side::Sell, ticks(10001.0 + t as f64), t as u32, t);
        }
        book.submit_limit(Side::Sell, ticks(10010.0), 10, 500);
        book.submit_limit(Side::Buy, ticks(9990.0), 11, 501);
        assert_eq!(book.expire_orders(10002, 10000), 3);
        assert_eq!(book.len(), 2);
    }

    #[test]
    fn filled_order_not_double_counted_by_expiry() {
        let mut book = OrderBook::new();
        book.submit_limit(Side::Sell, ticks(10001.0), 1, 0);
        book.submit_market(Side::Buy, 2, 1);
        assert_eq!(book.expire_orders(10001, 10000), 0);
    }

    #[test]
    fn mid_price_is_unrounded_average() {
        let mut book = OrderBook::new();
        assert_eq!(book.mid_price(DELTA_P), None);
        book.submit_limit(Side::Buy, ticks(9999.0), 0, 1);
        book.submit_limit(Side::Sell, ticks(10001.0), 1, 1);
        assert_eq!(book.mid_price(DELTA_P), Some(10000.0));

        let mut book = OrderBook::new();
        book.submit_limit(Side::Buy, ticks(9999.98), 0, 1);
        book.submit_limit(Side::Sell, ticks(10000.01), 1, 1);
        assert!((book.mid_price(DELTA_P).unwrap() - 9999.995).abs() < 1e-9);
    }
}
