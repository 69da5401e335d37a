//! Continuous double auction order book.
//!
//! Orders are one share each, priced on a fixed tick grid, and rest in
//! price-time priority. An incoming order that crosses the opposite best
//! price executes immediately at the resting order's price; otherwise it
//! rests. Resting orders expire a fixed number of ticks after placement.
//!
//! Prices are stored as whole tick counts (`i64`), which keeps the book
//! exact; conversion to price units happens only at the edges.

use std::collections::{BTreeMap, VecDeque};

use crate::error::SimError;
use crate::{AgentId, OrderId, Time};

/// Order direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Buy,
    Sell,
}

/// A one-share limit order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Order {
    pub id: OrderId,
    /// Owning agent, in `[1, n]`.
    pub agent_id: AgentId,
    pub side: Side,
    /// Price in whole ticks.
    pub price: i64,
    /// Turn at which the order was placed.
    pub placed_at: Time,
}

/// Execution record: one share traded at the resting order's price.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trade {
    pub time: Time,
    /// Execution price in whole ticks.
    pub price: i64,
    pub buy_agent: AgentId,
    pub sell_agent: AgentId,
}

/// One row of a depth snapshot: resting share counts in `[low, high)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthBin {
    pub low: f64,
    pub high: f64,
    pub sell_shares: u32,
    pub buy_shares: u32,
}

/// Converts a raw price to a tick count, rounding buys down and sells up.
///
/// Prices that already sit on the grid (up to float noise from a prior
/// ticks-to-price conversion) snap to the nearest tick instead of moving a
/// full tick in the rounding direction.
pub fn ticks_from_price(price: f64, side: Side, tick: f64) -> Result<i64, SimError> {
    if !(price > 0.0) || !price.is_finite() {
        return Err(SimError::arg(format!("price must be positive, got {price}")));
    }
    if !(tick > 0.0) || !tick.is_finite() {
        return Err(SimError::arg(format!("tick must be positive, got {tick}")));
    }
    let q = price / tick;
    let nearest = q.round();
    // Division noise is a few ulps; anything within 1e-6 ticks is on-grid.
    if (q - nearest).abs() < 1e-6 {
        return Ok(nearest as i64);
    }
    Ok(match side {
        Side::Buy => q.floor() as i64,
        Side::Sell => q.ceil() as i64,
    })
}

/// Rounds a raw price onto the tick grid: down for buys, up for sells.
pub fn round_to_tick(price: f64, side: Side, tick: f64) -> Result<f64, SimError> {
    Ok(ticks_from_price(price, side, tick)? as f64 * tick)
}

#[derive(Clone, Copy, Debug)]
struct Resting {
    id: OrderId,
    agent_id: AgentId,
}

/// Two price-ordered book sides with FIFO queues per price level.
#[derive(Clone, Debug)]
pub struct OrderBook {
    tick: f64,
    bids: BTreeMap<i64, VecDeque<Resting>>,
    asks: BTreeMap<i64, VecDeque<Resting>>,
    /// Live orders in placement order, drained by `cancel_expired`.
    expiry: VecDeque<(Time, OrderId, Side, i64)>,
    /// Most recent computable mid, seeded with the bootstrap value.
    last_mid: f64,
    resting: usize,
}

impl OrderBook {
    /// Creates an empty book. `initial_mid` is returned by [`mid_price`]
    /// until a mid is computable (both sides non-empty).
    ///
    /// [`mid_price`]: OrderBook::mid_price
    pub fn new(tick: f64, initial_mid: f64) -> Self {
        OrderBook {
            tick,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            expiry: VecDeque::new(),
            last_mid: initial_mid,
            resting: 0,
        }
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    /// Highest resting buy price in ticks.
    pub fn best_bid_ticks(&self) -> Option<i64> {
        self.bids.keys().next_back().copied()
    }

    /// Lowest resting sell price in ticks.
    pub fn best_ask_ticks(&self) -> Option<i64> {
        self.asks.keys().next().copied()
    }

    pub fn best_bid(&self) -> Option<f64> {
        self.best_bid_ticks().map(|t| t as f64 * self.tick)
    }

    pub fn best_ask(&self) -> Option<f64> {
        self.best_ask_ticks().map(|t| t as f64 * self.tick)
    }

    /// Number of resting orders (equals resting shares; one share each).
    pub fn resting_orders(&self) -> usize {
        self.resting
    }

    /// Mid price: the average of best bid and best ask when both sides are
    /// populated (also refreshing the cached value), otherwise the most
    /// recent computable mid. On a fresh book this is the bootstrap value
    /// passed to [`OrderBook::new`].
    pub fn mid_price(&mut self) -> f64 {
        if let (Some(bid), Some(ask)) = (self.best_bid_ticks(), self.best_ask_ticks()) {
            self.last_mid = (bid + ask) as f64 * self.tick / 2.0;
        }
        self.last_mid
    }

    /// Submits a one-share limit order. If it crosses the opposite best
    /// price it executes immediately at the resting order's price and the
    /// resting order is removed; otherwise it rests in FIFO position.
    pub fn submit_limit_order(&mut self, order: Order) -> Option<Trade> {
        match order.side {
            Side::Buy => {
                if let Some(best_ask) = self.best_ask_ticks() {
                    if order.price >= best_ask {
                        let maker = pop_front_level(&mut self.asks, best_ask);
                        self.resting -= 1;
                        return Some(Trade {
                            time: order.placed_at,
                            price: best_ask,
                            buy_agent: order.agent_id,
                            sell_agent: maker.agent_id,
                        });
                    }
                }
            }
            Side::Sell => {
                if let Some(best_bid) = self.best_bid_ticks() {
                    if order.price <= best_bid {
                        let maker = pop_front_level(&mut self.bids, best_bid);
                        self.resting -= 1;
                        return Some(Trade {
                            time: order.placed_at,
                            price: best_bid,
                            buy_agent: maker.agent_id,
                            sell_agent: order.agent_id,
                        });
                    }
                }
            }
        }
        let side_map = match order.side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        side_map.entry(order.price).or_default().push_back(Resting {
            id: order.id,
            agent_id: order.agent_id,
        });
        self.expiry
            .push_back((order.placed_at, order.id, order.side, order.price));
        self.resting += 1;
        None
    }

    /// Removes every resting order with `placed_at <= now - t_c`
    /// (expiry boundary inclusive). Returns the number cancelled.
    ///
    /// Must not be called while a circuit-breaker halt is active; the
    /// simulation loop skips it on halted turns.
    pub fn cancel_expired(&mut self, now: Time, t_c: Time) -> usize {
        let mut cancelled = 0;
        while let Some(&(placed_at, id, side, price)) = self.expiry.front() {
            if placed_at + t_c > now {
                break;
            }
            self.expiry.pop_front();
            let side_map = match side {
                Side::Buy => &mut self.bids,
                Side::Sell => &mut self.asks,
            };
            // The order may already have executed; remove only if resting.
            if let Some(level) = side_map.get_mut(&price) {
                if let Some(pos) = level.iter().position(|r| r.id == id) {
                    level.remove(pos);
                    if level.is_empty() {
                        side_map.remove(&price);
                    }
                    self.resting -= 1;
                    cancelled += 1;
                }
            }
        }
        cancelled
    }

    /// Aggregates resting shares into price bins of `bin_width`, restricted
    /// to prices in `[range_low, range_high)`. Bins are aligned to integer
    /// multiples of the width; empty bins are omitted and rows are sorted
    /// ascending by price.
    pub fn snapshot_bins(
        &self,
        bin_width: f64,
        range_low: f64,
        range_high: f64,
    ) -> Result<Vec<DepthBin>, SimError> {
        if !(bin_width > 0.0) {
            return Err(SimError::arg("bin width must be positive"));
        }
        let width_ticks = (bin_width / self.tick).round() as i64;
        if width_ticks < 1 {
            return Err(SimError::arg("bin width must be at least one tick"));
        }
        let lo_ticks = (range_low / self.tick).round() as i64;
        let hi_ticks = (range_high / self.tick).round() as i64;
        let mut bins: BTreeMap<i64, (u32, u32)> = BTreeMap::new();
        for (&price, level) in &self.asks {
            if price >= lo_ticks && price < hi_ticks {
                bins.entry(price.div_euclid(width_ticks)).or_default().0 += level.len() as u32;
            }
        }
        for (&price, level) in &self.bids {
            if price >= lo_ticks && price < hi_ticks {
                bins.entry(price.div_euclid(width_ticks)).or_default().1 += level.len() as u32;
            }
        }
        Ok(bins
            .into_iter()
            .map(|(idx, (sell, buy))| DepthBin {
                low: (idx * width_ticks) as f64 * self.tick,
                high: ((idx + 1) * width_ticks) as f64 * self.tick,
                sell_shares: sell,
                buy_shares: buy,
            })
            .collect())
    }

    /// Depth snapshot over the whole book.
    pub fn snapshot_bins_all(&self, bin_width: f64) -> Result<Vec<DepthBin>, SimError> {
        self.snapshot_bins(bin_width, f64::MIN, f64::MAX)
    }
}

fn pop_front_level(side_map: &mut BTreeMap<i64, VecDeque<Resting>>, price: i64) -> Resting {
    let level = side_map.get_mut(&price).expect("level exists at best price");
    let maker = level.pop_front().expect("best level is non-empty");
    if level.is_empty() {
        side_map.remove(&price);
    }
    maker
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(id: OrderId, side: Side, price: i64, placed_at: Time) -> Order {
        Order {
            id,
            agent_id: id as AgentId,
            side,
            price,
            placed_at,
        }
    }

    #[test]
    fn tick_rounding_buy_floors_sell_ceils() {
        assert_eq!(round_to_tick(100.018, Side::Buy, 0.01).unwrap(), 100.01);
        assert_eq!(round_to_tick(100.012, Side::Sell, 0.01).unwrap(), 100.02);
    }

    #[test]
    fn tick_rounding_aligned_price_is_identity() {
        assert_eq!(round_to_tick(100.00, Side::Buy, 0.01).unwrap(), 100.00);
        assert_eq!(round_to_tick(100.00, Side::Sell, 0.01).unwrap(), 100.00);
        // 9999.99 / 0.01 lands a hair off the grid in floats; it must snap.
        assert_eq!(ticks_from_price(9999.99, Side::Buy, 0.01).unwrap(), 999_999);
        assert_eq!(ticks_from_price(9999.99, Side::Sell, 0.01).unwrap(), 999_999);
    }

    #[test]
    fn tick_rounding_rejects_nonpositive_inputs() {
        assert!(round_to_tick(-1.0, Side::Buy, 0.01).is_err());
        assert!(round_to_tick(0.0, Side::Buy, 0.01).is_err());
        assert!(round_to_tick(10.0, Side::Buy, 0.0).is_err());
        assert!(round_to_tick(10.0, Side::Buy, -0.01).is_err());
    }

    #[test]
    fn crossing_buy_executes_at_resting_price() {
        let mut book = OrderBook::new(0.01, 100.0);
        assert!(book.submit_limit_order(order(1, Side::Sell, 10001, 1)).is_none());
        let trade = book.submit_limit_order(order(2, Side::Buy, 10002, 2)).unwrap();
        assert_eq!(trade.price, 10001);
        assert_eq!(trade.buy_agent, 2);
        assert_eq!(trade.sell_agent, 1);
        assert_eq!(book.best_ask_ticks(), None);
        assert_eq!(book.resting_orders(), 0);
    }

    #[test]
    fn non_crossing_buy_rests() {
        let mut book = OrderBook::new(0.01, 100.0);
        book.submit_limit_order(order(1, Side::Sell, 10001, 1));
        assert!(book.submit_limit_order(order(2, Side::Buy, 10000, 2)).is_none());
        assert_eq!(book.best_bid_ticks(), Some(10000));
        assert_eq!(book.best_ask_ticks(), Some(10001));
        assert_eq!(book.resting_orders(), 2);
    }

    #[test]
    fn sell_into_empty_book_rests() {
        let mut book = OrderBook::new(0.01, 100.0);
        assert!(book.submit_limit_order(order(1, Side::Sell, 10005, 1)).is_none());
        assert_eq!(book.best_ask_ticks(), Some(10005));
    }

    #[test]
    fn sell_at_best_bid_crosses() {
        let mut book = OrderBook::new(0.01, 100.0);
        book.submit_limit_order(order(1, Side::Buy, 9990, 1));
        let trade = book.submit_limit_order(order(2, Side::Sell, 9990, 2)).unwrap();
        assert_eq!(trade.price, 9990);
        assert_eq!(trade.buy_agent, 1);
    }

    #[test]
    fn mid_price_average_and_fallbacks() {
        let mut book = OrderBook::new(1.0, 10000.0);
        // Fresh book, both sides empty: bootstrap value.
        assert_eq!(book.mid_price(), 10000.0);
        book.submit_limit_order(order(1, Side::Buy, 9999, 1));
        book.submit_limit_order(order(2, Side::Sell, 10001, 2));
        assert_eq!(book.mid_price(), 10000.0);
        // Move the book so a fresh mid is cached, then empty one side.
        book.submit_limit_order(order(3, Side::Sell, 9999, 3)).unwrap();
        book.submit_limit_order(order(4, Side::Buy, 9899, 4));
        assert_eq!(book.mid_price(), 9950.0);
        book.submit_limit_order(order(5, Side::Sell, 9899, 5)).unwrap();
        // Bid side now empty: last computable mid.
        assert_eq!(book.best_bid_ticks(), None);
        assert_eq!(book.mid_price(), 9950.0);
    }

    #[test]
    fn cancel_boundary_is_inclusive() {
        let mut book = OrderBook::new(0.01, 100.0);
        book.submit_limit_order(order(1, Side::Buy, 9000, 5000));
        book.submit_limit_order(order(2, Side::Buy, 9001, 5001));
        let cancelled = book.cancel_expired(15000, 10000);
        assert_eq!(cancelled, 1);
        assert_eq!(book.best_bid_ticks(), Some(9001));
    }

    #[test]
    fn cancel_on_empty_book_is_zero() {
        let mut book = OrderBook::new(0.01, 100.0);
        assert_eq!(book.cancel_expired(15000, 10000), 0);
    }

    #[test]
    fn cancel_skips_already_executed_orders() {
        let mut book = OrderBook::new(0.01, 100.0);
        book.submit_limit_order(order(1, Side::Sell, 10001, 1));
        book.submit_limit_order(order(2, Side::Buy, 10001, 2)).unwrap();
        assert_eq!(book.cancel_expired(20000, 10000), 0);
        assert_eq!(book.resting_orders(), 0);
    }

    #[test]
    fn price_time_priority_within_level() {
        let mut book = OrderBook::new(0.01, 100.0);
        book.submit_limit_order(order(1, Side::Sell, 10001, 1));
        book.submit_limit_order(order(2, Side::Sell, 10001, 2));
        book.submit_limit_order(order(3, Side::Sell, 10001, 3));
        let t1 = book.submit_limit_order(order(4, Side::Buy, 10001, 4)).unwrap();
        let t2 = book.submit_limit_order(order(5, Side::Buy, 10001, 5)).unwrap();
        assert_eq!(t1.sell_agent, 1);
        assert_eq!(t2.sell_agent, 2);
    }

    #[test]
    fn snapshot_bins_counts_shares_per_bin() {
        let mut book = OrderBook::new(1.0, 10000.0);
        book.submit_limit_order(order(1, Side::Sell, 9780, 1));
        book.submit_limit_order(order(2, Side::Sell, 9790, 2));
        book.submit_limit_order(order(3, Side::Sell, 9799, 3));
        let bins = book.snapshot_bins(20.0, 9700.0, 9900.0).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].low, 9780.0);
        assert_eq!(bins[0].high, 9800.0);
        assert_eq!(bins[0].sell_shares, 3);
        assert_eq!(bins[0].buy_shares, 0);
    }

    #[test]
    fn snapshot_bins_aligns_to_width_multiples() {
        let mut book = OrderBook::new(1.0, 10000.0);
        book.submit_limit_order(order(1, Side::Buy, 9690, 1));
        let bins = book.snapshot_bins_all(20.0).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].low, 9680.0);
        assert_eq!(bins[0].high, 9700.0);
        assert_eq!(bins[0].buy_shares, 1);
    }

    #[test]
    fn snapshot_of_empty_book_is_empty() {
        let book = OrderBook::new(1.0, 10000.0);
        assert!(book.snapshot_bins_all(20.0).unwrap().is_empty());
        assert!(book.snapshot_bins(0.0, 0.0, 1.0).is_err());
    }
}
