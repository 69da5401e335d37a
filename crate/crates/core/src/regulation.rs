//! Regulation mechanisms as order/flow transforms.
//!
//! All three mechanisms compare against a reference price: the mid price
//! `lookback` ticks ago. The price limit clamps sells below the band back
//! up to its lower edge (and buys above the band down to its upper edge);
//! the second price-limit variant cancels such orders outright; the
//! circuit breaker leaves orders untouched but halts all placement and
//! cancellation for a fixed duration once the mid itself leaves the band.

use std::str::FromStr;

use crate::book::{ticks_from_price, Side};
use crate::error::SimError;
use crate::Time;

/// Which regulation mechanism is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegulationKind {
    None,
    PriceLimit,
    PriceLimitV2,
    CircuitBreaker,
}

impl RegulationKind {
    /// Stable lowercase token, used in config files and output paths.
    pub fn token(&self) -> &'static str {
        match self {
            RegulationKind::None => "none",
            RegulationKind::PriceLimit => "limit",
            RegulationKind::PriceLimitV2 => "limit_v2",
            RegulationKind::CircuitBreaker => "breaker",
        }
    }
}

impl FromStr for RegulationKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(RegulationKind::None),
            "limit" => Ok(RegulationKind::PriceLimit),
            "limit_v2" => Ok(RegulationKind::PriceLimitV2),
            "breaker" => Ok(RegulationKind::CircuitBreaker),
            other => Err(SimError::config(format!(
                "unknown regulation '{other}' (expected none|limit|limit_v2|breaker)"
            ))),
        }
    }
}

/// Active mechanism plus its parameters.
#[derive(Clone, Copy, Debug)]
pub struct RegulationConfig {
    pub kind: RegulationKind,
    /// Reference lookback in ticks (the paper's `tr`).
    pub lookback: Time,
    /// Band half-width in price units (the paper's `Pr`). `f64::INFINITY`
    /// is a valid sentinel that disables the mechanism.
    pub band: f64,
    /// Halt duration in ticks (circuit breaker only; the paper's `tr2`).
    pub halt_duration: Time,
}

impl RegulationConfig {
    /// No regulation; the transform is the identity.
    pub fn none() -> Self {
        RegulationConfig {
            kind: RegulationKind::None,
            lookback: 1,
            band: f64::INFINITY,
            halt_duration: 1,
        }
    }

    /// Builds a config for `kind`. The halt duration defaults to the
    /// lookback when not given.
    pub fn new(
        kind: RegulationKind,
        lookback: Time,
        band: f64,
        halt_duration: Option<Time>,
    ) -> Self {
        RegulationConfig {
            kind,
            lookback,
            band,
            halt_duration: halt_duration.unwrap_or(lookback),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.kind == RegulationKind::None {
            return Ok(());
        }
        if self.lookback < 1 {
            return Err(SimError::config("regulation lookback must be at least 1"));
        }
        if !(self.band > 0.0) {
            return Err(SimError::config("regulation band must be positive"));
        }
        if self.kind == RegulationKind::CircuitBreaker && self.halt_duration < 1 {
            return Err(SimError::config("halt duration must be at least 1"));
        }
        Ok(())
    }
}

/// Mid-price history, one entry per turn. Slot `t` holds the mid after
/// turn `t`; slot 0 holds the initial (bootstrap) mid.
#[derive(Clone, Debug)]
pub struct PriceHistory {
    mids: Vec<f64>,
}

impl PriceHistory {
    pub fn new(initial_mid: f64, capacity: usize) -> Self {
        let mut mids = Vec::with_capacity(capacity.max(1));
        mids.push(initial_mid);
        PriceHistory { mids }
    }

    /// Records the mid for turn `t`. Exactly one record per turn, in order.
    pub fn record(&mut self, t: Time, mid: f64) {
        debug_assert_eq!(t as usize, self.mids.len(), "one record per turn");
        self.mids.push(mid);
    }

    /// Mid after turn `t` (slot 0 is the initial mid).
    pub fn at(&self, t: Time) -> f64 {
        self.mids[t as usize]
    }

    /// Most recently recorded mid.
    pub fn latest(&self) -> f64 {
        *self.mids.last().expect("history is never empty")
    }

    /// Number of recorded turns, not counting the initial slot.
    pub fn turns(&self) -> Time {
        (self.mids.len() - 1) as Time
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mids
    }

    pub fn into_series(self) -> Vec<f64> {
        self.mids
    }
}

/// Reference price for turn `t`: the mid `lookback` ticks ago, or the
/// initial mid while the history is shorter than the lookback.
pub fn reference_price(history: &PriceHistory, t: Time, lookback: Time) -> f64 {
    history.at(t.saturating_sub(lookback))
}

/// Price limit: sells priced below `reference - band` move up to that
/// lower edge (tick-rounded up, keeping the order on-grid); buys priced
/// above `reference + band` move down to the upper edge (rounded down).
/// In-band orders pass through unchanged.
pub fn apply_price_limit(
    side: Side,
    price_ticks: i64,
    reference: f64,
    band: f64,
    tick: f64,
) -> i64 {
    let price = price_ticks as f64 * tick;
    match side {
        Side::Sell => {
            let lower = reference - band;
            if price < lower {
                ticks_from_price(lower, Side::Sell, tick)
                    .expect("band edge is positive when a positive price is below it")
            } else {
                price_ticks
            }
        }
        Side::Buy => {
            let upper = reference + band;
            if price > upper {
                ticks_from_price(upper, Side::Buy, tick)
                    .expect("band upper edge is positive")
            } else {
                price_ticks
            }
        }
    }
}

/// Price limit, cancelling variant: out-of-band orders (per the same
/// domains as [`apply_price_limit`]) are dropped entirely; in-band orders
/// pass through unchanged.
pub fn apply_price_limit_v2(
    side: Side,
    price_ticks: i64,
    reference: f64,
    band: f64,
    tick: f64,
) -> Option<i64> {
    let price = price_ticks as f64 * tick;
    match side {
        Side::Sell if price < reference - band => None,
        Side::Buy if price > reference + band => None,
        _ => Some(price_ticks),
    }
}

/// Circuit-breaker halt state.
#[derive(Clone, Copy, Debug, Default)]
pub struct CircuitBreakerState {
    halted_until: Option<Time>,
}

impl CircuitBreakerState {
    /// True while placement and cancellation are halted. The halt covers
    /// turns strictly before `halted_until`.
    pub fn is_halted(&self, t: Time) -> bool {
        matches!(self.halted_until, Some(until) if t < until)
    }

    /// Checks the post-trade mid against the band and starts a halt of
    /// `halt_duration` ticks when the mid is strictly outside it. The
    /// breaker re-arms after every expiry. Returns whether a halt started.
    pub fn check_trigger(
        &mut self,
        mid: f64,
        reference: f64,
        band: f64,
        t: Time,
        halt_duration: Time,
    ) -> bool {
        debug_assert!(!self.is_halted(t), "trigger checked during a halt");
        if mid < reference - band || mid > reference + band {
            self.halted_until = Some(t + halt_duration);
            true
        } else {
            false
        }
    }

    pub fn halted_until(&self) -> Option<Time> {
        self.halted_until
    }
}
