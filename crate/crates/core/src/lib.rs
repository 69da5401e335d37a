//! Agent-based simulation of a single-stock continuous double auction,
//! used to compare trading regulations (price limit, price-limit variant
//! that cancels out-of-band orders, and circuit breaker) under erroneous
//! order storms and stop-loss selling.
//!
//! The crate is organised around the simulation pipeline:
//!
//! - [`book`]: the limit order book (price-time priority, tick rounding,
//!   expiry-based cancellation, depth snapshots).
//! - [`agents`]: the heterogeneous trader population and its expectation /
//!   order-pricing rules.
//! - [`shocks`]: erroneous-order and stop-loss conversions that force
//!   sells at the best bid.
//! - [`regulation`]: the three regulation mechanisms as order/flow
//!   transforms plus the mid-price history they reference.
//! - [`engine`]: the deterministic turn loop tying everything together.
//! - [`stats`]: falling depth, falling speed, volatility, effectiveness
//!   predicates, and stylized-fact statistics.
//!
//! Runs are fully deterministic: a `(config, seed)` pair replays to
//! bit-identical results, and the RNG is split into independent streams so
//! that regulation parameters can change without disturbing the agent
//! population draws.

pub mod agents;
pub mod book;
pub mod engine;
pub mod error;
pub mod regulation;
pub mod shocks;
pub mod stats;

pub use agents::{AgentParams, AgentState, PopulationParams};
pub use book::{round_to_tick, DepthBin, Order, OrderBook, Side, Trade};
pub use engine::{run_simulation, BookSnapshot, RunCounters, RunResult, SimConfig};
pub use error::SimError;
pub use regulation::{CircuitBreakerState, PriceHistory, RegulationConfig, RegulationKind};
pub use shocks::{ErroneousConfig, StopLossConfig};

/// Simulation time in turns (one agent action, or one skipped action while
/// a circuit breaker is active, per tick).
pub type Time = u64;

/// Identifier of an order within one run.
pub type OrderId = u64;

/// Agent identifier, 1-based as agents act in round-robin order.
pub type AgentId = u32;
