//! Deterministic simulation loop.
//!
//! Time advances by one per agent action (or per skipped action while a
//! circuit breaker halt is active). Agents act round-robin. Each turn:
//! cancel expired orders, update the acting agent's stop-loss state,
//! decide the turn's order (erroneous conversion first, then a stop-loss
//! conversion, otherwise the agent's normal order), pass it through the
//! active regulation transform, submit it, then record the post-trade mid
//! and check the circuit-breaker trigger against it.
//!
//! Randomness uses two independent streams of one seeded generator: one
//! for the agent-population draws, one for per-turn draws. Changing
//! regulation parameters therefore never disturbs the population, and two
//! runs with the same seed share their draw sequence until their
//! trajectories actually diverge.
//!
//! The warm-up phase (`t < cancel_time`), during which the buy/sell rule
//! generates waiting orders around the fundamental value, is treated as
//! market formation: the mid of a still-sparse book is noise, so breaker
//! trigger checks wait for it to end, regulation references fall back to
//! the initial mid until the lookback points at mature history, and the
//! falling-depth scan starts at its end. Order expiry runs on a clock
//! that pauses during circuit-breaker halts, matching the rule that
//! cancellation stops while a halt is in effect.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::agents::{self, AgentParams, AgentState, PopulationParams};
use crate::book::{DepthBin, Order, OrderBook, Side, Trade};
use crate::error::SimError;
use crate::regulation::{
    apply_price_limit, apply_price_limit_v2, reference_price, CircuitBreakerState, PriceHistory,
    RegulationConfig, RegulationKind,
};
use crate::shocks::{self, ErroneousConfig, StopLossConfig};
use crate::{OrderId, Time};

/// RNG stream for the one-time agent population draws.
const STREAM_INIT: u64 = 0;
/// RNG stream for per-turn draws.
const STREAM_TURNS: u64 = 1;

/// Full run configuration. [`SimConfig::paper_defaults`] carries the
/// reference parameter set used throughout the experiments.
#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Minimum price increment.
    pub tick: f64,
    /// Constant fundamental value.
    pub fundamental_price: f64,
    /// Number of turns to simulate.
    pub end_time: Time,
    /// Number of agents acting round-robin.
    pub agent_count: u32,
    pub population: PopulationParams,
    /// Scale of the per-turn noise term and of the fair-price offsets.
    pub noise_scale: f64,
    /// Interpret `noise_scale` as a variance rather than a standard
    /// deviation.
    pub noise_scale_is_variance: bool,
    /// Half-width of the uniform order-price scatter around the expected
    /// price.
    pub order_scatter: f64,
    /// Resting orders are cancelled this many ticks after placement; also
    /// the end of the warm-up phase for the buy/sell decision rule.
    pub cancel_time: Time,
    pub erroneous: ErroneousConfig,
    pub stop_loss: StopLossConfig,
    pub regulation: RegulationConfig,
    pub seed: u64,
    /// Turns at which to capture an order-book depth snapshot.
    pub snapshot_times: Vec<Time>,
    /// Bin width of depth snapshots, in price units.
    pub snapshot_bin_width: f64,
}

impl SimConfig {
    /// The reference parameter set: tick 0.01, fundamental value 10000,
    /// 1000 agents, 150000 turns, erroneous orders on [30000, 60000] with
    /// probability 0.15, and the stop-loss population draws.
    pub fn paper_defaults() -> Self {
        SimConfig {
            tick: 0.01,
            fundamental_price: 10000.0,
            end_time: 150_000,
            agent_count: 1000,
            population: PopulationParams {
                w1_max: 1.0,
                w2_max: 10.0,
                w3_max: 1.0,
                tau_max: 10_000,
                stop_offset_min: 1000.0,
                stop_offset_max: 3000.0,
                stop_window_min: 10_000,
                stop_window_max: 100_000,
            },
            noise_scale: 0.03,
            noise_scale_is_variance: false,
            order_scatter: 1000.0,
            cancel_time: 10_000,
            erroneous: ErroneousConfig {
                start: 30_000,
                end: 60_000,
                prob: 0.15,
            },
            stop_loss: StopLossConfig { prob: 0.35 },
            regulation: RegulationConfig::none(),
            seed: 1,
            snapshot_times: Vec::new(),
            snapshot_bin_width: 20.0,
        }
    }

    /// Standard deviation of the noise draws under the configured
    /// interpretation of `noise_scale`.
    pub fn noise_std(&self) -> f64 {
        if self.noise_scale_is_variance {
            self.noise_scale.sqrt()
        } else {
            self.noise_scale
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.tick > 0.0) || !self.tick.is_finite() {
            return Err(SimError::config("tick must be positive"));
        }
        if !(self.fundamental_price > 0.0) {
            return Err(SimError::config("fundamental price must be positive"));
        }
        if self.end_time == 0 {
            return Err(SimError::config("end time must be positive"));
        }
        if self.agent_count == 0 {
            return Err(SimError::config("agent count must be positive"));
        }
        self.population.validate()?;
        if !(self.noise_scale >= 0.0) {
            return Err(SimError::config("noise scale must be non-negative"));
        }
        if !(self.order_scatter > 0.0) {
            return Err(SimError::config("order scatter must be positive"));
        }
        if self.cancel_time == 0 || self.cancel_time >= self.end_time {
            return Err(SimError::config(
                "cancel time must be positive and below end_time",
            ));
        }
        self.erroneous.validate()?;
        if self.erroneous.start == 0 || self.erroneous.end >= self.end_time {
            return Err(SimError::config(
                "erroneous window must satisfy 0 < start < end < end_time",
            ));
        }
        self.stop_loss.validate()?;
        self.regulation.validate()?;
        if !(self.snapshot_bin_width > 0.0) {
            return Err(SimError::config("snapshot bin width must be positive"));
        }
        if self.snapshot_times.iter().any(|&t| t == 0 || t > self.end_time) {
            return Err(SimError::config("snapshot times must lie in [1, end_time]"));
        }
        Ok(())
    }
}

/// Event counts accumulated over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunCounters {
    /// Orders that reached the book (post-transform).
    pub submitted: u64,
    /// Executed trades.
    pub executed_trades: u64,
    /// Orders removed by expiry.
    pub cancelled: u64,
    /// Turns skipped by an active halt.
    pub halted_turns: u64,
    /// Circuit-breaker activations.
    pub halts_triggered: u64,
    /// Orders converted by the erroneous-order process.
    pub erroneous_conversions: u64,
    /// Orders converted by the stop-loss process.
    pub stop_loss_conversions: u64,
    /// Orders whose price the limit moved.
    pub clamped_orders: u64,
    /// Orders cancelled by the second price-limit variant.
    pub v2_cancelled_orders: u64,
    /// Converted sells dropped because no bids were resting.
    pub discarded_no_bid: u64,
}

/// Depth snapshot taken at a configured turn.
#[derive(Clone, Debug)]
pub struct BookSnapshot {
    pub time: Time,
    pub best_bid: Option<f64>,
    pub best_ask: Option<f64>,
    pub bins: Vec<DepthBin>,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub seed: u64,
    /// Configuration the run was produced with.
    pub config: SimConfig,
    /// Mid-price series: `mids[t]` is the mid after turn `t`, with
    /// `mids[0]` the initial value, so the vector has `end_time + 1`
    /// entries and indices equal turn numbers.
    pub mids: Vec<f64>,
    pub trades: Vec<Trade>,
    pub snapshots: Vec<BookSnapshot>,
    /// Fundamental value minus the lowest mid reached after warm-up
    /// (turns before `cancel_time` carry sparse-book mids and are not
    /// scanned). Never negative.
    pub falling_depth: f64,
    /// Turn of the (first) lowest post-warm-up mid; 0 when no mid dips
    /// below the fundamental value.
    pub min_mid_time: Time,
    pub counters: RunCounters,
    /// Turn of the first clamp, variant cancellation, or halt; `None`
    /// when the regulation never bound, in which case the trajectory
    /// matches an unregulated run with the same seed exactly.
    pub first_regulation_effect: Option<Time>,
}

struct Sim<'c> {
    cfg: &'c SimConfig,
    agents: Vec<AgentParams>,
    states: Vec<AgentState>,
    book: OrderBook,
    history: PriceHistory,
    breaker: CircuitBreakerState,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
    trades: Vec<Trade>,
    counters: RunCounters,
    first_regulation_effect: Option<Time>,
    next_order_id: OrderId,
    /// Non-halted turns elapsed; the clock order expiry runs on. Halted
    /// time does not age resting orders, so a halt never mass-expires the
    /// book on its first post-halt turn.
    active_time: Time,
}

/// Runs one simulation to completion. Identical `(config, seed)` pairs
/// produce bit-identical results.
pub fn run_simulation(cfg: &SimConfig) -> Result<RunResult, SimError> {
    cfg.validate()?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(STREAM_INIT);
    let agents = agents::init_agents(cfg.agent_count, &cfg.population, cfg.noise_std(), &mut init_rng)?;

    let mut turn_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    turn_rng.set_stream(STREAM_TURNS);

    let noise = Normal::new(0.0, cfg.noise_std())
        .map_err(|e| SimError::config(format!("noise distribution: {e}")))?;

    let mut sim = Sim {
        states: vec![AgentState::default(); agents.len()],
        agents,
        book: OrderBook::new(cfg.tick, cfg.fundamental_price),
        history: PriceHistory::new(cfg.fundamental_price, cfg.end_time as usize + 1),
        breaker: CircuitBreakerState::default(),
        rng: turn_rng,
        noise,
        trades: Vec::new(),
        counters: RunCounters::default(),
        first_regulation_effect: None,
        next_order_id: 0,
        active_time: 0,
        cfg,
    };

    let mut snapshot_times: Vec<Time> = cfg.snapshot_times.clone();
    snapshot_times.sort_unstable();
    snapshot_times.dedup();
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let mut next_snapshot = snapshot_times.iter().copied().peekable();

    let breaker_active = cfg.regulation.kind == RegulationKind::CircuitBreaker;
    for t in 1..=cfg.end_time {
        if breaker_active && sim.breaker.is_halted(t) {
            // Halted turn: time passes, nothing is placed or cancelled and
            // the mid cannot move.
            sim.counters.halted_turns += 1;
            sim.history.record(t, sim.history.latest());
        } else {
            sim.turn(t)?;
        }
        if next_snapshot.peek() == Some(&t) {
            next_snapshot.next();
            snapshots.push(BookSnapshot {
                time: t,
                best_bid: sim.book.best_bid(),
                best_ask: sim.book.best_ask(),
                bins: sim.book.snapshot_bins_all(cfg.snapshot_bin_width)?,
            });
        }
    }

    let mids = sim.history.into_series();
    // The falling depth measures the crash, so the scan starts once the
    // warm-up has filled the book; before that the mid is an artifact of
    // a handful of scattered orders.
    let scan_from = cfg.cancel_time.min(cfg.end_time) as usize;
    let (mut min_mid, mut min_mid_time) = (cfg.fundamental_price, 0);
    for (t, &mid) in mids.iter().enumerate().skip(scan_from) {
        if mid < min_mid {
            min_mid = mid;
            min_mid_time = t as Time;
        }
    }

    Ok(RunResult {
        seed: cfg.seed,
        config: cfg.clone(),
        falling_depth: cfg.fundamental_price - min_mid,
        min_mid_time,
        mids,
        trades: sim.trades,
        snapshots,
        counters: sim.counters,
        first_regulation_effect: sim.first_regulation_effect,
    })
}

impl Sim<'_> {
    /// One non-halted turn: steps 3-7 of the loop.
    fn turn(&mut self, t: Time) -> Result<(), SimError> {
        let cfg = self.cfg;
        self.active_time += 1;
        self.counters.cancelled += self.book.cancel_expired(self.active_time, cfg.cancel_time) as u64;

        if let Some((side, price)) = self.agent_turn(t)? {
            self.next_order_id += 1;
            // placed_at carries the expiry clock; trades are re-stamped
            // with wall time below.
            let order = Order {
                id: self.next_order_id,
                agent_id: ((t - 1) % cfg.agent_count as u64 + 1) as u32,
                side,
                price,
                placed_at: self.active_time,
            };
            self.counters.submitted += 1;
            if let Some(trade) = self.book.submit_limit_order(order) {
                self.counters.executed_trades += 1;
                self.trades.push(Trade { time: t, ..trade });
            }
        }

        let mid = self.book.mid_price();
        self.history.record(t, mid);

        // No trigger checks during warm-up: while waiting orders are still
        // being generated the mid is a sparse-book artifact, and a halt
        // here would burn the bootstrap phase.
        if cfg.regulation.kind == RegulationKind::CircuitBreaker
            && t >= cfg.cancel_time
            && !self.breaker.is_halted(t)
        {
            let reference = self.regulation_reference(t);
            if self.breaker.check_trigger(
                mid,
                reference,
                cfg.regulation.band,
                t,
                cfg.regulation.halt_duration,
            ) {
                self.counters.halts_triggered += 1;
                self.note_regulation_effect(t);
            }
        }
        Ok(())
    }

    /// Reference price for the regulation band: the mid `lookback` ticks
    /// ago once that history is past warm-up, otherwise the initial mid.
    /// Sparse-book warm-up mids would otherwise feed the band for a full
    /// lookback after they were recorded.
    fn regulation_reference(&self, t: Time) -> f64 {
        let cfg = self.cfg;
        if t < cfg.regulation.lookback + cfg.cancel_time {
            cfg.fundamental_price
        } else {
            reference_price(&self.history, t, cfg.regulation.lookback)
        }
    }

    /// Decides and transforms the acting agent's order for turn `t`.
    /// Returns the order actually headed for the book, or `None` when the
    /// turn produced nothing (converted sell with no bids, or an order
    /// cancelled by the second price-limit variant).
    fn agent_turn(&mut self, t: Time) -> Result<Option<(Side, i64)>, SimError> {
        let cfg = self.cfg;
        let idx = ((t - 1) % cfg.agent_count as u64) as usize;
        let p_prev = self.history.latest();

        shocks::update_stop_loss_trigger(
            &self.agents[idx],
            &mut self.states[idx],
            p_prev,
            cfg.fundamental_price,
            t,
        );

        // Erroneous conversion takes precedence; if it fires, the
        // stop-loss draw is skipped for the turn.
        // Erroneous conversion takes precedence; if it fires, the
        // stop-loss draw is skipped for the turn.
        let converted = if shocks::maybe_convert_erroneous(&cfg.erroneous, t, &mut self.rng) {
            self.counters.erroneous_conversions += 1;
            true
        } else if shocks::maybe_convert_stop_loss(
            &self.agents[idx],
            &mut self.states[idx],
            t,
            &cfg.stop_loss,
            &mut self.rng,
        ) {
            self.counters.stop_loss_conversions += 1;
            true
        } else {
            false
        };

        let raw: (Side, i64) = if converted {
            match self.book.best_bid_ticks() {
                Some(best_bid) => (Side::Sell, best_bid),
                None => {
                    // No bids to hit: the converted sell is dropped and the
                    // turn still consumes time.
                    self.counters.discarded_no_bid += 1;
                    return Ok(None);
                }
            }
        } else {
            let agent = &self.agents[idx];
            let eps = self.noise.sample(&mut self.rng);
            let p_past = self.history.at(t.saturating_sub(agent.horizon + 1));
            let r = agents::expected_return(agent, cfg.fundamental_price, p_prev, p_past, eps, t)?;
            let (ticks, side) = agents::order_price_and_side(
                r,
                p_prev,
                cfg.order_scatter,
                t,
                cfg.cancel_time,
                cfg.fundamental_price,
                cfg.tick,
                &mut self.rng,
            )?;
            (side, ticks)
        };

        let (side, price) = raw;
        let transformed = match cfg.regulation.kind {
            RegulationKind::None | RegulationKind::CircuitBreaker => Some(price),
            RegulationKind::PriceLimit => {
                let reference = self.regulation_reference(t);
                let clamped =
                    apply_price_limit(side, price, reference, cfg.regulation.band, cfg.tick);
                if clamped != price {
                    self.counters.clamped_orders += 1;
                    self.note_regulation_effect(t);
                }
                Some(clamped)
            }
            RegulationKind::PriceLimitV2 => {
                let reference = self.regulation_reference(t);
                let kept =
                    apply_price_limit_v2(side, price, reference, cfg.regulation.band, cfg.tick);
                if kept.is_none() {
                    self.counters.v2_cancelled_orders += 1;
                    self.note_regulation_effect(t);
                }
                kept
            }
        };
        Ok(transformed.map(|p| (side, p)))
    }

    fn note_regulation_effect(&mut self, t: Time) {
        if self.first_regulation_effect.is_none() {
            self.first_regulation_effect = Some(t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_defaults_validate() {
        assert!(SimConfig::paper_defaults().validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_windows() {
        let mut cfg = SimConfig::paper_defaults();
        cfg.end_time = 50_000; // erroneous window must end before end_time
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::paper_defaults();
        cfg.erroneous.start = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::paper_defaults();
        cfg.agent_count = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::paper_defaults();
        cfg.snapshot_times = vec![200_000];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_rejects_invalid_config_before_running() {
        let mut cfg = SimConfig::paper_defaults();
        cfg.tick = 0.0;
        assert!(run_simulation(&cfg).is_err());
    }

    #[test]
    fn noise_scale_interpretation_switch() {
        let mut cfg = SimConfig::paper_defaults();
        assert_eq!(cfg.noise_std(), 0.03);
        cfg.noise_scale_is_variance = true;
        assert!((cfg.noise_std() - 0.03f64.sqrt()).abs() < 1e-15);
    }
}
