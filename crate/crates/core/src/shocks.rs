//! Forced-sell shocks: the erroneous-order storm and per-agent stop-loss
//! selling.
//!
//! Both shocks replace the agent's normal order for the turn with a
//! one-share sell at the current best bid. Erroneous conversions happen
//! with a constant probability inside a fixed time window. An agent's
//! stop-loss window opens once the mid price drops below its fair-price
//! threshold; within the window the conversion probability decays
//! linearly to zero, and the episode ends for good as soon as the agent
//! has sold once or the window elapses.

use rand::Rng;

use crate::agents::{AgentParams, AgentState};
use crate::error::SimError;
use crate::Time;

/// Erroneous-order window and conversion probability.
#[derive(Clone, Copy, Debug)]
pub struct ErroneousConfig {
    /// First turn of the window (inclusive).
    pub start: Time,
    /// Last turn of the window (inclusive).
    pub end: Time,
    /// Per-order conversion probability inside the window.
    pub prob: f64,
}

impl ErroneousConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.start >= self.end {
            return Err(SimError::config("erroneous window start must precede end"));
        }
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(SimError::config("erroneous probability must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Stop-loss base probability; the per-agent threshold and window live in
/// [`AgentParams`].
#[derive(Clone, Copy, Debug)]
pub struct StopLossConfig {
    /// Conversion probability at the start of an agent's window.
    pub prob: f64,
}

impl StopLossConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(SimError::config("stop-loss probability must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Decides whether this turn's order is converted to a best-bid sell by
/// the erroneous-order process. Consumes one draw inside the window
/// (boundaries inclusive) and none outside, so the draw stream stays
/// aligned across runs that differ only in later branches.
pub fn maybe_convert_erroneous<R: Rng>(cfg: &ErroneousConfig, t: Time, rng: &mut R) -> bool {
    if t < cfg.start || t > cfg.end {
        return false;
    }
    rng.random::<f64>() < cfg.prob
}

/// Advances an agent's stop-loss state at time `t` given the observable
/// mid price. Opens the window when the mid first drops strictly below
/// `P_f * exp(fair_noise) - stop_offset`; marks the agent done once the
/// window has elapsed. One-shot: a done agent never re-triggers.
pub fn update_stop_loss_trigger(
    agent: &AgentParams,
    state: &mut AgentState,
    mid: f64,
    p_f: f64,
    t: Time,
) {
    if state.stop_loss_done {
        return;
    }
    match state.stop_loss_started_at {
        Some(start) => {
            if t >= start + agent.stop_window {
                state.stop_loss_done = true;
            }
        }
        None => {
            let threshold = p_f * agent.fair_noise.exp() - agent.stop_offset;
            if mid < threshold {
                state.stop_loss_started_at = Some(t);
            }
        }
    }
}

/// True while the agent's stop-loss window is open (triggered, not yet
/// done). Callers draw a conversion exactly when this holds.
pub fn stop_loss_active(state: &AgentState) -> bool {
    state.stop_loss_started_at.is_some() && !state.stop_loss_done
}

/// Conversion probability at time `t`: linear decay from the base value at
/// the window start to zero at its end, clamped to `[0, base]`. `None`
/// before the agent has triggered.
pub fn stop_loss_probability(
    agent: &AgentParams,
    state: &AgentState,
    t: Time,
    base: f64,
) -> Option<f64> {
    let start = state.stop_loss_started_at?;
    debug_assert!(t >= start, "probability queried before the window opened");
    let remaining = (start + agent.stop_window).saturating_sub(t) as f64;
    Some((base * remaining / agent.stop_window as f64).clamp(0.0, base))
}

/// Decides whether this turn's order becomes the agent's stop-loss sell.
/// Draws only while the agent's window is open, with the decaying
/// probability; a hit completes the episode, so each agent sells at most
/// once per trigger.
pub fn maybe_convert_stop_loss<R: Rng>(
    agent: &AgentParams,
    state: &mut AgentState,
    t: Time,
    cfg: &StopLossConfig,
    rng: &mut R,
) -> bool {
    if !stop_loss_active(state) {
        return false;
    }
    let p = stop_loss_probability(agent, state, t, cfg.prob)
        .expect("active stop-loss window has a start time");
    if rng.random::<f64>() < p {
        state.stop_loss_done = true;
        true
    } else {
        false
    }
}
