//! Heterogeneous trader population.
//!
//! Each agent blends a fundamental strategy (pull toward the fundamental
//! value), a chartist strategy (extrapolate the historical return over its
//! own horizon), and noise into an expected log-return, converts that into
//! an expected price, scatters a one-share order price uniformly around it,
//! and buys below / sells above the expected price. During the warm-up
//! phase (`t < t_c`) the buy/sell decision compares against the fundamental
//! value instead, so both book sides fill with waiting orders before any
//! trading pressure exists.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::book::{ticks_from_price, Side};
use crate::error::SimError;
use crate::Time;

/// Ranges for the per-agent parameter draws.
#[derive(Clone, Copy, Debug)]
pub struct PopulationParams {
    /// Upper bound of the fundamental-strategy weight draw.
    pub w1_max: f64,
    /// Upper bound of the chartist-strategy weight draw.
    pub w2_max: f64,
    /// Upper bound of the noise-strategy weight draw.
    pub w3_max: f64,
    /// Upper bound of the chartist horizon draw.
    pub tau_max: Time,
    /// Bounds of the stop-loss threshold offset draw (price units).
    pub stop_offset_min: f64,
    pub stop_offset_max: f64,
    /// Bounds of the stop-loss re-estimation window draw (ticks).
    pub stop_window_min: Time,
    pub stop_window_max: Time,
}

impl PopulationParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.w1_max > 0.0 && self.w2_max > 0.0 && self.w3_max > 0.0) {
            return Err(SimError::config("strategy weight maxima must be positive"));
        }
        if self.tau_max < 1 {
            return Err(SimError::config("tau_max must be at least 1"));
        }
        if !(self.stop_offset_min < self.stop_offset_max) {
            return Err(SimError::config(
                "stop_offset_min must be below stop_offset_max",
            ));
        }
        if self.stop_window_min >= self.stop_window_max || self.stop_window_min == 0 {
            return Err(SimError::config(
                "stop window bounds must satisfy 0 < min < max",
            ));
        }
        Ok(())
    }
}

/// Immutable per-agent strategy parameters, drawn once at initialization.
#[derive(Clone, Copy, Debug)]
pub struct AgentParams {
    /// Fundamental strategy weight.
    pub w_fundamental: f64,
    /// Chartist strategy weight.
    pub w_chartist: f64,
    /// Noise strategy weight.
    pub w_noise: f64,
    /// Chartist horizon in ticks.
    pub horizon: Time,
    /// Log-offset of this agent's fair-price estimate from the fundamental
    /// value: the agent treats `P_f * exp(fair_noise)` as fair.
    pub fair_noise: f64,
    /// Stop-loss threshold offset below the fair price (price units).
    pub stop_offset: f64,
    /// Length of the stop-loss re-estimation window (ticks).
    pub stop_window: Time,
}

impl AgentParams {
    fn weight_sum(&self) -> f64 {
        self.w_fundamental + self.w_chartist + self.w_noise
    }
}

/// Mutable stop-loss state, owned by the simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AgentState {
    /// Turn at which this agent's stop-loss window opened.
    pub stop_loss_started_at: Option<Time>,
    /// Set once the episode is over, either because the agent placed its
    /// stop-loss sell or because the window elapsed. One-shot: the agent
    /// never re-triggers.
    pub stop_loss_done: bool,
}

/// Draws `n` independent agents. The draw order per agent is fixed
/// (weights, horizon, fair noise, stop offset, stop window) so populations
/// replay exactly for a given RNG state.
pub fn init_agents<R: Rng>(
    n: u32,
    population: &PopulationParams,
    noise_std: f64,
    rng: &mut R,
) -> Result<Vec<AgentParams>, SimError> {
    if n == 0 {
        return Err(SimError::arg("agent count must be positive"));
    }
    population.validate()?;
    if !(noise_std >= 0.0) {
        return Err(SimError::arg("noise scale must be non-negative"));
    }
    let fair_dist = Normal::new(0.0, noise_std)
        .map_err(|e| SimError::config(format!("noise distribution: {e}")))?;
    let mut agents = Vec::with_capacity(n as usize);
    for _ in 0..n {
        agents.push(AgentParams {
            w_fundamental: rng.random::<f64>() * population.w1_max,
            w_chartist: rng.random::<f64>() * population.w2_max,
            w_noise: rng.random::<f64>() * population.w3_max,
            horizon: rng.random_range(1..=population.tau_max),
            fair_noise: fair_dist.sample(rng),
            stop_offset: population.stop_offset_min
                + rng.random::<f64>() * (population.stop_offset_max - population.stop_offset_min),
            stop_window: rng.random_range(population.stop_window_min..=population.stop_window_max),
        });
    }
    Ok(agents)
}

/// Expected log-return: weighted mix of the fundamental pull
/// `ln(P_f / P_prev)`, the chartist extrapolation `ln(P_prev / P_past)`,
/// and a noise draw, normalized by the weight sum. The chartist term is
/// zero until the agent's horizon has history (`t > horizon`).
pub fn expected_return(
    agent: &AgentParams,
    p_f: f64,
    p_prev: f64,
    p_past: f64,
    noise: f64,
    t: Time,
) -> Result<f64, SimError> {
    if !(p_f > 0.0) || !(p_prev > 0.0) {
        return Err(SimError::arg("prices must be positive"));
    }
    let chartist = if t > agent.horizon {
        if !(p_past > 0.0) {
            return Err(SimError::arg("past price must be positive"));
        }
        (p_prev / p_past).ln()
    } else {
        0.0
    };
    Ok(
        (agent.w_fundamental * (p_f / p_prev).ln() + agent.w_chartist * chartist
            + agent.w_noise * noise)
            / agent.weight_sum(),
    )
}

/// Scatters an order price uniformly on `(P_e - P_d, P_e + P_d)` around the
/// expected price `P_e = P_prev * exp(r)` and decides the side: buy when
/// the order price is below the expected price, sell when above. During
/// warm-up (`t < t_c`) the comparison uses the fundamental value instead.
/// An exact tie redraws the scatter. The returned price is tick-rounded
/// per side.
pub fn order_price_and_side<R: Rng>(
    r: f64,
    p_prev: f64,
    p_d: f64,
    t: Time,
    t_c: Time,
    p_f: f64,
    tick: f64,
    rng: &mut R,
) -> Result<(i64, Side), SimError> {
    if !(p_prev > 0.0) || !(p_d > 0.0) {
        return Err(SimError::arg("p_prev and p_d must be positive"));
    }
    let p_e = p_prev * r.exp();
    let reference = if t < t_c { p_f } else { p_e };
    loop {
        let rho: f64 = rng.random();
        let p_o = p_e + p_d * (2.0 * rho - 1.0);
        let side = if reference > p_o {
            Side::Buy
        } else if reference < p_o {
            Side::Sell
        } else {
            continue;
        };
        return Ok((ticks_from_price(p_o, side, tick)?, side));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper_population() -> PopulationParams {
        PopulationParams {
            w1_max: 1.0,
            w2_max: 10.0,
            w3_max: 1.0,
            tau_max: 10000,
            stop_offset_min: 1000.0,
            stop_offset_max: 3000.0,
            stop_window_min: 10000,
            stop_window_max: 100000,
        }
    }

    fn equal_weights() -> AgentParams {
        AgentParams {
            w_fundamental: 1.0,
            w_chartist: 1.0,
            w_noise: 1.0,
            horizon: 100,
            fair_noise: 0.0,
            stop_offset: 2000.0,
            stop_window: 50000,
        }
    }

    #[test]
    fn init_draws_within_bounds() {
        let pop = paper_population();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let agents = init_agents(1000, &pop, 0.03, &mut rng).unwrap();
        assert_eq!(agents.len(), 1000);
        for a in &agents {
            assert!(a.w_fundamental >= 0.0 && a.w_fundamental < pop.w1_max);
            assert!(a.w_chartist >= 0.0 && a.w_chartist < pop.w2_max);
            assert!(a.w_noise >= 0.0 && a.w_noise < pop.w3_max);
            assert!((1..=pop.tau_max).contains(&a.horizon));
            assert!(a.stop_offset >= pop.stop_offset_min && a.stop_offset <= pop.stop_offset_max);
            assert!((pop.stop_window_min..=pop.stop_window_max).contains(&a.stop_window));
        }
    }

    #[test]
    fn init_single_agent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let agents = init_agents(1, &paper_population(), 0.03, &mut rng).unwrap();
        assert_eq!(agents.len(), 1);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let pop = paper_population();
        let a = init_agents(50, &pop, 0.03, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = init_agents(50, &pop, 0.03, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.w_fundamental, y.w_fundamental);
            assert_eq!(x.horizon, y.horizon);
            assert_eq!(x.fair_noise, y.fair_noise);
        }
    }

    #[test]
    fn init_rejects_bad_ranges() {
        let mut pop = paper_population();
        pop.stop_offset_min = 3000.0;
        pop.stop_offset_max = 1000.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(init_agents(10, &pop, 0.03, &mut rng).is_err());
        assert!(init_agents(0, &paper_population(), 0.03, &mut rng).is_err());
    }

    #[test]
    fn expected_return_vanishes_at_equilibrium() {
        let r = expected_return(&equal_weights(), 10000.0, 10000.0, 10000.0, 0.0, 500).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn expected_return_matches_hand_evaluation() {
        // Only the fundamental term is non-zero: ln(10000/9900) / 3.
        let r = expected_return(&equal_weights(), 10000.0, 9900.0, 9900.0, 0.0, 500).unwrap();
        assert_relative_eq!(r, 0.0033501119511671473, max_relative = 1e-12);
    }

    #[test]
    fn expected_return_weight_scaling_invariance() {
        let base = AgentParams {
            w_fundamental: 1.0,
            w_chartist: 2.0,
            w_noise: 0.5,
            ..equal_weights()
        };
        let doubled = AgentParams {
            w_fundamental: 2.0,
            w_chartist: 4.0,
            w_noise: 1.0,
            ..base
        };
        // Power-of-two scaling is exact in floating point.
        let a = expected_return(&base, 10000.0, 9950.0, 9800.0, 0.7, 500).unwrap();
        let b = expected_return(&doubled, 10000.0, 9950.0, 9800.0, 0.7, 500).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chartist_term_zero_before_horizon() {
        let agent = AgentParams {
            w_fundamental: 0.0000001,
            w_chartist: 5.0,
            ..equal_weights()
        };
        // At t <= horizon the chartist term must not contribute even though
        // the past price would imply a large historical return.
        let early = expected_return(&agent, 10000.0, 10000.0, 5000.0, 0.0, agent.horizon).unwrap();
        assert_eq!(early, 0.0);
        let late =
            expected_return(&agent, 10000.0, 10000.0, 5000.0, 0.0, agent.horizon + 1).unwrap();
        assert!(late > 0.0);
    }

    #[test]
    fn expected_return_rejects_nonpositive_prices() {
        assert!(expected_return(&equal_weights(), 10000.0, 0.0, 9900.0, 0.0, 500).is_err());
        assert!(expected_return(&equal_weights(), -1.0, 9900.0, 9900.0, 0.0, 500).is_err());
        assert!(expected_return(&equal_weights(), 10000.0, 9900.0, 0.0, 0.0, 500).is_err());
    }

    #[test]
    fn fundamentalist_pulls_toward_fundamental() {
        let agent = AgentParams {
            w_chartist: 0.0,
            w_noise: 0.0,
            ..equal_weights()
        };
        let r = expected_return(&agent, 10000.0, 9000.0, 9000.0, 0.0, 500).unwrap();
        assert!(r > 0.0);
    }

    #[test]
    fn order_side_follows_expected_price_after_warmup() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let (ticks, side) =
                order_price_and_side(0.0, 10000.0, 1000.0, 20000, 10000, 10000.0, 0.01, &mut rng)
                    .unwrap();
            let price = ticks as f64 * 0.01;
            match side {
                // Prices are rounded per side, so allow one tick of slack
                // when comparing against the expected price.
                Side::Buy => assert!(price < 10000.0 + 0.01),
                Side::Sell => assert!(price > 10000.0 - 0.01),
            }
            assert!(price > 9000.0 - 0.011 && price < 11000.0 + 0.011);
        }
    }

    #[test]
    fn warmup_side_rule_uses_fundamental_value() {
        // Expected price sits far below the fundamental value, so during
        // warm-up every scattered price is a buy.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let (_, side) =
                order_price_and_side(0.0, 5000.0, 1000.0, 100, 10000, 10000.0, 0.01, &mut rng)
                    .unwrap();
            assert_eq!(side, Side::Buy);
        }
    }

    #[test]
    fn order_price_within_scatter_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let (ticks, _) =
                order_price_and_side(0.01, 9800.0, 1000.0, 20000, 10000, 10000.0, 0.01, &mut rng)
                    .unwrap();
            let p_e = 9800.0 * 0.01f64.exp();
            let price = ticks as f64 * 0.01;
            assert!(price >= p_e - 1000.0 - 0.01);
            assert!(price <= p_e + 1000.0 + 0.01);
        }
    }
}
