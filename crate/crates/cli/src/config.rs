//! Flat `key = value` configuration files with command-line overrides.
//!
//! Every market constant has a key; unset keys keep the built-in
//! defaults. `#` starts a comment. Regulation parameters use the keys
//! `regulation`, `tr`, `pr`, `tr2`; when `tr` is set without `tr2`, the
//! halt duration follows the new lookback.

use anyhow::{anyhow, bail, Context, Result};
use regsim::{RegulationKind, SimConfig, Time};

/// A partial configuration: every recognised key as an optional value.
/// Apply onto a [`SimConfig`] with [`ConfigValues::apply`]; later
/// applications (for example CLI flags) override earlier ones.
#[derive(Clone, Debug, Default)]
pub struct ConfigValues {
    pub tick: Option<f64>,
    pub fundamental_price: Option<f64>,
    pub end_time: Option<Time>,
    pub agents: Option<u32>,
    pub w1_max: Option<f64>,
    pub w2_max: Option<f64>,
    pub w3_max: Option<f64>,
    pub tau_max: Option<Time>,
    pub noise_scale: Option<f64>,
    pub noise_scale_is_variance: Option<bool>,
    pub order_scatter: Option<f64>,
    pub cancel_time: Option<Time>,
    pub erroneous_start: Option<Time>,
    pub erroneous_end: Option<Time>,
    pub erroneous_prob: Option<f64>,
    pub stop_offset_min: Option<f64>,
    pub stop_offset_max: Option<f64>,
    pub stop_window_min: Option<Time>,
    pub stop_window_max: Option<Time>,
    pub stop_prob: Option<f64>,
    pub regulation: Option<RegulationKind>,
    pub tr: Option<Time>,
    pub pr: Option<f64>,
    pub tr2: Option<Time>,
    pub seed: Option<u64>,
    pub snapshot_bin_width: Option<f64>,
    pub snapshot_times: Option<Vec<Time>>,
}

impl ConfigValues {
    /// Parses the `key = value` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = ConfigValues::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value'", lineno + 1))?;
            values
                .set(key.trim(), value.trim())
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(values)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow!("key '{key}': invalid value '{value}' ({e})"))
        }
        match key {
            "tick" => self.tick = Some(num(key, value)?),
            "fundamental_price" => self.fundamental_price = Some(num(key, value)?),
            "end_time" => self.end_time = Some(num(key, value)?),
            "agents" => self.agents = Some(num(key, value)?),
            "w1_max" => self.w1_max = Some(num(key, value)?),
            "w2_max" => self.w2_max = Some(num(key, value)?),
            "w3_max" => self.w3_max = Some(num(key, value)?),
            "tau_max" => self.tau_max = Some(num(key, value)?),
            "noise_scale" => self.noise_scale = Some(num(key, value)?),
            "noise_scale_is_variance" => {
                self.noise_scale_is_variance = Some(num(key, value)?)
            }
            "order_scatter" => self.order_scatter = Some(num(key, value)?),
            "cancel_time" => self.cancel_time = Some(num(key, value)?),
            "erroneous_start" => self.erroneous_start = Some(num(key, value)?),
            "erroneous_end" => self.erroneous_end = Some(num(key, value)?),
            "erroneous_prob" => self.erroneous_prob = Some(num(key, value)?),
            "stop_offset_min" => self.stop_offset_min = Some(num(key, value)?),
            "stop_offset_max" => self.stop_offset_max = Some(num(key, value)?),
            "stop_window_min" => self.stop_window_min = Some(num(key, value)?),
            "stop_window_max" => self.stop_window_max = Some(num(key, value)?),
            "stop_prob" => self.stop_prob = Some(num(key, value)?),
            "regulation" => {
                self.regulation = Some(value.parse().map_err(|e| anyhow!("{e}"))?)
            }
            "tr" => self.tr = Some(num(key, value)?),
            "pr" => self.pr = Some(num(key, value)?),
            "tr2" => self.tr2 = Some(num(key, value)?),
            "seed" => self.seed = Some(num(key, value)?),
            "snapshot_bin_width" => self.snapshot_bin_width = Some(num(key, value)?),
            "snapshot_times" => {
                let times = value
                    .split(',')
                    .map(|v| num("snapshot_times", v.trim()))
                    .collect::<Result<Vec<Time>>>()?;
                self.snapshot_times = Some(times);
            }
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    /// Applies the set values onto `cfg`. Setting `tr` without `tr2`
    /// re-defaults the halt duration to the new lookback.
    pub fn apply(&self, cfg: &mut SimConfig) {
        if let Some(v) = self.tick {
            cfg.tick = v;
        }
        if let Some(v) = self.fundamental_price {
            cfg.fundamental_price = v;
        }
        if let Some(v) = self.end_time {
            cfg.end_time = v;
        }
        if let Some(v) = self.agents {
            cfg.agent_count = v;
        }
        if let Some(v) = self.w1_max {
            cfg.population.w1_max = v;
        }
        if let Some(v) = self.w2_max {
            cfg.population.w2_max = v;
        }
        if let Some(v) = self.w3_max {
            cfg.population.w3_max = v;
        }
        if let Some(v) = self.tau_max {
            cfg.population.tau_max = v;
        }
        if let Some(v) = self.noise_scale {
            cfg.noise_scale = v;
        }
        if let Some(v) = self.noise_scale_is_variance {
            cfg.noise_scale_is_variance = v;
        }
        if let Some(v) = self.order_scatter {
            cfg.order_scatter = v;
        }
        if let Some(v) = self.cancel_time {
            cfg.cancel_time = v;
        }
        if let Some(v) = self.erroneous_start {
            cfg.erroneous.start = v;
        }
        if let Some(v) = self.erroneous_end {
            cfg.erroneous.end = v;
        }
        if let Some(v) = self.erroneous_prob {
            cfg.erroneous.prob = v;
        }
        if let Some(v) = self.stop_offset_min {
            cfg.population.stop_offset_min = v;
        }
        if let Some(v) = self.stop_offset_max {
            cfg.population.stop_offset_max = v;
        }
        if let Some(v) = self.stop_window_min {
            cfg.population.stop_window_min = v;
        }
        if let Some(v) = self.stop_window_max {
            cfg.population.stop_window_max = v;
        }
        if let Some(v) = self.stop_prob {
            cfg.stop_loss.prob = v;
        }
        if self.regulation.is_some() || self.tr.is_some() || self.pr.is_some() || self.tr2.is_some()
        {
            let kind = self.regulation.unwrap_or(cfg.regulation.kind);
            let lookback = self.tr.unwrap_or(cfg.regulation.lookback);
            let band = self.pr.unwrap_or(cfg.regulation.band);
            let halt = self.tr2.or(if self.tr.is_some() {
                None
            } else {
                Some(cfg.regulation.halt_duration)
            });
            cfg.regulation = regsim::RegulationConfig::new(kind, lookback, band, halt);
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.snapshot_bin_width {
            cfg.snapshot_bin_width = v;
        }
        if let Some(v) = &self.snapshot_times {
            cfg.snapshot_times = v.clone();
        }
    }
}

/// Loads a config file (when given) onto the built-in defaults.
pub fn load_config(path: Option<&std::path::Path>) -> Result<SimConfig> {
    let mut cfg = SimConfig::paper_defaults();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        ConfigValues::parse(&text)
            .with_context(|| format!("parsing config {}", path.display()))?
            .apply(&mut cfg);
    }
    Ok(cfg)
}
