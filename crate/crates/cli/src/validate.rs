//! Stylized-facts validation: the shock-free market must show fat-tailed
//! returns (positive excess kurtosis within the empirically observed
//! range) and volatility clustering (positive, broadly decaying
//! autocorrelation of squared returns).

use anyhow::{anyhow, bail, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regsim::stats::ReturnSeries;
use regsim::{run_simulation, RegulationKind, SimConfig};

/// Return horizon (in ticks) for the stylized-fact statistics.
pub const RETURN_HORIZON: usize = 100;
/// Autocorrelation lags reported.
pub const LAGS: usize = 5;
/// Accepted excess-kurtosis range (exclusive bounds).
pub const KURTOSIS_RANGE: (f64, f64) = (1.0, 100.0);
/// Accepted autocorrelation range: positive, at most 0.2.
pub const AUTOCORR_MAX: f64 = 0.2;

/// Validation outcome. Statistics are means over the requested seeds.
#[derive(Clone, Debug)]
pub struct StylizedFactsReport {
    pub seeds: u64,
    pub kurtosis: f64,
    pub autocorr: Vec<f64>,
    /// Control: the same autocorrelation after shuffling the first run's
    /// returns, which destroys any clustering.
    pub shuffled_autocorr: Vec<f64>,
    pub kurtosis_ok: bool,
    pub autocorr_ok: bool,
    /// Lag 1 carries the strongest clustering signal.
    pub lag1_largest: bool,
    pub shuffle_ok: bool,
}

impl StylizedFactsReport {
    pub fn pass(&self) -> bool {
        self.kurtosis_ok && self.autocorr_ok && self.lag1_largest && self.shuffle_ok
    }
}

/// Runs the shock-free baseline over `seed_count` seeds (starting at the
/// config's seed) and checks the stylized facts. The config must have the
/// erroneous orders disabled and no regulation.
pub fn validate_stylized_facts(cfg: &SimConfig, seed_count: u64) -> Result<StylizedFactsReport> {
    if cfg.erroneous.prob != 0.0 {
        bail!("stylized-facts validation needs erroneous_prob = 0");
    }
    if cfg.regulation.kind != RegulationKind::None {
        bail!("stylized-facts validation needs regulation = none");
    }
    if seed_count == 0 {
        bail!("need at least one seed");
    }

    let per_seed: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..seed_count)
        .into_par_iter()
        .map(|k| {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = cfg.seed + k;
            let run = run_simulation(&run_cfg).map_err(|e| anyhow!("{e}"))?;
            // Statistics start after warm-up; the sparse early book
            // produces artificial jumps.
            let mature = &run.mids[cfg.cancel_time as usize..];
            let series =
                ReturnSeries::from_mids(mature, RETURN_HORIZON).map_err(|e| anyhow!("{e}"))?;
            let kurtosis = series.excess_kurtosis().map_err(|e| anyhow!("{e}"))?;
            let autocorr = series.autocorr_squared(LAGS).map_err(|e| anyhow!("{e}"))?;
            Ok((kurtosis, autocorr, series.values().to_vec()))
        })
        .collect::<Result<_>>()?;

    let n = per_seed.len() as f64;
    let kurtosis = per_seed.iter().map(|(k, _, _)| k).sum::<f64>() / n;
    let autocorr: Vec<f64> = (0..LAGS)
        .map(|lag| per_seed.iter().map(|(_, a, _)| a[lag]).sum::<f64>() / n)
        .collect();

    // Shuffling the returns of the first run must erase the clustering.
    let mut shuffled = per_seed[0].2.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffled.shuffle(&mut rng);
    let shuffled_autocorr = ReturnSeries::from_returns(shuffled)
        .map_err(|e| anyhow!("{e}"))?
        .autocorr_squared(LAGS)
        .map_err(|e| anyhow!("{e}"))?;
    let noise_band = 4.0 / (per_seed[0].2.len() as f64).sqrt();

    Ok(StylizedFactsReport {
        seeds: seed_count,
        kurtosis_ok: kurtosis > KURTOSIS_RANGE.0 && kurtosis < KURTOSIS_RANGE.1,
        autocorr_ok: autocorr.iter().all(|&a| a > 0.0 && a <= AUTOCORR_MAX),
        lag1_largest: autocorr[1..].iter().all(|&a| a <= autocorr[0]),
        shuffle_ok: shuffled_autocorr.iter().all(|a| a.abs() < noise_band),
        kurtosis,
        autocorr,
        shuffled_autocorr,
    })
}

/// Plain-text rendering of the report, one statistic per line.
pub fn render_report(report: &StylizedFactsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "stylized facts over {} seed(s), {}-tick returns\n",
        report.seeds, RETURN_HORIZON
    ));
    out.push_str(&format!(
        "  excess kurtosis          {:>8.3}   [{}] (accepted ({}, {}))\n",
        report.kurtosis,
        if report.kurtosis_ok { "ok" } else { "FAIL" },
        KURTOSIS_RANGE.0,
        KURTOSIS_RANGE.1,
    ));
    for (i, a) in report.autocorr.iter().enumerate() {
        out.push_str(&format!("  sq-return autocorr lag {} {a:>8.3}\n", i + 1));
    }
    out.push_str(&format!(
        "  autocorr in (0, {AUTOCORR_MAX}]       [{}]\n",
        if report.autocorr_ok { "ok" } else { "FAIL" }
    ));
    out.push_str(&format!(
        "  lag 1 is the largest      [{}]\n",
        if report.lag1_largest { "ok" } else { "FAIL" }
    ));
    out.push_str(&format!(
        "  shuffled control ~ 0      [{}] ({:?})\n",
        if report.shuffle_ok { "ok" } else { "FAIL" },
        report
            .shuffled_autocorr
            .iter()
            .map(|a| (a * 1e4).round() / 1e4)
            .collect::<Vec<_>>(),
    ));
    out.push_str(if report.pass() { "PASS\n" } else { "FAIL\n" });
    out
}
