//! Multi-seed parameter sweeps over regulation mechanisms.
//!
//! Every cell of the (mechanism, lookback, band) grid runs the same seed
//! set, so cells differ only through the regulation parameters and can be
//! compared pairwise. Runs execute in parallel; aggregation order is
//! fixed by the grid definition, so sweep output is independent of the
//! degree of parallelism.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use regsim::{run_simulation, stats, RegulationConfig, RegulationKind, SimConfig, Time};

/// Fallback falling speed when the no-regulation estimate is degenerate
/// (for example a run whose minimum precedes the shock window).
pub const FALLBACK_FALL_SPEED: f64 = 0.052;

/// Grid definition for [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub tr_values: Vec<Time>,
    pub pr_values: Vec<f64>,
    pub kinds: Vec<RegulationKind>,
    pub seed_count: u64,
    /// Template configuration; its `regulation` field is replaced per
    /// cell and its `seed` is the first of the shared seed set.
    pub base: SimConfig,
    pub out_dir: PathBuf,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tr_values.is_empty() || self.pr_values.is_empty() || self.kinds.is_empty() {
            bail!("sweep grid must have at least one lookback, band, and mechanism");
        }
        if self.seed_count == 0 {
            bail!("sweep needs at least one seed");
        }
        self.base.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.seed_count).map(|k| self.base.seed + k).collect()
    }
}

/// One aggregated grid cell.
#[derive(Clone, Debug)]
pub struct AggregateCell {
    pub kind: RegulationKind,
    pub lookback: Time,
    pub band: f64,
    pub mean_depth: f64,
    pub std_depth: f64,
    pub runs: u64,
    /// Set when the cell violates the band-slope condition
    /// (`band / lookback >= falling speed`): the shaded cells of the
    /// result tables.
    pub gray: bool,
}

/// A completed sweep: cells in (mechanism, band, lookback) order plus the
/// falling-speed estimate used for shading and the per-run depths.
#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub cells: Vec<AggregateCell>,
    pub fall_speed: f64,
    pub tr_values: Vec<Time>,
    pub pr_values: Vec<f64>,
    pub kinds: Vec<RegulationKind>,
    /// One row per run: (mechanism, lookback, band, seed, falling depth),
    /// in cell-then-seed order.
    pub runs: Vec<(RegulationKind, Time, f64, u64, f64)>,
}

impl SweepGrid {
    pub fn cell(&self, kind: RegulationKind, lookback: Time, band: f64) -> Option<&AggregateCell> {
        self.cells
            .iter()
            .find(|c| c.kind == kind && c.lookback == lookback && c.band == band)
    }
}

fn cell_config(base: &SimConfig, kind: RegulationKind, tr: Time, pr: f64, seed: u64) -> SimConfig {
    let mut cfg = base.clone();
    cfg.seed = seed;
    cfg.regulation = RegulationConfig::new(kind, tr, pr, None);
    cfg
}

/// Falling depths for one cell across the shared seed set, in seed order.
pub fn cell_depths(
    base: &SimConfig,
    kind: RegulationKind,
    tr: Time,
    pr: f64,
    seeds: &[u64],
) -> Result<Vec<f64>> {
    seeds
        .par_iter()
        .map(|&seed| {
            run_simulation(&cell_config(base, kind, tr, pr, seed))
                .map(|run| run.falling_depth)
                .map_err(|e| {
                    anyhow!("run failed at cell ({}, tr={tr}, pr={pr}), seed {seed}: {e}", kind.token())
                })
        })
        .collect()
}

/// Least-squares falling speed of one unregulated run, measured from the
/// shock start to the minimum mid.
pub fn falling_speed_of_run(run: &regsim::RunResult) -> Result<f64> {
    let start = run.config.erroneous.start as usize;
    let end = run.min_mid_time as usize + 1;
    stats::estimate_falling_speed(&run.mids, start..end).map_err(|e| anyhow!("{e}"))
}

/// Mean falling speed over unregulated runs with the given seeds
/// (the shading reference). Falls back to [`FALLBACK_FALL_SPEED`] when no
/// run yields a usable estimate.
pub fn estimate_fall_speed(base: &SimConfig, seeds: &[u64]) -> Result<f64> {
    let speeds: Vec<f64> = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = base.clone();
            cfg.seed = seed;
            cfg.regulation = RegulationConfig::none();
            let run = run_simulation(&cfg)
                .map_err(|e| anyhow!("no-regulation run failed for seed {seed}: {e}"))?;
            Ok(falling_speed_of_run(&run).ok())
        })
        .collect::<Result<Vec<Option<f64>>>>()?
        .into_iter()
        .flatten()
        .collect();
    if speeds.is_empty() {
        return Ok(FALLBACK_FALL_SPEED);
    }
    Ok(speeds.iter().sum::<f64>() / speeds.len() as f64)
}

/// Runs the full grid. Cells are aggregated in (mechanism, band,
/// lookback) order regardless of how the underlying runs were scheduled.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepGrid> {
    spec.validate()?;
    let seeds = spec.seeds();
    let fall_speed = estimate_fall_speed(&spec.base, &seeds)
        .context("estimating the falling speed for table shading")?;

    let mut tasks = Vec::new();
    for &kind in &spec.kinds {
        for &pr in &spec.pr_values {
            for &tr in &spec.tr_values {
                tasks.push((kind, tr, pr));
            }
        }
    }
    let per_cell = tasks
        .par_iter()
        .map(|&(kind, tr, pr)| {
            let depths = cell_depths(&spec.base, kind, tr, pr, &seeds)?;
            let n = depths.len() as f64;
            let mean = depths.iter().sum::<f64>() / n;
            let var = depths.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
            let cell = AggregateCell {
                kind,
                lookback: tr,
                band: pr,
                mean_depth: mean,
                std_depth: var.sqrt(),
                runs: depths.len() as u64,
                gray: !(pr / (tr as f64) < fall_speed),
            };
            Ok((cell, depths))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(per_cell.len());
    let mut runs = Vec::with_capacity(per_cell.len() * seeds.len());
    for (cell, depths) in per_cell {
        for (&seed, &depth) in seeds.iter().zip(&depths) {
            runs.push((cell.kind, cell.lookback, cell.band, seed, depth));
        }
        cells.push(cell);
    }

    Ok(SweepGrid {
        cells,
        fall_speed,
        tr_values: spec.tr_values.clone(),
        pr_values: spec.pr_values.clone(),
        kinds: spec.kinds.clone(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mini_base(seed: u64) -> SimConfig {
        let mut cfg = SimConfig::paper_defaults();
        cfg.end_time = 20_000;
        cfg.agent_count = 100;
        cfg.population.tau_max = 1_000;
        cfg.population.stop_window_min = 2_000;
        cfg.population.stop_window_max = 8_000;
        cfg.cancel_time = 1_500;
        cfg.erroneous.start = 4_000;
        cfg.erroneous.end = 9_000;
        cfg.seed = seed;
        cfg
    }

    #[test]
    fn single_cell_sweep_matches_single_run() {
        let spec = SweepSpec {
            tr_values: vec![1_000],
            pr_values: vec![100.0],
            kinds: vec![RegulationKind::PriceLimit],
            seed_count: 1,
            base: mini_base(5),
            out_dir: PathBuf::new(),
        };
        let grid = run_sweep(&spec).unwrap();
        assert_eq!(grid.cells.len(), 1);
        let mut cfg = mini_base(5);
        cfg.regulation = RegulationConfig::new(RegulationKind::PriceLimit, 1_000, 100.0, None);
        let run = run_simulation(&cfg).unwrap();
        assert_eq!(grid.cells[0].mean_depth, run.falling_depth);
        assert_eq!(grid.cells[0].std_depth, 0.0);
        assert_eq!(grid.cells[0].runs, 1);
    }

    #[test]
    fn cells_are_independent_of_the_rest_of_the_grid() {
        let big = SweepSpec {
            tr_values: vec![500, 1_000],
            pr_values: vec![50.0, 100.0],
            kinds: vec![RegulationKind::PriceLimit],
            seed_count: 2,
            base: mini_base(3),
            out_dir: PathBuf::new(),
        };
        let small = SweepSpec {
            tr_values: vec![1_000],
            pr_values: vec![100.0],
            ..big.clone()
        };
        let big_grid = run_sweep(&big).unwrap();
        let small_grid = run_sweep(&small).unwrap();
        let a = big_grid.cell(RegulationKind::PriceLimit, 1_000, 100.0).unwrap();
        let b = small_grid.cell(RegulationKind::PriceLimit, 1_000, 100.0).unwrap();
        assert_eq!(a.mean_depth, b.mean_depth);
        assert_eq!(a.std_depth, b.std_depth);
    }

    #[test]
    fn gray_flag_matches_the_condition_predicates() {
        let spec = SweepSpec {
            tr_values: vec![100, 10_000],
            pr_values: vec![100.0],
            kinds: vec![RegulationKind::PriceLimit],
            seed_count: 1,
            base: mini_base(1),
            out_dir: PathBuf::new(),
        };
        let grid = run_sweep(&spec).unwrap();
        for cell in &grid.cells {
            let checks = regsim::stats::condition_predicates(
                cell.band,
                cell.lookback as f64,
                grid.fall_speed,
                1.0,
                30_000.0,
                2_000.0,
            );
            assert_eq!(cell.gray, !checks.slope_ok);
        }
    }

    #[test]
    fn per_run_rows_cover_the_grid() {
        let spec = SweepSpec {
            tr_values: vec![500, 1_000],
            pr_values: vec![100.0],
            kinds: vec![RegulationKind::PriceLimit],
            seed_count: 3,
            base: mini_base(2),
            out_dir: PathBuf::new(),
        };
        let grid = run_sweep(&spec).unwrap();
        assert_eq!(grid.runs.len(), 6);
        let cell = grid.cell(RegulationKind::PriceLimit, 500, 100.0).unwrap();
        let depths: Vec<f64> = grid
            .runs
            .iter()
            .filter(|(k, tr, _, _, _)| *k == RegulationKind::PriceLimit && *tr == 500)
            .map(|&(_, _, _, _, d)| d)
            .collect();
        let mean = depths.iter().sum::<f64>() / depths.len() as f64;
        assert!((mean - cell.mean_depth).abs() < 1e-9);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SweepSpec {
            tr_values: vec![],
            pr_values: vec![100.0],
            kinds: vec![RegulationKind::PriceLimit],
            seed_count: 1,
            base: mini_base(1),
            out_dir: PathBuf::new(),
        };
        assert!(spec.validate().is_err());
        spec.tr_values = vec![1_000];
        spec.seed_count = 0;
        assert!(spec.validate().is_err());
    }
}
