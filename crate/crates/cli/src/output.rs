//! File emission: depth tables (CSV and markdown), difference tables,
//! trajectory traces, and order-book depth snapshots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use regsim::{BookSnapshot, RegulationKind, RunResult, SimConfig};

use crate::harness::SweepGrid;

/// FNV-1a over the canonical config text; stamped into trace headers so a
/// trace can be matched to the exact configuration that produced it.
pub fn config_fingerprint(cfg: &SimConfig) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in format!("{cfg:?}").bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Output format for the sweep tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// Renders one mechanism's depth table: bands as rows, lookbacks as
/// columns (header `pr,tr_1000,...`). Gray cells carry a `*` marker in
/// markdown; CSV keeps plain numbers and gets a companion `_gray` table.
pub fn render_table(
    grid: &SweepGrid,
    kind: RegulationKind,
    format: TableFormat,
) -> Result<String> {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            write!(out, "pr")?;
            for tr in &grid.tr_values {
                write!(out, ",tr_{tr}")?;
            }
            writeln!(out)?;
            for &pr in &grid.pr_values {
                write!(out, "{pr}")?;
                for &tr in &grid.tr_values {
                    let cell = grid
                        .cell(kind, tr, pr)
                        .with_context(|| format!("missing cell ({}, {tr}, {pr})", kind.token()))?;
                    write!(out, ",{:.1}", cell.mean_depth)?;
                }
                writeln!(out)?;
            }
        }
        TableFormat::Markdown => {
            write!(out, "| pr |")?;
            for tr in &grid.tr_values {
                write!(out, " tr={tr} |")?;
            }
            writeln!(out)?;
            write!(out, "|---|")?;
            for _ in &grid.tr_values {
                write!(out, "---|")?;
            }
            writeln!(out)?;
            for &pr in &grid.pr_values {
                write!(out, "| {pr} |")?;
                for &tr in &grid.tr_values {
                    let cell = grid
                        .cell(kind, tr, pr)
                        .with_context(|| format!("missing cell ({}, {tr}, {pr})", kind.token()))?;
                    let marker = if cell.gray { "*" } else { "" };
                    write!(out, " {:.0}{marker} |", cell.mean_depth)?;
                }
                writeln!(out)?;
            }
            writeln!(out)?;
            writeln!(
                out,
                "`*` marks cells where pr/tr >= the measured falling speed ({:.4}).",
                grid.fall_speed
            )?;
        }
    }
    Ok(out)
}

/// Renders the gray-flag companion table (same layout, 0/1 entries).
pub fn render_gray_table(grid: &SweepGrid, kind: RegulationKind) -> Result<String> {
    let mut out = String::new();
    write!(out, "pr")?;
    for tr in &grid.tr_values {
        write!(out, ",tr_{tr}")?;
    }
    writeln!(out)?;
    for &pr in &grid.pr_values {
        write!(out, "{pr}")?;
        for &tr in &grid.tr_values {
            let cell = grid
                .cell(kind, tr, pr)
                .with_context(|| format!("missing cell ({}, {tr}, {pr})", kind.token()))?;
            write!(out, ",{}", cell.gray as u8)?;
        }
        writeln!(out)?;
    }
    Ok(out)
}

/// Renders the difference of two mechanisms' mean depths (`a - b`).
pub fn render_difference_table(
    grid: &SweepGrid,
    a: RegulationKind,
    b: RegulationKind,
) -> Result<String> {
    let mut out = String::new();
    write!(out, "pr")?;
    for tr in &grid.tr_values {
        write!(out, ",tr_{tr}")?;
    }
    writeln!(out)?;
    for &pr in &grid.pr_values {
        write!(out, "{pr}")?;
        for &tr in &grid.tr_values {
            let ca = grid
                .cell(a, tr, pr)
                .with_context(|| format!("missing cell ({}, {tr}, {pr})", a.token()))?;
            let cb = grid
                .cell(b, tr, pr)
                .with_context(|| format!("missing cell ({}, {tr}, {pr})", b.token()))?;
            write!(out, ",{:.1}", ca.mean_depth - cb.mean_depth)?;
        }
        writeln!(out)?;
    }
    Ok(out)
}

/// Per-run depths as CSV rows keyed by (mechanism, lookback, band, seed).
pub fn render_runs(grid: &SweepGrid) -> String {
    let mut out = String::from("regulation,tr,pr,seed,falling_depth\n");
    for (kind, tr, pr, seed, depth) in &grid.runs {
        let _ = writeln!(out, "{},{tr},{pr},{seed},{depth:.1}", kind.token());
    }
    out
}

/// Writes one table file per mechanism plus pairwise difference tables
/// against the circuit breaker and the per-run rows. Returns the written
/// paths.
pub fn emit_tables(grid: &SweepGrid, format: TableFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if grid.cells.is_empty() {
        bail!("cannot emit tables for an empty grid");
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let ext = match format {
        TableFormat::Csv => "csv",
        TableFormat::Markdown => "md",
    };
    let mut written = Vec::new();
    for &kind in &grid.kinds {
        let path = out_dir.join(format!("depth_{}.{ext}", kind.token()));
        std::fs::write(&path, render_table(grid, kind, format)?)?;
        written.push(path);
        if format == TableFormat::Csv {
            let path = out_dir.join(format!("depth_{}_gray.csv", kind.token()));
            std::fs::write(&path, render_gray_table(grid, kind)?)?;
            written.push(path);
        }
    }
    let breaker = RegulationKind::CircuitBreaker;
    if grid.kinds.contains(&breaker) {
        for kind in [RegulationKind::PriceLimit, RegulationKind::PriceLimitV2] {
            if grid.kinds.contains(&kind) {
                let path = out_dir.join(format!("diff_{}_breaker.{ext}", kind.token()));
                std::fs::write(&path, render_difference_table(grid, kind, breaker)?)?;
                written.push(path);
            }
        }
    }
    if format == TableFormat::Csv {
        let path = out_dir.join("runs.csv");
        std::fs::write(&path, render_runs(grid))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes a `t,mid` trace with a metadata header.
pub fn write_trace(result: &RunResult, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(result.mids.len() * 16);
    writeln!(out, "# seed={}", result.seed)?;
    writeln!(out, "# config_hash={:016x}", config_fingerprint(&result.config))?;
    writeln!(out, "t,mid")?;
    for (t, mid) in result.mids.iter().enumerate() {
        writeln!(out, "{t},{mid}")?;
    }
    std::fs::write(path, out).with_context(|| format!("writing trace {}", path.display()))?;
    Ok(())
}

/// Writes labelled traces (`traj_<label>.csv`) for selected runs.
pub fn emit_trajectories(runs: &[(String, RunResult)], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (label, run) in runs {
        let path = out_dir.join(format!("traj_{label}.csv"));
        write_trace(run, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Renders a depth snapshot as `bin_low,bin_high,sell_shares,buy_shares`
/// rows.
pub fn render_snapshot(snapshot: &BookSnapshot) -> String {
    let mut out = String::new();
    out.push_str("bin_low,bin_high,sell_shares,buy_shares\n");
    for bin in &snapshot.bins {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            bin.low, bin.high, bin.sell_shares, bin.buy_shares
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_sweep, SweepSpec};
    use regsim::RegulationKind;

    fn tiny_grid() -> SweepGrid {
        let mut base = SimConfig::paper_defaults();
        base.end_time = 12_000;
        base.agent_count = 60;
        base.population.tau_max = 500;
        base.population.stop_window_min = 1_000;
        base.population.stop_window_max = 4_000;
        base.cancel_time = 1_000;
        base.erroneous.start = 3_000;
        base.erroneous.end = 6_000;
        let spec = SweepSpec {
            tr_values: vec![1_000, 2_000, 5_000, 10_000, 20_000],
            pr_values: vec![100.0],
            kinds: vec![
                RegulationKind::PriceLimit,
                RegulationKind::CircuitBreaker,
            ],
            seed_count: 1,
            base,
            out_dir: PathBuf::new(),
        };
        run_sweep(&spec).unwrap()
    }

    #[test]
    fn csv_table_has_the_pinned_header() {
        let grid = tiny_grid();
        let table = render_table(&grid, RegulationKind::PriceLimit, TableFormat::Csv).unwrap();
        let header = table.lines().next().unwrap();
        assert_eq!(header, "pr,tr_1000,tr_2000,tr_5000,tr_10000,tr_20000");
        assert_eq!(table.lines().count(), 2);
        assert!(table.lines().nth(1).unwrap().starts_with("100,"));
    }

    #[test]
    fn markdown_marks_gray_cells() {
        let grid = tiny_grid();
        let table =
            render_table(&grid, RegulationKind::PriceLimit, TableFormat::Markdown).unwrap();
        assert!(table.contains("| pr |"));
        // pr=100 at tr=1000 violates the slope condition at any plausible
        // measured speed, so at least one marker must appear.
        assert!(table.contains('*'));
    }

    #[test]
    fn difference_table_subtracts_means() {
        let grid = tiny_grid();
        let diff = render_difference_table(
            &grid,
            RegulationKind::PriceLimit,
            RegulationKind::CircuitBreaker,
        )
        .unwrap();
        let row = diff.lines().nth(1).unwrap();
        let first: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        let a = grid.cell(RegulationKind::PriceLimit, 1_000, 100.0).unwrap();
        let b = grid.cell(RegulationKind::CircuitBreaker, 1_000, 100.0).unwrap();
        assert!((first - (a.mean_depth - b.mean_depth)).abs() < 0.05 + 1e-9);
    }

    #[test]
    fn trace_format_and_fingerprint_stability() {
        let mut cfg = SimConfig::paper_defaults();
        cfg.end_time = 2_000;
        cfg.agent_count = 50;
        cfg.population.tau_max = 200;
        cfg.population.stop_window_min = 100;
        cfg.population.stop_window_max = 500;
        cfg.cancel_time = 300;
        cfg.erroneous.start = 500;
        cfg.erroneous.end = 1_000;
        let run = regsim::run_simulation(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&run, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# seed="));
        assert!(lines.next().unwrap().starts_with("# config_hash="));
        assert_eq!(lines.next().unwrap(), "t,mid");
        assert_eq!(text.lines().count(), 3 + run.mids.len());
        assert_eq!(config_fingerprint(&cfg), config_fingerprint(&run.config));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let grid = SweepGrid {
            cells: vec![],
            fall_speed: 0.05,
            tr_values: vec![],
            pr_values: vec![],
            kinds: vec![],
            runs: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_tables(&grid, TableFormat::Csv, dir.path()).is_err());
    }
}
