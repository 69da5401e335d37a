use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use regsim::{run_simulation, RegulationKind, SimConfig, Time};
use regsim_cli::config::{load_config, ConfigValues};
use regsim_cli::harness::{run_sweep, SweepSpec};
use regsim_cli::output::{
    emit_tables, emit_trajectories, render_snapshot, write_trace, TableFormat,
};
use regsim_cli::validate::{render_report, validate_stylized_facts};

/// Agent-based market simulator comparing price limits and circuit
/// breakers under erroneous-order and stop-loss selling shocks.
#[derive(Parser)]
#[command(name = "regsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegulationArg {
    None,
    Limit,
    LimitV2,
    Breaker,
}

impl From<RegulationArg> for RegulationKind {
    fn from(arg: RegulationArg) -> Self {
        match arg {
            RegulationArg::None => RegulationKind::None,
            RegulationArg::Limit => RegulationKind::PriceLimit,
            RegulationArg::LimitV2 => RegulationKind::PriceLimitV2,
            RegulationArg::Breaker => RegulationKind::CircuitBreaker,
        }
    }
}

/// Flags that override config-file values.
#[derive(Args)]
struct Overrides {
    /// Regulation mechanism.
    #[arg(long, value_enum)]
    regulation: Option<RegulationArg>,
    /// Regulation lookback in ticks.
    #[arg(long)]
    tr: Option<Time>,
    /// Regulation band half-width in price units.
    #[arg(long)]
    pr: Option<f64>,
    /// Circuit-breaker halt duration in ticks (defaults to tr).
    #[arg(long)]
    tr2: Option<Time>,
    /// Run seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut SimConfig) {
        let values = ConfigValues {
            regulation: self.regulation.map(Into::into),
            tr: self.tr,
            pr: self.pr,
            tr2: self.tr2,
            seed: self.seed,
            ..ConfigValues::default()
        };
        values.apply(cfg);
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GridArg {
    /// The full experiment grid: tr in {1000..20000}, pr in {10..1000}.
    Paper,
    /// Grid from --tr-values / --pr-values / --mechanisms.
    Custom,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print a summary.
    Simulate {
        /// Config file (key = value); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Write a t,mid trace of the run to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a multi-seed regulation sweep and write the result tables.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seeds per cell.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Output directory for tables and trajectories.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = GridArg::Paper)]
        grid: GridArg,
        /// Lookback values for --grid custom (comma separated).
        #[arg(long, value_delimiter = ',')]
        tr_values: Vec<Time>,
        /// Band values for --grid custom (comma separated).
        #[arg(long, value_delimiter = ',')]
        pr_values: Vec<f64>,
        /// Mechanisms for --grid custom (comma separated).
        #[arg(long, value_enum, value_delimiter = ',')]
        mechanisms: Vec<RegulationArg>,
        /// Also emit markdown tables.
        #[arg(long)]
        markdown: bool,
        /// Skip the three-way comparison trajectory traces.
        #[arg(long)]
        no_trajectories: bool,
    },
    /// Run the shock-free baseline and check the stylized facts.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seeds to average the statistics over.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Capture an order-book depth snapshot at a given turn.
    Snapshot {
        /// Turn at which to snapshot the book.
        #[arg(long)]
        at: Time,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            config,
            overrides,
            trace,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            overrides.apply(&mut cfg);
            let result = run_simulation(&cfg)?;
            let c = &result.counters;
            println!(
                "seed {} | regulation {} (tr={}, pr={}, tr2={})",
                result.seed,
                cfg.regulation.kind.token(),
                cfg.regulation.lookback,
                cfg.regulation.band,
                cfg.regulation.halt_duration,
            );
            println!(
                "falling depth {:.1} | lowest mid {:.1} at t={}",
                result.falling_depth,
                cfg.fundamental_price - result.falling_depth,
                result.min_mid_time,
            );
            println!(
                "trades {} | cancelled {} | erroneous sells {} | stop-loss sells {}",
                c.executed_trades, c.cancelled, c.erroneous_conversions, c.stop_loss_conversions,
            );
            println!(
                "clamped {} | variant-cancelled {} | halts {} ({} turns)",
                c.clamped_orders, c.v2_cancelled_orders, c.halts_triggered, c.halted_turns,
            );
            if let Some(path) = trace {
                write_trace(&result, &path)?;
                println!("trace written to {}", path.display());
            }
        }
        Command::Sweep {
            config,
            seeds,
            out,
            grid,
            tr_values,
            pr_values,
            mechanisms,
            markdown,
            no_trajectories,
        } => {
            let base = load_config(config.as_deref())?;
            let spec = match grid {
                GridArg::Paper => SweepSpec {
                    tr_values: vec![1_000, 2_000, 5_000, 10_000, 20_000],
                    pr_values: vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1_000.0],
                    kinds: vec![
                        RegulationKind::PriceLimit,
                        RegulationKind::CircuitBreaker,
                        RegulationKind::PriceLimitV2,
                    ],
                    seed_count: seeds,
                    base,
                    out_dir: out.clone(),
                },
                GridArg::Custom => SweepSpec {
                    tr_values,
                    pr_values,
                    kinds: mechanisms.into_iter().map(Into::into).collect(),
                    seed_count: seeds,
                    base,
                    out_dir: out.clone(),
                },
            };
            eprintln!(
                "sweep: {} mechanisms x {} tr x {} pr x {} seeds = {} runs",
                spec.kinds.len(),
                spec.tr_values.len(),
                spec.pr_values.len(),
                spec.seed_count,
                spec.kinds.len() * spec.tr_values.len() * spec.pr_values.len()
                    * spec.seed_count as usize,
            );
            let grid = run_sweep(&spec)?;
            let mut written = emit_tables(&grid, TableFormat::Csv, &out)?;
            if markdown {
                written.extend(emit_tables(&grid, TableFormat::Markdown, &out)?);
            }
            if !no_trajectories {
                written.extend(emit_comparison_trajectories(&spec, &out)?);
            }
            eprintln!("falling speed estimate: {:.4}", grid.fall_speed);
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::Validate { config, seeds } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.erroneous.prob = 0.0;
            cfg.regulation = regsim::RegulationConfig::none();
            let report = validate_stylized_facts(&cfg, seeds)?;
            print!("{}", render_report(&report));
            if !report.pass() {
                return Err(anyhow!("stylized-facts validation failed"));
            }
        }
        Command::Snapshot {
            at,
            config,
            overrides,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            overrides.apply(&mut cfg);
            cfg.snapshot_times = vec![at];
            let result = run_simulation(&cfg)?;
            let snapshot = result
                .snapshots
                .first()
                .ok_or_else(|| anyhow!("no snapshot captured at t={at}"))?;
            let rendered = render_snapshot(snapshot);
            match out {
                Some(path) => {
                    std::fs::write(&path, rendered)
                        .with_context(|| format!("writing {}", path.display()))?;
                    println!("snapshot written to {}", path.display());
                }
                None => print!("{rendered}"),
            }
        }
    }
    Ok(())
}

/// The two three-way comparisons from the experiments: no regulation vs
/// both mechanisms at (tr=10000, pr=100), and the cancelling variant vs
/// both at (tr=2000, pr=20).
fn emit_comparison_trajectories(spec: &SweepSpec, out: &std::path::Path) -> Result<Vec<PathBuf>> {
    let selected = [
        ("none_tr10000_pr100", RegulationKind::None, 10_000, 100.0),
        ("limit_tr10000_pr100", RegulationKind::PriceLimit, 10_000, 100.0),
        ("breaker_tr10000_pr100", RegulationKind::CircuitBreaker, 10_000, 100.0),
        ("limit_v2_tr2000_pr20", RegulationKind::PriceLimitV2, 2_000, 20.0),
        ("limit_tr2000_pr20", RegulationKind::PriceLimit, 2_000, 20.0),
        ("breaker_tr2000_pr20", RegulationKind::CircuitBreaker, 2_000, 20.0),
    ];
    let runs = selected
        .into_iter()
        .map(|(label, kind, tr, pr)| {
            let mut cfg = spec.base.clone();
            cfg.regulation = regsim::RegulationConfig::new(kind, tr, pr, None);
            let run = run_simulation(&cfg)?;
            Ok((label.to_string(), run))
        })
        .collect::<Result<Vec<_>>>()?;
    emit_trajectories(&runs, out)
}
