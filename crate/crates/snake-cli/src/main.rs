//! Command line around the snake engine: play single games, run benchmark
//! grids, or ask the exhaustive checker for one state's optimum.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use snake_core::bench::{run_bench, BenchConfig};
use snake_core::game::{Game, GameConfig};
use snake_core::oracle::brute_force_oracle;
use snake_core::render::{RenderFormat, RenderSpec};
use snake_core::strategy::StrategyId;
use snake_core::{Coord, GridGraph, Snake};

#[derive(Parser)]
#[command(name = "snake", version, about = "Play and benchmark self-winning snake")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game and stream per-apple records as JSON lines.
    Play(PlayArgs),
    /// Run a grid-by-strategy study and write raw lines plus a report.
    Bench(BenchArgs),
    /// Print the exhaustively checked optimum for one saved state.
    Oracle(OracleArgs),
}

/// Board shape, written `6x6` (or bare `6` for a square).
#[derive(Clone, Copy, Debug)]
struct GridDim {
    n: u32,
    m: u32,
}

impl FromStr for GridDim {
    type Err = String;

    fn from_str(s: &str) -> Result<GridDim, String> {
        let parse = |t: &str| {
            t.parse::<u32>()
                .map_err(|_| format!("bad grid '{s}': expected NxM or N"))
        };
        let (n, m) = match s.split_once(['x', 'X']) {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if n == 0 || m == 0 {
            return Err(format!("bad grid '{s}': sides must be positive"));
        }
        Ok(GridDim { n, m })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderArg {
    Ascii,
    Svg,
}

#[derive(Args)]
struct PlayArgs {
    /// Board shape, e.g. 6x6.
    #[arg(long)]
    grid: GridDim,
    #[arg(long, default_value = "assume")]
    strategy: StrategyId,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget per solve call.
    #[arg(long, default_value_t = 60_000)]
    timeout_ms: u64,
    /// Write one board snapshot per apple into --out.
    #[arg(long, value_enum)]
    render: Option<RenderArg>,
    /// Snapshot directory; required with --render.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve every call from scratch instead of diving along the last cycle.
    #[arg(long)]
    no_warmstart: bool,
    /// Skip mirroring the head into the first quadrant before solving.
    #[arg(long)]
    no_canonicalize: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated boards, e.g. 4,6,8 or 4x4,6x10.
    #[arg(long, default_value = "4,6,8")]
    grids: String,
    /// Games per grid-strategy cell.
    #[arg(long, default_value_t = 20)]
    games: usize,
    /// Comma-separated strategy names, or "all".
    #[arg(long, default_value = "all")]
    strategies: String,
    /// Wall-clock budget per solve call.
    #[arg(long, default_value_t = 60_000)]
    timeout_ms: u64,
    /// Game k of every cell is seeded with base_seed + k.
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    /// Directory for games/*.jsonl, report.csv and report.jsonl.
    #[arg(long)]
    out: PathBuf,
    /// Parallel games cap; defaults to one per core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    no_warmstart: bool,
    #[arg(long)]
    no_canonicalize: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Board shape, e.g. 4x4.
    #[arg(long)]
    grid: GridDim,
    /// JSON file holding {"snake": [[x,y], ...], "apple": [x,y]}.
    #[arg(long)]
    state: PathBuf,
}

/// On-disk state accepted by `snake oracle`.
#[derive(Deserialize)]
struct StateFile {
    /// Tail first, head last.
    snake: Vec<Coord>,
    apple: Coord,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SNAKE_LOG_LEVEL", "warn"))
        .init();
    match Cli::parse().command {
        Command::Play(args) => play(args),
        Command::Bench(args) => bench(args),
        Command::Oracle(args) => oracle(args),
    }
}

fn play(args: PlayArgs) -> Result<()> {
    let cfg = GameConfig {
        n: args.grid.n,
        m: args.grid.m,
        seed: args.seed,
        timeout_ms: args.timeout_ms,
        strategy: args.strategy,
        canonicalize: !args.no_canonicalize,
        warm_start: !args.no_warmstart,
    };
    let snapshots = match (args.render, &args.out) {
        (Some(format), Some(dir)) => {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating snapshot dir {}", dir.display()))?;
            Some((snapshot_spec(format), dir.as_path()))
        }
        (Some(_), None) => bail!("--render needs --out DIR for the snapshots"),
        (None, Some(_)) => bail!("--out is only used with --render"),
        (None, None) => None,
    };

    let mut game = Game::new(&cfg)?;
    if let Some((spec, dir)) = &snapshots {
        write_snapshot(&game, spec, dir, 0)?;
    }
    let mut printed = 0;
    loop {
        let proceed = game.step();
        for record in &game.records()[printed..] {
            println!("{}", serde_json::to_string(record)?);
        }
        printed = game.records().len();
        if let Some((spec, dir)) = &snapshots {
            if game.last_path().is_some() {
                write_snapshot(&game, spec, dir, game.state().iteration)?;
            }
        }
        if !proceed {
            break;
        }
    }

    let result = game.finish();
    println!(
        "{}",
        serde_json::json!({
            "won": result.won,
            "total_steps": result.total_steps,
            "total_time_ms": result.total_time.as_secs_f64() * 1e3,
            "diagnostic": result.diagnostic,
        })
    );
    Ok(())
}

fn snapshot_spec(format: RenderArg) -> RenderSpec {
    match format {
        RenderArg::Ascii => RenderSpec::ascii().with_cycle(),
        RenderArg::Svg => RenderSpec::svg().with_cycle(),
    }
}

/// Writes the board as it stands, overlaid with the cycle just followed.
fn write_snapshot(game: &Game, spec: &RenderSpec, dir: &Path, iteration: usize) -> Result<()> {
    let ext = match spec.format {
        RenderFormat::Ascii => "txt",
        RenderFormat::Svg => "svg",
    };
    let path = dir.join(format!("iter-{iteration:05}.{ext}"));
    let board = snake_core::render::render_board(game.grid(), game.state(), game.last_path(), spec);
    fs::write(&path, board).with_context(|| format!("writing snapshot {}", path.display()))?;
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let grids = parse_grids(&args.grids)?;
    let strategies = parse_strategies(&args.strategies)?;
    if args.games == 0 {
        bail!("--games must be positive");
    }
    let cfg = BenchConfig {
        grids,
        games: args.games,
        strategies,
        timeout_ms: args.timeout_ms,
        base_seed: args.base_seed,
        out_dir: Some(args.out.clone()),
        jobs: args.jobs,
        canonicalize: !args.no_canonicalize,
        warm_start: !args.no_warmstart,
    };
    let report = run_bench(&cfg)?;
    for cell in &report.cells {
        println!(
            "{} {:>9}: win_rate {:.2}  mean_steps {:.1}  mean_time {:.0} ms  timeout_rate {:.3}",
            cell.grid,
            cell.strategy,
            cell.win_rate,
            cell.mean_total_steps,
            cell.mean_total_time_ms,
            cell.timeout_rate,
        );
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn parse_grids(s: &str) -> Result<Vec<(u32, u32)>> {
    let mut grids = Vec::new();
    for token in s.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let dim: GridDim = token.parse().map_err(anyhow::Error::msg)?;
        grids.push((dim.n, dim.m));
    }
    if grids.is_empty() {
        bail!("--grids named no boards");
    }
    Ok(grids)
}

fn parse_strategies(s: &str) -> Result<Vec<StrategyId>> {
    if s.trim() == "all" {
        return Ok(StrategyId::ALL.to_vec());
    }
    let mut ids = Vec::new();
    for token in s.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        ids.push(token.parse::<StrategyId>()?);
    }
    if ids.is_empty() {
        bail!("--strategies named no strategies");
    }
    Ok(ids)
}

fn oracle(args: OracleArgs) -> Result<()> {
    let text = fs::read_to_string(&args.state)
        .with_context(|| format!("reading state file {}", args.state.display()))?;
    let state: StateFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing state file {}", args.state.display()))?;
    let grid = GridGraph::new(args.grid.n, args.grid.m)?;
    let snake = Snake::new(&grid, state.snake).context("state file snake")?;
    let result = brute_force_oracle(&grid, &snake, state.apple)?;
    println!(
        "{}",
        serde_json::json!({
            "objective": result.objective,
            "witness": result.witness,
        })
    );
    Ok(())
}
