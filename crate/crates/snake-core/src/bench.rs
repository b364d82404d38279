//! The experiment harness: play many games per (grid, strategy) pair,
//! stream raw per-iteration records to JSONL, and reduce them to a report
//! of win rates, mean steps, mean wall time and timeout rates. Every
//! aggregate is recomputable from the raw lines; the report holds no
//! hidden state.

use std::fmt;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::game::{run_game, GameConfig, GameError, GameResult, IterationRecord};
use crate::strategy::StrategyId;

#[derive(Debug)]
pub enum BenchError {
    Game(GameError),
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Game(e) => write!(f, "{e}"),
            BenchError::Io { path, source } => {
                write!(f, "writing {}: {source}", path.display())
            }
        }
    }
}

// Display carries the whole story, so no source() chain to repeat it.
impl std::error::Error for BenchError {}

impl From<GameError> for BenchError {
    fn from(e: GameError) -> BenchError {
        BenchError::Game(e)
    }
}

/// One study: every strategy plays `games` games on every grid, with
/// per-game seeds `base_seed`, `base_seed + 1`, and so on, shared across
/// strategies so they all see the same boards.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub grids: Vec<(u32, u32)>,
    pub games: usize,
    pub strategies: Vec<StrategyId>,
    pub timeout_ms: u64,
    pub base_seed: u64,
    /// Where raw lines and the report land; `None` keeps everything in
    /// memory.
    pub out_dir: Option<PathBuf>,
    /// Worker cap for parallel games; `None` lets the pool decide.
    pub jobs: Option<usize>,
    pub canonicalize: bool,
    pub warm_start: bool,
}

impl BenchConfig {
    pub fn new(grids: Vec<(u32, u32)>, games: usize, strategies: Vec<StrategyId>) -> BenchConfig {
        BenchConfig {
            grids,
            games,
            strategies,
            timeout_ms: 60_000,
            base_seed: 0,
            out_dir: None,
            jobs: None,
            canonicalize: true,
            warm_start: true,
        }
    }
}

/// Aggregates for one (grid, strategy) pair.
#[derive(Clone, Debug, Serialize)]
pub struct BenchCell {
    /// "6x6" style label.
    pub grid: String,
    pub strategy: StrategyId,
    pub games: usize,
    pub win_rate: f64,
    pub mean_total_steps: f64,
    pub mean_total_time_ms: f64,
    /// Timed-out solves over all solves.
    pub timeout_rate: f64,
    /// Timeout rate of iteration k+1 among games that reached it.
    pub timeout_rate_by_iter: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
}

/// Per-iteration line in the raw stream: the game's index and seed, then
/// the record fields.
#[derive(Serialize)]
struct IterationLine<'a> {
    game: usize,
    seed: u64,
    #[serde(flatten)]
    record: &'a IterationRecord,
}

/// Per-game closing line in the raw stream.
#[derive(Serialize)]
struct SummaryLine<'a> {
    game: usize,
    seed: u64,
    won: bool,
    total_steps: usize,
    total_time_ms: f64,
    diagnostic: Option<&'a str>,
}

fn play_one(cfg: &GameConfig) -> Result<GameResult, GameError> {
    match catch_unwind(AssertUnwindSafe(|| run_game(cfg))) {
        Ok(result) => result,
        // A crashed game becomes a lost one so the study can finish.
        Err(panic) => {
            let why = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            Ok(GameResult {
                won: false,
                total_steps: 0,
                records: Vec::new(),
                total_time: std::time::Duration::ZERO,
                diagnostic: Some(format!("panicked: {why}")),
            })
        }
    }
}

fn aggregate(grid: (u32, u32), strategy: StrategyId, results: &[GameResult]) -> BenchCell {
    let games = results.len();
    let wins = results.iter().filter(|r| r.won).count();
    let mean_total_steps =
        results.iter().map(|r| r.total_steps as f64).sum::<f64>() / games as f64;
    let mean_total_time_ms =
        results.iter().map(|r| r.total_time.as_secs_f64() * 1e3).sum::<f64>() / games as f64;
    let max_iters = results.iter().map(|r| r.records.len()).max().unwrap_or(0);
    let mut timeout_rate_by_iter = Vec::with_capacity(max_iters);
    let mut timeouts = 0usize;
    let mut solves = 0usize;
    for k in 0..max_iters {
        let reached = results.iter().filter(|r| r.records.len() > k).count();
        let timed_out =
            results.iter().filter(|r| r.records.get(k).is_some_and(|x| x.timed_out)).count();
        timeout_rate_by_iter.push(timed_out as f64 / reached as f64);
        timeouts += timed_out;
        solves += reached;
    }
    BenchCell {
        grid: format!("{}x{}", grid.0, grid.1),
        strategy,
        games,
        win_rate: wins as f64 / games as f64,
        mean_total_steps,
        mean_total_time_ms,
        timeout_rate: if solves == 0 { 0.0 } else { timeouts as f64 / solves as f64 },
        timeout_rate_by_iter,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), BenchError> {
    fs::write(path, contents)
        .map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

fn raw_lines(seed_base: u64, results: &[GameResult]) -> String {
    let mut out = String::new();
    for (i, r) in results.iter().enumerate() {
        let seed = seed_base + i as u64;
        for record in &r.records {
            let line = IterationLine { game: i, seed, record };
            out.push_str(&serde_json::to_string(&line).expect("records serialize"));
            out.push('\n');
        }
        let line = SummaryLine {
            game: i,
            seed,
            won: r.won,
            total_steps: r.total_steps,
            total_time_ms: r.total_time.as_secs_f64() * 1e3,
            diagnostic: r.diagnostic.as_deref(),
        };
        out.push_str(&serde_json::to_string(&line).expect("summaries serialize"));
        out.push('\n');
    }
    out
}

/// Plays the whole study. Games of one (grid, strategy) pair run in
/// parallel; pairs run one after another and land in the report in config
/// order, so equal configs give equal reports apart from timing fields.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .expect("worker pool");
    let games_dir = match &cfg.out_dir {
        Some(dir) => {
            let games_dir = dir.join("games");
            fs::create_dir_all(&games_dir)
                .map_err(|source| BenchError::Io { path: games_dir.clone(), source })?;
            Some(games_dir)
        }
        None => None,
    };

    let mut cells = Vec::new();
    for &grid in &cfg.grids {
        for &strategy in &cfg.strategies {
            let results: Vec<Result<GameResult, GameError>> = pool.install(|| {
                use rayon::prelude::*;
                (0..cfg.games)
                    .into_par_iter()
                    .map(|i| {
                        let mut game_cfg =
                            GameConfig::new(grid.0, grid.1, cfg.base_seed + i as u64, strategy);
                        game_cfg.timeout_ms = cfg.timeout_ms;
                        game_cfg.canonicalize = cfg.canonicalize;
                        game_cfg.warm_start = cfg.warm_start;
                        play_one(&game_cfg)
                    })
                    .collect()
            });
            let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            if let Some(dir) = &games_dir {
                let path = dir.join(format!("{}x{}-{strategy}.jsonl", grid.0, grid.1));
                write_file(&path, &raw_lines(cfg.base_seed, &results))?;
            }
            let cell = aggregate(grid, strategy, &results);
            log::info!(
                "{} {}: win rate {:.2}, mean steps {:.1}",
                cell.grid,
                strategy,
                cell.win_rate,
                cell.mean_total_steps
            );
            cells.push(cell);
        }
    }

    let report = BenchReport { cells };
    if let Some(dir) = &cfg.out_dir {
        emit_report(&report, dir)?;
    }
    Ok(report)
}

/// Writes `report.csv` (one data row per cell, flat columns) and
/// `report.jsonl` (one object per cell, including the per-iteration
/// timeout curve).
pub fn emit_report(report: &BenchReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir)
        .map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })?;

    let mut csv = String::from(
        "grid,strategy,games,win_rate,mean_total_steps,mean_total_time_ms,timeout_rate\n",
    );
    for c in &report.cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.grid,
            c.strategy,
            c.games,
            c.win_rate,
            c.mean_total_steps,
            c.mean_total_time_ms,
            c.timeout_rate
        ));
    }
    write_file(&dir.join("report.csv"), &csv)?;

    let mut jsonl = String::new();
    for c in &report.cells {
        jsonl.push_str(&serde_json::to_string(c).expect("cells serialize"));
        jsonl.push('\n');
    }
    write_file(&dir.join("report.jsonl"), &jsonl)
}

#[cfg(test)]
mod tests;
