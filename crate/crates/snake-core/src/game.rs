//! The game loop: drop an apple on a free cell, ask the strategy for a
//! cycle, walk the snake along it to the apple, grow by one, repeat. The
//! game is won when the snake covers the board; it is lost only when the
//! strategy cannot produce a usable path.

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::grid::{Coord, CyclePath, GridError, GridGraph, Snake};
use crate::rng::SplitMix64;
use crate::strategy::{Strategy, StrategyId, StrategyOptions};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameError {
    Grid(GridError),
    Config(&'static str),
    /// No free cell is left for an apple; the board is covered.
    BoardFull,
    /// The path does not start with the snake's cells.
    PathMismatch,
    /// The apple never shows up on the path past the head.
    AppleMissing,
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::Grid(e) => write!(f, "{e}"),
            GameError::Config(msg) => write!(f, "bad config: {msg}"),
            GameError::BoardFull => write!(f, "no free cell for an apple"),
            GameError::PathMismatch => write!(f, "path does not start with the snake"),
            GameError::AppleMissing => write!(f, "apple unreachable along the path"),
        }
    }
}

// Display carries the whole story, so no source() chain to repeat it.
impl std::error::Error for GameError {}

impl From<GridError> for GameError {
    fn from(e: GridError) -> GameError {
        GameError::Grid(e)
    }
}

/// Settings for one game. `seed` fixes every apple; two runs with equal
/// configs replay the same game move for move.
#[derive(Clone, Debug)]
pub struct GameConfig {
    pub n: u32,
    pub m: u32,
    pub seed: u64,
    /// Wall-clock budget per solve call, in milliseconds.
    pub timeout_ms: u64,
    pub strategy: StrategyId,
    /// Mirror the board before solving so the head is in the first quadrant.
    pub canonicalize: bool,
    /// Hand each solve the previous cycle as its first branching plan.
    pub warm_start: bool,
}

impl GameConfig {
    pub fn new(n: u32, m: u32, seed: u64, strategy: StrategyId) -> GameConfig {
        GameConfig {
            n,
            m,
            seed,
            timeout_ms: 60_000,
            strategy,
            canonicalize: true,
            warm_start: true,
        }
    }

    fn strategy_options(&self) -> StrategyOptions {
        StrategyOptions {
            canonicalize: self.canonicalize,
            warm_start: self.warm_start,
            deadline: Some(Duration::from_millis(self.timeout_ms)),
        }
    }
}

/// Live position: the snake, the apple when one is on the board, and the
/// running totals.
#[derive(Clone, Debug)]
pub struct GameState {
    pub snake: Snake,
    pub apple: Option<Coord>,
    pub steps: usize,
    pub iteration: usize,
}

/// One apple's worth of bookkeeping, in the shape the bench files use.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    #[serde(rename = "iter")]
    pub iteration: usize,
    /// Snake length when the apple appeared.
    #[serde(rename = "len")]
    pub snake_len: usize,
    pub apple: Coord,
    pub steps: usize,
    pub solve_ms: f64,
    pub objective: Option<usize>,
    #[serde(rename = "optimal")]
    pub optimal_proven: bool,
    #[serde(rename = "timeout")]
    pub timed_out: bool,
}

#[derive(Clone, Debug)]
pub struct GameResult {
    /// True exactly when the snake grew to cover every cell.
    pub won: bool,
    pub total_steps: usize,
    pub records: Vec<IterationRecord>,
    pub total_time: Duration,
    /// Why the game was lost, when it was.
    pub diagnostic: Option<String>,
}

/// Uniformly random free cell. Rejection-samples whole-board draws, so
/// every free cell is equally likely regardless of the snake's shape.
pub fn place_apple(
    g: &GridGraph,
    snake: &Snake,
    rng: &mut SplitMix64,
) -> Result<Coord, GameError> {
    if snake.len() == g.cell_count() {
        return Err(GameError::BoardFull);
    }
    loop {
        let cell = g.coord(rng.below(g.cell_count() as u64) as usize);
        if !snake.contains(cell) {
            return Ok(cell);
        }
    }
}

/// Advances the snake along `p` until it eats the apple. Every step pushes
/// the head one cell forward and drags the tail, except the apple step,
/// which keeps the tail so the snake grows by one. Returns the new snake
/// and the number of steps taken.
pub fn follow_path(
    g: &GridGraph,
    snake: &Snake,
    p: &[Coord],
    apple: Coord,
) -> Result<(Snake, usize), GameError> {
    if p.len() < snake.len() || p[..snake.len()] != *snake.cells() {
        return Err(GameError::PathMismatch);
    }
    let head_idx = snake.len() - 1;
    let apple_idx = p[head_idx + 1..]
        .iter()
        .position(|&c| c == apple)
        .map(|k| head_idx + 1 + k)
        .ok_or(GameError::AppleMissing)?;
    if p[head_idx..=apple_idx].windows(2).any(|w| !w[0].is_adjacent(w[1])) {
        return Err(GameError::PathMismatch);
    }
    // After each step the snake is a window of `p` ending at the head, so
    // the final snake is the window ending at the apple, one cell longer.
    let steps = apple_idx - head_idx;
    let cells = p[apple_idx - snake.len()..=apple_idx].to_vec();
    Ok((Snake::new(g, cells)?, steps))
}

/// A game in progress, steppable one apple at a time.
pub struct Game {
    grid: GridGraph,
    state: GameState,
    strategy: Strategy,
    rng: SplitMix64,
    records: Vec<IterationRecord>,
    last_path: Option<CyclePath>,
    total_time: Duration,
    diagnostic: Option<String>,
}

impl Game {
    pub fn new(cfg: &GameConfig) -> Result<Game, GameError> {
        if cfg.timeout_ms == 0 {
            return Err(GameError::Config("timeout_ms must be positive"));
        }
        let grid = GridGraph::new(cfg.n, cfg.m)?;
        let strategy = Strategy::new(grid.clone(), cfg.strategy, cfg.strategy_options());
        Ok(Game {
            grid,
            state: GameState {
                snake: Snake::initial(),
                apple: None,
                steps: 0,
                iteration: 0,
            },
            strategy,
            rng: SplitMix64::new(cfg.seed),
            records: Vec::new(),
            last_path: None,
            total_time: Duration::ZERO,
            diagnostic: None,
        })
    }

    pub fn grid(&self) -> &GridGraph {
        &self.grid
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    /// Cycle followed on the most recent successful step, if any.
    pub fn last_path(&self) -> Option<&CyclePath> {
        self.last_path.as_ref()
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn won(&self) -> bool {
        self.state.snake.len() == self.grid.cell_count()
    }

    pub fn over(&self) -> bool {
        self.won() || self.diagnostic.is_some()
    }

    /// Plays one apple: place, retrieve, follow. Returns true while the
    /// game goes on. A strategy failure ends the game as lost, with the
    /// reason kept for the result; it never panics.
    pub fn step(&mut self) -> bool {
        if self.over() {
            return false;
        }
        let started = Instant::now();
        let proceed = self.step_inner();
        self.total_time += started.elapsed();
        proceed
    }

    fn step_inner(&mut self) -> bool {
        let apple = match place_apple(&self.grid, &self.state.snake, &mut self.rng) {
            Ok(c) => c,
            Err(e) => return self.lose(e.to_string()),
        };
        self.state.iteration += 1;
        self.state.apple = Some(apple);
        let snake_len = self.state.snake.len();

        let result = match self.strategy.retrieve(&self.state.snake, apple) {
            Ok(r) => r,
            Err(e) => return self.lose(format!("iteration {}: {e}", self.state.iteration)),
        };
        let Some(path) = result.path else {
            return self.lose(format!("iteration {}: no path", self.state.iteration));
        };
        let (snake, steps) = match follow_path(&self.grid, &self.state.snake, path.cells(), apple)
        {
            Ok(moved) => moved,
            Err(e) => return self.lose(format!("iteration {}: {e}", self.state.iteration)),
        };

        self.state.snake = snake;
        self.state.steps += steps;
        self.state.apple = None;
        self.last_path = Some(path);
        self.records.push(IterationRecord {
            iteration: self.state.iteration,
            snake_len,
            apple,
            steps,
            solve_ms: result.stats.duration.as_secs_f64() * 1e3,
            objective: result.objective,
            optimal_proven: result.optimal_proven,
            timed_out: result.timed_out,
        });
        !self.over()
    }

    fn lose(&mut self, why: String) -> bool {
        self.diagnostic = Some(why);
        false
    }

    pub fn finish(self) -> GameResult {
        GameResult {
            won: self.won(),
            total_steps: self.state.steps,
            records: self.records,
            total_time: self.total_time,
            diagnostic: self.diagnostic,
        }
    }
}

/// Plays a full game. Errors only on an unusable config; in-game failures
/// come back as a lost [`GameResult`] carrying a diagnostic.
pub fn run_game(cfg: &GameConfig) -> Result<GameResult, GameError> {
    let mut game = Game::new(cfg)?;
    while game.step() {}
    Ok(game.finish())
}
