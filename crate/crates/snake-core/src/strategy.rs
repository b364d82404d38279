//! Per-iteration cycle retrieval.
//!
//! A strategy answers one question each time an apple appears: which
//! Hamiltonian cycle should the snake follow now? [`StrategyId::Naive`]
//! answers without searching by re-following one fixed cycle. The other
//! five run the incremental solver on the same minimal-apple-index query
//! and differ only in how they tell the solver where the snake is; the
//! trade-off each one makes is described on its variant.
//!
//! All six return the cycle rotated so the snake's cells are its prefix,
//! in the original board frame, and remember it as the warm start for the
//! next call.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::grid::{
    canonicalize, generic_hc, Coord, CyclePath, GridGraph, MirrorTransform, Snake,
};
use crate::model::{objective_of, snake_edge_lits, External, Model, ModelError};
use crate::solver::{
    Assumption, CallStats, Injector, ModelEvent, SolveError, SolveOptions, SolveOutcome, Solver,
};

/// How the snake's position reaches the solver, once per apple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyId {
    /// Follows one fixed cycle forever; no solving.
    Naive,
    /// Builds a fresh solver every call; the snake's edges become permanent
    /// facts of that throwaway instance.
    OneShot,
    /// One persistent solver; each call hides the snake's edges behind a
    /// fresh disposable guard that is assumed for the call, then released
    /// and garbage-collected.
    AdHoc,
    /// One persistent solver with an activation toggle per directed edge,
    /// all created up front; each call switches the snake's edges on and
    /// back off.
    Preground,
    /// One persistent solver; the snake's edges ride in as per-call
    /// assumptions, leaving the clause store untouched.
    Assume,
    /// One persistent solver and no up-front snake constraints; the first
    /// model re-emits the previous cycle and a model callback injects the
    /// snake's edges as call-scoped clauses.
    Nogood,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::Naive,
        StrategyId::OneShot,
        StrategyId::AdHoc,
        StrategyId::Preground,
        StrategyId::Assume,
        StrategyId::Nogood,
    ];

    /// Everything except [`StrategyId::Naive`] runs the solver.
    pub fn solver_backed(self) -> bool {
        self != StrategyId::Naive
    }

    /// Keeps one solver alive across calls.
    pub fn multi_shot(self) -> bool {
        !matches!(self, StrategyId::Naive | StrategyId::OneShot)
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::Naive => "naive",
            StrategyId::OneShot => "oneshot",
            StrategyId::AdHoc => "adhoc",
            StrategyId::Preground => "preground",
            StrategyId::Assume => "assume",
            StrategyId::Nogood => "nogood",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseStrategyError {
    pub unknown: String,
}

impl fmt::Display for ParseStrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown strategy {:?}; expected one of naive, oneshot, adhoc, preground, assume, nogood",
            self.unknown
        )
    }
}

impl std::error::Error for ParseStrategyError {}

impl FromStr for StrategyId {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> Result<StrategyId, ParseStrategyError> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| ParseStrategyError { unknown: s.to_string() })
    }
}

#[derive(Debug)]
pub enum StrategyError {
    Solve(SolveError),
    Model(ModelError),
    /// A cycle failed the starts-with-the-snake recheck.
    Contract(&'static str),
}

impl fmt::Display for StrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyError::Solve(e) => write!(f, "solve failed: {e}"),
            StrategyError::Model(e) => write!(f, "model rejected the state: {e}"),
            StrategyError::Contract(msg) => write!(f, "retrieval contract broken: {msg}"),
        }
    }
}

// Display carries the whole story, so no source() chain to repeat it.
impl std::error::Error for StrategyError {}

impl From<SolveError> for StrategyError {
    fn from(e: SolveError) -> StrategyError {
        StrategyError::Solve(e)
    }
}

impl From<ModelError> for StrategyError {
    fn from(e: ModelError) -> StrategyError {
        StrategyError::Model(e)
    }
}

/// What one retrieval produced.
#[derive(Clone, Debug)]
pub struct RetrieveResult {
    /// Cycle in the original frame, rotated so the snake's cells are its
    /// prefix. `None` means the game is lost.
    pub path: Option<CyclePath>,
    /// Apple's 1-based position counted from the head along the path.
    pub objective: Option<usize>,
    /// The objective was proven minimal, not merely the best found.
    pub optimal_proven: bool,
    pub timed_out: bool,
    /// Mid-call clause injection narrowed the search space.
    pub restricted_search: bool,
    pub stats: CallStats,
}

#[derive(Clone, Copy, Debug)]
pub struct StrategyOptions {
    /// Mirror the board so the head lands in the first quadrant before
    /// solving, and mirror the answer back.
    pub canonicalize: bool,
    /// Hand the previous cycle to the solver as the first branching plan.
    pub warm_start: bool,
    /// Wall-clock budget per solve call; `None` runs to optimality.
    pub deadline: Option<Duration>,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        StrategyOptions { canonicalize: true, warm_start: true, deadline: None }
    }
}

/// One game's retrieval state: the backend, its solver when one persists
/// across calls, and the previous cycle.
pub struct Strategy {
    id: StrategyId,
    grid: GridGraph,
    /// Persistent engine for the multi-shot backends; `None` for the rest.
    solver: Option<Solver>,
    /// Last accepted cycle, original frame, snake-prefix rotation.
    prev: CyclePath,
    opts: StrategyOptions,
}

impl Strategy {
    pub fn new(grid: GridGraph, id: StrategyId, opts: StrategyOptions) -> Strategy {
        let solver =
            id.multi_shot().then(|| Solver::new(Model::new(grid.clone())));
        let prev = generic_hc(&grid);
        Strategy { id, grid, solver, prev, opts }
    }

    pub fn id(&self) -> StrategyId {
        self.id
    }

    /// The persistent solver, for stats inspection; `None` for backends
    /// without one.
    pub fn solver(&self) -> Option<&Solver> {
        self.solver.as_ref()
    }

    /// The cycle the next call will warm-start from.
    pub fn previous_cycle(&self) -> &CyclePath {
        &self.prev
    }

    /// Picks the cycle for this iteration. The snake must lie along the
    /// previously returned cycle (it does when the game walks that cycle)
    /// and the apple must be off the snake.
    pub fn retrieve(
        &mut self,
        snake: &Snake,
        apple: Coord,
    ) -> Result<RetrieveResult, StrategyError> {
        if snake.contains(apple) {
            return Err(StrategyError::Contract("apple on the snake"));
        }
        if self.id == StrategyId::Naive {
            return self.naive(snake, apple);
        }

        let (snake_c, apple_c, tf) = if self.opts.canonicalize {
            canonicalize(&self.grid, snake, apple)
        } else {
            (snake.clone(), apple, MirrorTransform::identity(&self.grid))
        };
        let outcome = self.solve_in_frame(&snake_c, apple_c, &tf)?;

        let path = self.accept(tf.apply_cycle(&outcome.incumbent), snake)?;
        Ok(RetrieveResult {
            path: Some(path),
            objective: outcome.objective,
            optimal_proven: outcome.optimal_proven,
            timed_out: outcome.timed_out,
            restricted_search: outcome.restricted_search,
            stats: outcome.stats,
        })
    }

    /// Rotates a solved cycle to the snake's tail, verifies the snake is
    /// its prefix and stores it for the next warm start.
    fn accept(&mut self, cycle: CyclePath, snake: &Snake) -> Result<CyclePath, StrategyError> {
        let path = cycle
            .rotated_to(snake.tail())
            .ok_or(StrategyError::Contract("tail missing from the cycle"))?;
        if path.cells()[..snake.len()] != *snake.cells() {
            return Err(StrategyError::Contract("cycle does not start with the snake"));
        }
        self.prev = path.clone();
        Ok(path)
    }

    /// Re-follows the stored cycle: rotate it to the snake and read the
    /// apple's position off it. No search, constant work per apple.
    fn naive(&mut self, snake: &Snake, apple: Coord) -> Result<RetrieveResult, StrategyError> {
        let started = Instant::now();
        let path = self.accept(self.prev.clone(), snake)?;
        let objective = objective_of(&path, snake.head(), apple)?;
        Ok(RetrieveResult {
            path: Some(path),
            objective: Some(objective),
            optimal_proven: false,
            timed_out: false,
            restricted_search: false,
            stats: CallStats { duration: started.elapsed(), ..CallStats::default() },
        })
    }

    /// Runs the backend in the mirrored frame. Learned subtour clauses
    /// mention only edges, never the snake, head or apple, so reusing them
    /// stays sound when the mirror changes between calls.
    fn solve_in_frame(
        &mut self,
        snake: &Snake,
        apple: Coord,
        tf: &MirrorTransform,
    ) -> Result<SolveOutcome, StrategyError> {
        let warm = tf.apply_cycle(&self.prev);
        match self.id {
            StrategyId::OneShot => self.solve_oneshot(snake, apple, warm),
            StrategyId::AdHoc => self.solve_adhoc(snake, apple, warm),
            StrategyId::Preground => self.solve_preground(snake, apple, warm),
            StrategyId::Assume => self.solve_assume(snake, apple, warm),
            StrategyId::Nogood => self.solve_nogood(snake, apple, warm),
            StrategyId::Naive => unreachable!("naive never solves"),
        }
    }

    fn set_frame(
        model: &mut Model,
        snake: &Snake,
        apple: Coord,
        warm: Option<CyclePath>,
    ) -> Result<(), StrategyError> {
        model.set_external(External::Head(snake.head()), true)?;
        model.set_external(External::Apple(apple), true)?;
        match warm {
            Some(cycle) => model.set_warm_start(cycle)?,
            None => model.clear_warm_start(),
        }
        Ok(())
    }

    fn clear_frame(model: &mut Model, snake: &Snake, apple: Coord) {
        // Coordinates were accepted on the way in, so clearing cannot fail.
        let _ = model.set_external(External::Head(snake.head()), false);
        let _ = model.set_external(External::Apple(apple), false);
    }

    /// Fresh instance per call: new model, snake edges as permanent facts,
    /// solve once, drop everything. Nothing carries over but the warm start.
    fn solve_oneshot(
        &mut self,
        snake: &Snake,
        apple: Coord,
        warm: CyclePath,
    ) -> Result<SolveOutcome, StrategyError> {
        let mut model = Model::new(self.grid.clone());
        Self::set_frame(&mut model, snake, apple, self.opts.warm_start.then_some(warm))?;
        let mut solver = Solver::new(model);
        for lit in snake_edge_lits(snake) {
            solver.add_edge_fact(lit, true)?;
        }
        Ok(solver.solve(SolveOptions::with_deadline(self.opts.deadline))?)
    }

    /// Disposable guard per call: guarded snake-edge clauses activate only
    /// while the guard is assumed; afterwards the guard is released, never
    /// to be reused, and its clauses are deleted.
    fn solve_adhoc(
        &mut self,
        snake: &Snake,
        apple: Coord,
        warm: CyclePath,
    ) -> Result<SolveOutcome, StrategyError> {
        let solver = self.solver.as_mut().expect("multi-shot backend owns a solver");
        let guard = solver.new_guard();
        solver.add_guarded_constraints(guard, &snake_edge_lits(snake))?;
        let mut opts = SolveOptions::with_deadline(self.opts.deadline);
        opts.assumptions.push(Assumption::Guard(guard));
        Self::set_frame(solver.model_mut(), snake, apple, self.opts.warm_start.then_some(warm))?;
        let result = solver.solve(opts);
        Self::clear_frame(solver.model_mut(), snake, apple);
        solver.release_guard(guard)?;
        solver.cleanup();
        Ok(result?)
    }

    /// Activation toggles: the table covers every directed edge from
    /// construction, so a call only flips the snake's entries on and off.
    fn solve_preground(
        &mut self,
        snake: &Snake,
        apple: Coord,
        warm: CyclePath,
    ) -> Result<SolveOutcome, StrategyError> {
        let solver = self.solver.as_mut().expect("multi-shot backend owns a solver");
        let edges = snake_edge_lits(snake);
        for &lit in &edges {
            solver.model_mut().set_activation(lit, true)?;
        }
        Self::set_frame(solver.model_mut(), snake, apple, self.opts.warm_start.then_some(warm))?;
        let result = solver.solve(SolveOptions::with_deadline(self.opts.deadline));
        Self::clear_frame(solver.model_mut(), snake, apple);
        for &lit in &edges {
            let _ = solver.model_mut().set_activation(lit, false);
        }
        Ok(result?)
    }

    /// Pure assumptions: the snake's edges hold for exactly this call and
    /// the model is never touched.
    fn solve_assume(
        &mut self,
        snake: &Snake,
        apple: Coord,
        warm: CyclePath,
    ) -> Result<SolveOutcome, StrategyError> {
        let solver = self.solver.as_mut().expect("multi-shot backend owns a solver");
        let mut opts = SolveOptions::with_deadline(self.opts.deadline);
        opts.assumptions
            .extend(snake_edge_lits(snake).into_iter().map(|lit| Assumption::Edge(lit, true)));
        Self::set_frame(solver.model_mut(), snake, apple, self.opts.warm_start.then_some(warm))?;
        let result = solver.solve(opts);
        Self::clear_frame(solver.model_mut(), snake, apple);
        Ok(result?)
    }

    /// No up-front snake constraints at all. The call starts at the stored
    /// cycle, so the first model reproduces it and is flagged as such; the
    /// callback then pins every snake edge with call-scoped unit clauses
    /// and the search continues under them. The first model's objective is
    /// a sound bound because the snake lies along the stored cycle. The
    /// warm start is the mechanism here, not a heuristic, so the
    /// [`StrategyOptions::warm_start`] toggle does not apply.
    fn solve_nogood(
        &mut self,
        snake: &Snake,
        apple: Coord,
        warm: CyclePath,
    ) -> Result<SolveOutcome, StrategyError> {
        let solver = self.solver.as_mut().expect("multi-shot backend owns a solver");
        let edges = snake_edge_lits(snake);
        // Validated here so the callback's injections cannot fail.
        for &lit in &edges {
            solver.model().edge_id(lit)?;
        }
        let mut missing_dummy = false;
        let mut opts = SolveOptions::with_deadline(self.opts.deadline);
        opts.on_model = Some(Box::new(|ev: &ModelEvent<'_>, inj: &mut Injector<'_>| {
            if ev.index == 1 && !ev.dummy {
                missing_dummy = true;
                // Poison the call: without the snake pinned, optimizing
                // further would answer the wrong question.
                let _ = inj.inject_clause(&[]);
            }
            if ev.dummy {
                for &lit in &edges {
                    let _ = inj.inject_clause(&[(lit, true)]);
                }
            }
        }));
        Self::set_frame(solver.model_mut(), snake, apple, Some(warm))?;
        let result = solver.solve(opts);
        Self::clear_frame(solver.model_mut(), snake, apple);
        if missing_dummy {
            return Err(StrategyError::Solve(SolveError::ContractViolation(
                "first model did not reproduce the warm start",
            )));
        }
        Ok(result?)
    }
}
