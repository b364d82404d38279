//! Incremental solver for minimal Hamiltonian snake instances.
//!
//! A solve call searches for a Hamiltonian cycle over the model's directed
//! edge variables that satisfies every snake-placement mechanism currently
//! active (facts, guarded clauses, activation literals, assumptions,
//! injected clauses) and, when head and apple externals are set, minimizes
//! the apple's 1-based position along the cycle counting from the head.
//!
//! The engine is a chronological backtracking search with three dedicated
//! propagators instead of a general clause calculus:
//!
//! * degree: every cell gets exactly one incoming and one outgoing edge,
//!   maintained by counting, with unit-style forcing both ways;
//! * subtour: forced edge chains are tracked with O(1) endpoint merging;
//!   closing a cycle shorter than the grid raises a conflict and learns two
//!   region cuts over the closed loop's cell set: some edge must leave it
//!   and some edge must enter it. The cuts are implied by the cycle
//!   structure alone, never by per-call state, so they persist across
//!   calls (`learned-global`) and are what makes reusing one solver across
//!   a game pay off;
//! * objective bound: once an incumbent with objective k exists, any state
//!   whose forced chain out of the head reaches length k without meeting
//!   the apple is pruned, as is any state whose chain end is provably too
//!   far from the apple (Manhattan distance is a lower bound on remaining
//!   steps) or whose uncovered cells are no longer reachable.
//!
//! Search order is deterministic. With a warm-start cycle stored, branching
//! first walks that cycle's edges, so the first emitted model *is* the
//! stored cycle whenever it is consistent (flagged `dummy`); afterwards the
//! search restarts with a tightened bound and branches by extending the
//! head's forced chain, preferring steps that close in on the apple, with
//! (x, y, direction) order breaking ties. Improving models are emitted
//! through the `on_model` callback, which may inject call-scoped clauses;
//! exhausting the search space proves the last incumbent optimal, hitting
//! the deadline returns it as is.

mod db;
mod search;

pub use db::{ClauseCounts, ClauseTag};
use db::{ClauseRef, Lit, Value, Var};

use std::fmt;
use std::time::{Duration, Instant};

use crate::grid::CyclePath;
use crate::model::{EdgeLit, Model, ModelError};

/// Cross-call working set for learned clauses: the least recently used ones
/// beyond this are evicted at the next solve call. Within a call learning is
/// unbounded; the cap keeps long games from dragging a huge cold clause
/// store through every propagation.
pub const LEARNED_CLAUSE_CAP: usize = 2_000;

const NONE: u32 = u32::MAX;

/// Handle to a guard variable. Guards gate clause batches: the clauses bite
/// only in calls that assume the guard, and releasing the guard retires
/// them permanently.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GuardLit(u32);

/// Per-call fixings applied at the search root.
#[derive(Clone, Copy, Debug)]
pub enum Assumption {
    Edge(EdgeLit, bool),
    Guard(GuardLit),
}

#[derive(Debug)]
pub enum SolveError {
    /// No model satisfies the active constraints; with the game's own
    /// constraint sets this signals a caller bug, not a hard instance.
    Unsat,
    /// Deadline expired before any model was found. Impossible when a
    /// consistent warm-start cycle is stored: the initial dive is exempt
    /// from the deadline until its first conflict.
    NoModelBeforeDeadline,
    /// More than one head or apple external is active.
    ContractViolation(&'static str),
    /// A released guard was used.
    GuardReleased(GuardLit),
    Model(ModelError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Unsat => write!(f, "constraints are unsatisfiable"),
            SolveError::NoModelBeforeDeadline => write!(f, "deadline hit before the first model"),
            SolveError::ContractViolation(why) => write!(f, "contract violation: {why}"),
            SolveError::GuardReleased(g) => write!(f, "guard #{} was already released", g.0),
            SolveError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<ModelError> for SolveError {
    fn from(e: ModelError) -> Self {
        SolveError::Model(e)
    }
}

/// An improving model, handed to the `on_model` callback as it is found.
pub struct ModelEvent<'a> {
    pub cycle: &'a CyclePath,
    /// Apple position from the head; `None` for pure satisfaction calls.
    pub objective: Option<usize>,
    /// True for the first model of a call when it reproduces the stored
    /// warm-start cycle unchanged.
    pub dummy: bool,
    /// 1-based model number within this call.
    pub index: usize,
}

/// Lets the `on_model` callback add clauses scoped to the current call.
pub struct Injector<'a> {
    model: &'a Model,
    pending: &'a mut Vec<Vec<Lit>>,
}

impl Injector<'_> {
    /// Queues a disjunction over edge polarities. It constrains every model
    /// found later in this call and evaporates when the call returns.
    pub fn inject_clause(&mut self, lits: &[(EdgeLit, bool)]) -> Result<(), ModelError> {
        let mut clause = Vec::with_capacity(lits.len());
        for &(lit, positive) in lits {
            let id = self.model.edge_id(lit)?;
            clause.push(Lit::new(id.0, positive));
        }
        self.pending.push(clause);
        Ok(())
    }
}

pub type OnModel<'a> = Box<dyn FnMut(&ModelEvent<'_>, &mut Injector<'_>) + 'a>;

pub struct SolveOptions<'a> {
    /// Wall-clock budget for this call; `None` runs to exhaustion.
    pub deadline: Option<Duration>,
    pub assumptions: Vec<Assumption>,
    pub on_model: Option<OnModel<'a>>,
    /// Prune with the incumbent's objective (on by default). Off, the call
    /// enumerates models, blocking each found one for the rest of the call,
    /// and still tracks the best seen.
    pub objective_bounding: bool,
}

impl Default for SolveOptions<'_> {
    fn default() -> Self {
        SolveOptions {
            deadline: None,
            assumptions: Vec::new(),
            on_model: None,
            objective_bounding: true,
        }
    }
}

impl SolveOptions<'_> {
    pub fn with_deadline(deadline: Option<Duration>) -> SolveOptions<'static> {
        SolveOptions { deadline, ..Default::default() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CallStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    /// Subtour clauses learned during this call.
    pub learned: u64,
    /// Propagations and conflicts raised by clauses learned in earlier
    /// calls; stays 0 on a solver's first call.
    pub reused_hits: u64,
    /// Models emitted during this call.
    pub models: u64,
    pub duration: Duration,
}

#[derive(Debug)]
pub struct SolveOutcome {
    /// Best model found. Satisfies all constraints active at return time.
    pub incumbent: CyclePath,
    /// Its objective; `None` for satisfaction-only calls.
    pub objective: Option<usize>,
    /// The search space below the incumbent was exhausted.
    pub optimal_proven: bool,
    pub timed_out: bool,
    /// Clauses were injected mid-call, so `optimal_proven` speaks about the
    /// injected-restricted space, not the original one.
    pub restricted_search: bool,
    pub stats: CallStats,
}

struct GuardInfo {
    released: bool,
}

/// Undo record for one chain merge. `start`/`end` are the merged chain's
/// endpoints whose bookkeeping entries the merge clobbered; the edge's own
/// cells are recovered from `edge`. Degree-conflicting true edges push no
/// record, so records carry their edge id for the undo to match against.
struct ChainUndo {
    edge: u32,
    start: u32,
    end: u32,
    old_len: u32,
}

/// One decision and whether its flipped polarity has been tried.
struct Decision {
    lit: Lit,
    flipped: bool,
}

/// Why a literal holds; antecedents are reconstructed lazily during
/// conflict analysis, so propagators stay allocation-free.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Reason {
    /// Decision, root seed, or flip: nothing to resolve through.
    Free,
    /// Unit propagation of a stored clause.
    Clause(ClauseRef),
    /// Forced false because this sibling edge of the same cell turned true.
    Shared(Var),
    /// Forced true as the cell's last possible outgoing edge.
    LastOut(u32),
    /// Forced true as the cell's last possible incoming edge.
    LastIn(u32),
}

/// Per-call search context.
struct CallCtx {
    optimizing: bool,
    /// Objective bounding enabled; when off, `bound` stays at max.
    bounding: bool,
    head_cell: u32,
    apple_cell: u32,
    /// Next model must have objective strictly below this.
    bound: usize,
    deadline: Option<Instant>,
    /// Deadline checks stay off during the initial warm-start dive so a
    /// consistent stored cycle always comes out, even with a zero budget.
    deadline_suspended: bool,
    prop_countdown: u32,
    /// This call's position in the solver's lifetime, for telling fresh
    /// learned clauses from reused ones.
    call_seq: u64,
    stats: CallStats,
}

impl Default for CallCtx {
    fn default() -> Self {
        CallCtx {
            optimizing: false,
            bounding: true,
            head_cell: NONE,
            apple_cell: NONE,
            bound: usize::MAX,
            deadline: None,
            deadline_suspended: false,
            prop_countdown: search::DEADLINE_CHECK_INTERVAL,
            call_seq: 0,
            stats: CallStats::default(),
        }
    }
}

pub struct Solver {
    model: Model,
    db: db::ClauseDb,
    n_edge_vars: u32,
    guards: Vec<GuardInfo>,
    /// Unit facts, re-asserted at every search root.
    facts: Vec<Lit>,
    /// Per-variable values that hold in every future call: facts, released
    /// guards, and unit consequences of the structural constraints. Used to
    /// purge permanently satisfied clauses and strip dead literals.
    perm: Vec<Value>,

    assign: Vec<Value>,
    trail: Vec<Lit>,
    trail_pos: Vec<u32>,
    qhead: usize,
    decisions: Vec<Decision>,
    trail_lim: Vec<usize>,
    num_assigned: usize,
    var_level: Vec<u32>,
    reason: Vec<Reason>,
    /// Conflict analysis scratch: seen stamps, the conflicting clause, and
    /// whether a call-scoped clause took part in the derivation.
    var_seen: Vec<u32>,
    seen_stamp: u32,
    confl: Vec<Lit>,
    confl_taint: bool,
    /// The last branch-point prune left a conflict clause in `confl`.
    prune_clause: bool,
    /// Unit consequences of the structural constraints alone, re-asserted
    /// at every search root like facts.
    learned_units: Vec<Lit>,

    out_true: Vec<u8>,
    in_true: Vec<u8>,

    succ_edge: Vec<u32>,
    pred_edge: Vec<u32>,
    chain_start: Vec<u32>,
    chain_end: Vec<u32>,
    chain_len: Vec<u32>,
    chain_undo: Vec<ChainUndo>,

    dist_apple: Vec<u32>,
    call_scoped: Vec<ClauseRef>,
    cell_color: Vec<u8>,
    visit_mark: Vec<u32>,
    port_src_mark: Vec<u32>,
    port_dst_mark: Vec<u32>,
    visit_stamp: u32,
    bfs: Vec<u32>,

    ctx: CallCtx,
}

enum DfsOutcome {
    Model,
    Exhausted,
    Deadline,
}

impl Solver {
    pub fn new(model: Model) -> Solver {
        let nm = model.grid().cell_count();
        let n_edges = model.edge_count();
        let mut s = Solver {
            model,
            db: db::ClauseDb::new(n_edges * 2),
            n_edge_vars: n_edges as u32,
            guards: Vec::new(),
            facts: Vec::new(),
            perm: vec![Value::Undef; n_edges],
            assign: vec![Value::Undef; n_edges],
            trail: Vec::with_capacity(n_edges),
            trail_pos: vec![NONE; n_edges],
            qhead: 0,
            decisions: Vec::new(),
            trail_lim: Vec::new(),
            num_assigned: 0,
            var_level: vec![0; n_edges],
            reason: vec![Reason::Free; n_edges],
            var_seen: vec![0; n_edges],
            seen_stamp: 0,
            confl: Vec::new(),
            confl_taint: false,
            prune_clause: false,
            learned_units: Vec::new(),
            out_true: vec![0; nm],
            in_true: vec![0; nm],
            succ_edge: vec![NONE; nm],
            pred_edge: vec![NONE; nm],
            chain_start: vec![0; nm],
            chain_end: vec![0; nm],
            chain_len: vec![1; nm],
            chain_undo: Vec::new(),
            dist_apple: vec![0; nm],
            call_scoped: Vec::new(),
            cell_color: Vec::new(),
            visit_mark: vec![0; nm],
            port_src_mark: vec![0; nm],
            port_dst_mark: vec![0; nm],
            visit_stamp: 0,
            bfs: Vec::with_capacity(nm),
            ctx: CallCtx::default(),
        };
        let grid = s.model.grid();
        s.cell_color =
            (0..nm).map(|c| ((grid.coord(c).x + grid.coord(c).y) & 1) as u8).collect();
        s.reset_search_state();
        s
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Externals, activation flags and the warm start live on the model and
    /// are read afresh by each solve call.
    pub fn model_mut(&mut self) -> &mut Model {
        &mut self.model
    }

    pub fn clause_counts(&self) -> ClauseCounts {
        self.db.counts()
    }

    /// Guards ever created, released ones included; guard ids are never
    /// reused, so this doubles as the next guard's id.
    pub fn guard_count(&self) -> usize {
        self.guards.len()
    }

    /// Permanently fixes an edge polarity, like a grounded fact.
    pub fn add_edge_fact(&mut self, lit: EdgeLit, value: bool) -> Result<(), SolveError> {
        let id = self.model.edge_id(lit)?;
        self.facts.push(Lit::new(id.0, value));
        self.perm[id.0 as usize] = if value { Value::True } else { Value::False };
        Ok(())
    }

    pub fn new_guard(&mut self) -> GuardLit {
        let g = GuardLit(self.guards.len() as u32);
        self.guards.push(GuardInfo { released: false });
        let n_vars = self.n_edge_vars as usize + self.guards.len();
        self.assign.resize(n_vars, Value::Undef);
        self.trail_pos.resize(n_vars, NONE);
        self.perm.resize(n_vars, Value::Undef);
        self.db.grow_vars(n_vars * 2);
        g
    }

    fn guard_var(&self, g: GuardLit) -> Var {
        self.n_edge_vars + g.0
    }

    fn check_guard(&self, g: GuardLit) -> Result<(), SolveError> {
        match self.guards.get(g.0 as usize) {
            None => Err(SolveError::ContractViolation("unknown guard")),
            Some(info) if info.released => Err(SolveError::GuardReleased(g)),
            Some(_) => Ok(()),
        }
    }

    /// Adds `guard -> edge` clauses. They are inert until a call assumes
    /// the guard and become permanently satisfied once it is released.
    pub fn add_guarded_constraints(
        &mut self,
        guard: GuardLit,
        edges: &[EdgeLit],
    ) -> Result<(), SolveError> {
        self.check_guard(guard)?;
        let gvar = self.guard_var(guard);
        for &lit in edges {
            let id = self.model.edge_id(lit)?;
            self.db.add(
                vec![Lit::new(id.0, true), Lit::new(gvar, false)],
                ClauseTag::Guarded,
                gvar,
            );
        }
        Ok(())
    }

    /// Marks the guard released: its clauses can no longer be activated and
    /// become eligible for physical deletion by [`Solver::cleanup`].
    pub fn release_guard(&mut self, guard: GuardLit) -> Result<(), SolveError> {
        match self.guards.get_mut(guard.0 as usize) {
            None => Err(SolveError::ContractViolation("unknown guard")),
            Some(info) => {
                info.released = true;
                let gvar = self.n_edge_vars + guard.0;
                self.perm[gvar as usize] = Value::False;
                Ok(())
            }
        }
    }

    /// Physically deletes clauses of released guards; returns the count.
    pub fn cleanup(&mut self) -> usize {
        let n_edge_vars = self.n_edge_vars;
        let guards = &self.guards;
        self.db.retain(|c| {
            !(c.tag == ClauseTag::Guarded
                && guards[(c.guard_var - n_edge_vars) as usize].released)
        })
    }

    pub fn solve(&mut self, mut opts: SolveOptions<'_>) -> Result<SolveOutcome, SolveError> {
        let t_start = Instant::now();

        let mut heads = self.model.heads();
        let head = heads.next();
        if heads.next().is_some() {
            return Err(SolveError::ContractViolation("more than one head external"));
        }
        drop(heads);
        let mut apples = self.model.apples();
        let apple = apples.next();
        if apples.next().is_some() {
            return Err(SolveError::ContractViolation("more than one apple external"));
        }
        drop(apples);

        // Between calls the assignment is empty, so stored clauses can be
        // purged against the permanent values and rewatched safely.
        match self.db.simplify_permanent(&self.perm) {
            None => return Err(SolveError::Unsat),
            Some(units) => {
                for lit in units {
                    match self.perm[lit.var() as usize].of(lit) {
                        Value::False => return Err(SolveError::Unsat),
                        Value::True => {}
                        Value::Undef => {
                            self.perm[lit.var() as usize] =
                                if lit.is_positive() { Value::True } else { Value::False };
                            self.learned_units.push(lit);
                        }
                    }
                }
            }
        }
        self.db.evict_learned_to(LEARNED_CLAUSE_CAP);
        self.reset_search_state();
        let grid = self.model.grid();
        self.ctx = CallCtx {
            optimizing: head.is_some() && apple.is_some(),
            bounding: opts.objective_bounding,
            head_cell: head.map_or(NONE, |c| grid.index(c) as u32),
            apple_cell: apple.map_or(NONE, |c| grid.index(c) as u32),
            bound: usize::MAX,
            deadline: opts.deadline.map(|d| t_start + d),
            deadline_suspended: self.model.warm_plan().is_some(),
            call_seq: self.db.begin_call(),
            ..CallCtx::default()
        };
        if let Some(a) = apple {
            for i in 0..self.dist_apple.len() {
                self.dist_apple[i] = self.model.grid().coord(i).manhattan(a);
            }
        }

        if !self.assign_roots(&opts.assumptions)? {
            self.finish_call();
            return Err(SolveError::Unsat);
        }

        let mut best: Option<(CyclePath, Option<usize>)> = None;
        let mut pending: Vec<Vec<Lit>> = Vec::new();
        let mut injected_any = false;
        let mut timed_out = false;
        let mut optimal_proven = false;

        loop {
            if best.is_some() && self.deadline_expired_now() {
                timed_out = true;
                break;
            }
            match self.dfs() {
                DfsOutcome::Model => {
                    let cycle = self.extract_cycle();
                    let objective = self.ctx.optimizing.then(|| self.current_objective());
                    let dummy = self.ctx.stats.models == 0 && self.matches_warm_start();
                    self.ctx.stats.models += 1;
                    if let Some(cb) = opts.on_model.as_mut() {
                        let event = ModelEvent {
                            cycle: &cycle,
                            objective,
                            dummy,
                            index: self.ctx.stats.models as usize,
                        };
                        let mut injector =
                            Injector { model: &self.model, pending: &mut pending };
                        cb(&event, &mut injector);
                    }
                    injected_any |= !pending.is_empty();
                    if self.ctx.bounding {
                        if let Some(obj) = objective {
                            // Cycle cells alternate checkerboard colors, so
                            // every feasible objective has the same parity
                            // as obj; obj - 1 is infeasible outright and
                            // the next layer to rule out is obj - 2.
                            self.ctx.bound = obj - 1;
                        }
                    } else if self.ctx.optimizing {
                        // Without bounding the restart would rediscover the
                        // same model forever; block it for this call.
                        let block = self
                            .succ_edge
                            .iter()
                            .map(|&e| Lit::new(e, false))
                            .collect();
                        pending.push(block);
                    }
                    let improves = match (&best, objective) {
                        (Some((_, Some(prev))), Some(obj)) => obj < *prev,
                        _ => best.is_none(),
                    };
                    if improves {
                        best = Some((cycle, objective));
                    }
                    self.ctx.deadline_suspended = false;
                    if !self.ctx.optimizing {
                        optimal_proven = true;
                        break;
                    }
                    self.backtrack_to_root();
                    if !pending.is_empty() && !self.install_pending(&mut pending) {
                        optimal_proven = true;
                        break;
                    }
                }
                DfsOutcome::Exhausted => {
                    optimal_proven = true;
                    break;
                }
                DfsOutcome::Deadline => {
                    timed_out = true;
                    break;
                }
            }
        }

        self.finish_call();
        self.ctx.stats.duration = t_start.elapsed();

        match best {
            None => {
                if timed_out {
                    Err(SolveError::NoModelBeforeDeadline)
                } else {
                    Err(SolveError::Unsat)
                }
            }
            Some((incumbent, objective)) => Ok(SolveOutcome {
                incumbent,
                objective,
                optimal_proven,
                timed_out,
                restricted_search: injected_any,
                stats: self.ctx.stats.clone(),
            }),
        }
    }

    /// Installs clauses injected by the callback; returns false when they
    /// contradict the root state, which exhausts the (restricted) search.
    fn install_pending(&mut self, pending: &mut Vec<Vec<Lit>>) -> bool {
        for clause in pending.drain(..) {
            let mut lits = clause;
            lits.sort_unstable_by_key(|l| {
                // Non-false literals first so both watches are sound.
                match self.value(*l) {
                    Value::Undef | Value::True => 0u8,
                    Value::False => 1,
                }
            });
            let n_live = lits
                .iter()
                .take_while(|&&l| self.value(l) != Value::False)
                .count();
            match n_live {
                0 => return false,
                1 => {
                    if self.value(lits[0]) == Value::Undef && !self.assign_root(lits[0]) {
                        return false;
                    }
                }
                _ => {
                    let cref = self.db.add(lits, ClauseTag::CallScoped, NONE);
                    self.call_scoped.push(cref);
                }
            }
        }
        !self.propagate_conflicts()
    }

    fn finish_call(&mut self) {
        self.backtrack_to_root();
        for cref in self.call_scoped.drain(..) {
            self.db.remove(cref);
        }
    }
}

#[cfg(test)]
mod tests;
