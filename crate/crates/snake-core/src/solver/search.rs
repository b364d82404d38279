//! The search engine behind [`super::Solver::solve`]: chronological DFS
//! over edge variables with dedicated propagators.
//!
//! Per processed trail entry, three things happen. Degree counting keeps
//! every cell at exactly one true outgoing and incoming edge, forcing
//! siblings false and lone survivors true. Chain bookkeeping merges forced
//! edges into maximal paths with O(1) endpoint lookups; a merge that closes
//! a loop over fewer than all cells is a conflict whose edge set is learned
//! as a reusable clause, and a loop over all cells is a Hamiltonian cycle.
//! Finally, two-watched-literal visiting propagates the clause store.
//!
//! A propagation fixpoint with every variable assigned is a model: degree
//! counting guarantees a cycle cover, and any short cycle would have closed
//! mid-propagation and conflicted. Otherwise the engine prunes hopeless
//! states (incumbent bound, reachability) and branches.

use std::time::Instant;

use super::db::{ClauseRef, ClauseTag, Lit, Value, Var};
use super::{Assumption, ChainUndo, Decision, DfsOutcome, Reason, SolveError, Solver, NONE};
use crate::grid::CyclePath;
use crate::model::EdgeId;

/// Propagation events between wall-clock reads; also bounds how far a
/// deadline can overshoot.
pub(super) const DEADLINE_CHECK_INTERVAL: u32 = 1024;

pub(super) enum Prop {
    Fixpoint,
    Conflict,
    Deadline,
}

enum WatchAction {
    /// Stale reference to a deleted clause; drop the entry.
    Prune,
    Keep,
    /// Watch moved to the carried literal.
    Moved(Lit),
    Unit(Lit),
    Conflict,
}

/// Forced chain through the head: `t -> ... -> head -> ... -> z`.
struct HeadChain {
    z: u32,
    t: u32,
    /// Cells from head to `z` inclusive; the head counts as 1.
    forward_len: u32,
    /// Apple's 1-based position from the head, if already forced.
    apple_pos: Option<u32>,
}

fn lit_value(assign: &[Value], l: Lit) -> Value {
    assign[l.var() as usize].of(l)
}

/// Out/in edge lists have at most 4 entries; a stack copy sidesteps borrow
/// fights between the model and the assignment.
fn copy4(es: &[EdgeId]) -> ([u32; 4], usize) {
    let mut buf = [0u32; 4];
    for (b, e) in buf.iter_mut().zip(es) {
        *b = e.0;
    }
    (buf, es.len())
}

impl Solver {
    pub(super) fn reset_search_state(&mut self) {
        let nm = self.model.grid().cell_count();
        let n_vars = self.n_edge_vars as usize + self.guards.len();
        self.assign.clear();
        self.assign.resize(n_vars, Value::Undef);
        self.trail.clear();
        self.trail_pos.clear();
        self.trail_pos.resize(n_vars, NONE);
        self.var_level.resize(n_vars, 0);
        self.reason.resize(n_vars, Reason::Free);
        self.var_seen.resize(n_vars, 0);
        self.qhead = 0;
        self.decisions.clear();
        self.trail_lim.clear();
        self.num_assigned = 0;
        self.out_true.iter_mut().for_each(|x| *x = 0);
        self.in_true.iter_mut().for_each(|x| *x = 0);
        for c in 0..nm {
            self.succ_edge[c] = NONE;
            self.pred_edge[c] = NONE;
            self.chain_start[c] = c as u32;
            self.chain_end[c] = c as u32;
            self.chain_len[c] = 1;
        }
        self.chain_undo.clear();
    }

    pub(super) fn value(&self, lit: Lit) -> Value {
        lit_value(&self.assign, lit)
    }

    /// False only when `lit` is already assigned the opposite way.
    fn enqueue(&mut self, lit: Lit, reason: Reason) -> bool {
        match self.value(lit) {
            Value::True => true,
            Value::False => false,
            Value::Undef => {
                let var = lit.var() as usize;
                self.assign[var] = if lit.is_positive() { Value::True } else { Value::False };
                self.trail_pos[var] = self.trail.len() as u32;
                self.var_level[var] = self.trail_lim.len() as u32;
                self.reason[var] = reason;
                self.trail.push(lit);
                self.num_assigned += 1;
                true
            }
        }
    }

    pub(super) fn assign_root(&mut self, lit: Lit) -> bool {
        debug_assert!(self.trail_lim.is_empty());
        self.enqueue(lit, Reason::Free)
    }

    /// Seeds the root level: guard polarities, permanent facts, active
    /// activation edges, then per-call assumptions. `Ok(false)` means two
    /// of them contradict outright.
    pub(super) fn assign_roots(&mut self, assumptions: &[Assumption]) -> Result<bool, SolveError> {
        let mut assumed = vec![false; self.guards.len()];
        let mut assumption_lits = Vec::new();
        for a in assumptions {
            match *a {
                Assumption::Guard(g) => {
                    self.check_guard(g)?;
                    assumed[g.0 as usize] = true;
                }
                Assumption::Edge(lit, val) => {
                    let id = self.model.edge_id(lit)?;
                    assumption_lits.push(Lit::new(id.0, val));
                }
            }
        }
        let mut roots = Vec::with_capacity(
            self.guards.len()
                + self.facts.len()
                + self.learned_units.len()
                + assumption_lits.len(),
        );
        for (i, info) in self.guards.iter().enumerate() {
            let positive = assumed[i] && !info.released;
            roots.push(Lit::new(self.n_edge_vars + i as u32, positive));
        }
        roots.extend_from_slice(&self.facts);
        roots.extend_from_slice(&self.learned_units);
        roots.extend(self.model.active_edges().map(|id| Lit::new(id.0, true)));
        roots.extend(assumption_lits);
        for lit in roots {
            if !self.assign_root(lit) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub(super) fn propagate(&mut self) -> Prop {
        while self.qhead < self.trail.len() {
            if self.deadline_tick() {
                return Prop::Deadline;
            }
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.ctx.stats.propagations += 1;
            let var = p.var();
            if var < self.n_edge_vars {
                let ok = if p.is_positive() {
                    self.apply_true_edge(var)
                } else {
                    self.apply_false_edge(var)
                };
                if !ok {
                    return Prop::Conflict;
                }
            }
            if !self.visit_watchers(p) {
                return Prop::Conflict;
            }
        }
        Prop::Fixpoint
    }

    pub(super) fn propagate_conflicts(&mut self) -> bool {
        matches!(self.propagate(), Prop::Conflict)
    }

    fn deadline_tick(&mut self) -> bool {
        self.ctx.prop_countdown -= 1;
        if self.ctx.prop_countdown > 0 {
            return false;
        }
        self.ctx.prop_countdown = DEADLINE_CHECK_INTERVAL;
        if self.ctx.deadline_suspended {
            return false;
        }
        match self.ctx.deadline {
            Some(d) => Instant::now() >= d,
            None => false,
        }
    }

    pub(super) fn deadline_expired_now(&self) -> bool {
        match self.ctx.deadline {
            Some(d) => Instant::now() >= d,
            None => false,
        }
    }

    /// Degree and chain effects of an edge turning true. Bookkeeping is
    /// always left in a state the trail undo can reverse, conflict or not.
    /// On conflict the violated clause is left in `confl` for analysis.
    fn apply_true_edge(&mut self, var: Var) -> bool {
        let edge = self.model.edge(EdgeId(var));
        let (u, v) = (edge.from_cell as usize, edge.to_cell as usize);
        self.out_true[u] += 1;
        self.in_true[v] += 1;
        if self.out_true[u] > 1 {
            // Second successor of u; no merge happened.
            self.set_conflict([Lit::new(var, false), Lit::new(self.succ_edge[u], false)]);
            return false;
        }
        if self.in_true[v] > 1 {
            self.set_conflict([Lit::new(var, false), Lit::new(self.pred_edge[v], false)]);
            return false;
        }
        // u ends the chain a..u, v starts the chain v..b; join them.
        let a = self.chain_start[u] as usize;
        let b = self.chain_end[v] as usize;
        self.succ_edge[u] = var;
        self.pred_edge[v] = var;
        self.chain_undo.push(ChainUndo {
            edge: var,
            start: a as u32,
            end: b as u32,
            old_len: self.chain_len[a],
        });
        let closing = a == v;
        if !closing {
            self.chain_len[a] += self.chain_len[v];
        }
        self.chain_end[a] = b as u32;
        self.chain_start[b] = a as u32;
        if closing && (self.chain_len[a] as usize) < self.model.grid().cell_count() {
            // Conflict clause: not all of this subtour's edges at once.
            self.confl.clear();
            self.confl_taint = false;
            let mut c = a;
            loop {
                let e = self.succ_edge[c];
                self.confl.push(Lit::new(e, false));
                c = self.model.edge(EdgeId(e)).to_cell as usize;
                if c == a {
                    break;
                }
            }
            self.learn_subtour(a);
            return false;
        }
        let (outs, n_out) = copy4(self.model.out_edges(u));
        for &sib in &outs[..n_out] {
            if sib != var && !self.enqueue(Lit::new(sib, false), Reason::Shared(var)) {
                self.set_conflict([Lit::new(var, false), Lit::new(sib, false)]);
                return false;
            }
        }
        let (ins, n_in) = copy4(self.model.in_edges(v));
        for &sib in &ins[..n_in] {
            if sib != var && !self.enqueue(Lit::new(sib, false), Reason::Shared(var)) {
                self.set_conflict([Lit::new(var, false), Lit::new(sib, false)]);
                return false;
            }
        }
        true
    }

    fn set_conflict(&mut self, lits: impl IntoIterator<Item = Lit>) {
        self.confl.clear();
        self.confl.extend(lits);
        self.confl_taint = false;
    }

    /// An edge turning false can strand its cells: no successor candidate
    /// left is a conflict, exactly one left is forced.
    fn apply_false_edge(&mut self, var: Var) -> bool {
        let edge = self.model.edge(EdgeId(var));
        let (u, v) = (edge.from_cell as usize, edge.to_cell as usize);
        if self.out_true[u] == 0 && !self.force_last_slot(u, true) {
            return false;
        }
        if self.in_true[v] == 0 && !self.force_last_slot(v, false) {
            return false;
        }
        true
    }

    fn force_last_slot(&mut self, cell: usize, outgoing: bool) -> bool {
        let (edges, n) = if outgoing {
            copy4(self.model.out_edges(cell))
        } else {
            copy4(self.model.in_edges(cell))
        };
        let mut last = NONE;
        let mut n_undef = 0;
        for &e in &edges[..n] {
            match self.assign[e as usize] {
                // An edge can be assigned true but not yet applied (still
                // queued), so the degree counters lag; it still occupies
                // the slot and nothing may be forced.
                Value::True => return true,
                Value::Undef => {
                    last = e;
                    n_undef += 1;
                }
                Value::False => {}
            }
        }
        match n_undef {
            0 => {
                // Conflict clause: the cell needs one edge on this side.
                self.set_conflict(edges[..n].iter().map(|&e| Lit::new(e, true)));
                false
            }
            1 => {
                let reason =
                    if outgoing { Reason::LastOut(cell as u32) } else { Reason::LastIn(cell as u32) };
                let ok = self.enqueue(Lit::new(last, true), reason);
                debug_assert!(ok, "last slot was still unassigned in this scan");
                ok
            }
            _ => true,
        }
    }

    fn undo_true_edge(&mut self, var: Var) {
        let edge = self.model.edge(EdgeId(var));
        let (u, v) = (edge.from_cell as usize, edge.to_cell as usize);
        self.out_true[u] -= 1;
        self.in_true[v] -= 1;
        if self.chain_undo.last().map(|r| r.edge) == Some(var) {
            let rec = self.chain_undo.pop().unwrap();
            self.succ_edge[u] = NONE;
            self.pred_edge[v] = NONE;
            self.chain_end[rec.start as usize] = u as u32;
            self.chain_start[rec.end as usize] = v as u32;
            self.chain_len[rec.start as usize] = rec.old_len;
        }
    }

    fn undo_last(&mut self) {
        let lit = self.trail.pop().unwrap();
        let var = lit.var();
        // Entries at or past qhead were never applied.
        let applied = self.trail.len() < self.qhead;
        if applied && var < self.n_edge_vars && lit.is_positive() {
            self.undo_true_edge(var);
        }
        self.assign[var as usize] = Value::Undef;
        self.trail_pos[var as usize] = NONE;
        self.num_assigned -= 1;
    }

    fn backtrack_level(&mut self) {
        let lim = self.trail_lim.pop().unwrap();
        while self.trail.len() > lim {
            self.undo_last();
        }
        self.qhead = self.qhead.min(self.trail.len());
        self.decisions.pop();
    }

    pub(super) fn backtrack_to_root(&mut self) {
        while !self.trail_lim.is_empty() {
            self.backtrack_level();
        }
    }

    fn decide(&mut self, lit: Lit) {
        self.trail_lim.push(self.trail.len());
        self.decisions.push(Decision { lit, flipped: false });
        self.ctx.stats.decisions += 1;
        let ok = self.enqueue(lit, Reason::Free);
        debug_assert!(ok, "branched on an assigned literal");
    }

    /// Chronological backtracking: unwind to the deepest decision whose
    /// flip is untried and take it. False when the tree is exhausted.
    fn resolve_conflict(&mut self) -> bool {
        self.ctx.stats.conflicts += 1;
        self.ctx.deadline_suspended = false;
        loop {
            let Some(d) = self.decisions.last() else { return false };
            if d.flipped {
                self.backtrack_level();
                continue;
            }
            let flip = d.lit.negated();
            let lim = *self.trail_lim.last().unwrap();
            while self.trail.len() > lim {
                self.undo_last();
            }
            self.qhead = self.qhead.min(self.trail.len());
            let d = self.decisions.last_mut().unwrap();
            d.lit = flip;
            d.flipped = true;
            let ok = self.enqueue(flip, Reason::Free);
            debug_assert!(ok, "flip of a fresh decision cannot be assigned");
            return true;
        }
    }

    fn backtrack_to(&mut self, level: usize) {
        while self.trail_lim.len() > level {
            self.backtrack_level();
        }
    }

    /// Fills `out` with the antecedents of `var`'s forcing step, minus the
    /// forced literal itself; all of them are false. True when the step
    /// went through a call-scoped clause, which scopes anything derived.
    fn reason_into(&self, var: Var, out: &mut Vec<Lit>) -> bool {
        match self.reason[var as usize] {
            Reason::Free => unreachable!("resolving through a decision"),
            Reason::Clause(cref) => {
                let c = self.db.get_ref(cref).expect("reason clause is live");
                out.extend(c.lits.iter().copied().filter(|l| l.var() != var));
                c.tag == ClauseTag::CallScoped
            }
            Reason::Shared(e) => {
                out.push(Lit::new(e, false));
                false
            }
            Reason::LastOut(cell) => {
                let (edges, n) = copy4(self.model.out_edges(cell as usize));
                out.extend(edges[..n].iter().filter(|&&e| e != var).map(|&e| Lit::new(e, true)));
                false
            }
            Reason::LastIn(cell) => {
                let (edges, n) = copy4(self.model.in_edges(cell as usize));
                out.extend(edges[..n].iter().filter(|&&e| e != var).map(|&e| Lit::new(e, true)));
                false
            }
        }
    }

    /// Conflict-driven recovery: derives the first-UIP clause from `confl`,
    /// records it, jumps back to the deepest level it still mentions, and
    /// asserts its consequence there. Root literals (facts, guards,
    /// assumptions, activations) are kept in the clause rather than
    /// resolved away, so every derivation from permanently valid clauses
    /// stays valid across calls no matter how this call was set up.
    /// False when the conflict stands on the root state alone.
    fn cdcl_resolve(&mut self) -> bool {
        self.ctx.stats.conflicts += 1;
        self.ctx.deadline_suspended = false;
        if self.confl.is_empty() {
            return false;
        }
        // A clause can go false below the current level (it may have been
        // recorded late); analysis belongs at its deepest literal.
        let top = self
            .confl
            .iter()
            .map(|l| self.var_level[l.var() as usize])
            .max()
            .unwrap() as usize;
        if top == 0 {
            return false;
        }
        self.backtrack_to(top);
        self.seen_stamp = self.seen_stamp.wrapping_add(1);
        if self.seen_stamp == 0 {
            self.var_seen.fill(0);
            self.seen_stamp = 1;
        }
        let stamp = self.seen_stamp;
        let cur = self.trail_lim.len() as u32;
        let mut tainted = self.confl_taint;
        let mut learnt: Vec<Lit> = vec![Lit::new(0, false)];
        let mut queue = std::mem::take(&mut self.confl);
        let mut pending = 0usize;
        let mut i = self.trail.len();
        let uip = loop {
            for &q in &queue {
                let v = q.var() as usize;
                if self.var_seen[v] == stamp {
                    continue;
                }
                debug_assert_eq!(self.value(q), Value::False);
                self.var_seen[v] = stamp;
                if self.var_level[v] == cur {
                    pending += 1;
                } else {
                    learnt.push(q);
                }
            }
            debug_assert!(pending > 0);
            loop {
                i -= 1;
                if self.var_seen[self.trail[i].var() as usize] == stamp {
                    break;
                }
            }
            let p = self.trail[i];
            pending -= 1;
            if pending == 0 {
                break p;
            }
            queue.clear();
            tainted |= self.reason_into(p.var(), &mut queue);
        };
        queue.clear();
        self.confl = queue;
        learnt[0] = uip.negated();
        // Jump to the deepest level among the kept literals; the clause
        // turns unit there and asserts the flipped UIP.
        let mut jump = 0u32;
        let mut w1 = 0usize;
        for (k, &q) in learnt.iter().enumerate().skip(1) {
            let lvl = self.var_level[q.var() as usize];
            if lvl > jump {
                jump = lvl;
                w1 = k;
            }
        }
        debug_assert!((jump as usize) < top);
        self.backtrack_to(jump as usize);
        let assert_lit = learnt[0];
        if learnt.len() == 1 {
            if !tainted && self.perm[assert_lit.var() as usize] == Value::Undef {
                self.perm[assert_lit.var() as usize] =
                    if assert_lit.is_positive() { Value::True } else { Value::False };
                self.learned_units.push(assert_lit);
            }
            let ok = self.enqueue(assert_lit, Reason::Free);
            debug_assert!(ok, "unit consequence was already refuted");
        } else {
            learnt.swap(1, w1);
            let tag =
                if tainted { ClauseTag::CallScoped } else { ClauseTag::LearnedGlobal };
            let cref = self.db.add(learnt, tag, NONE);
            if tainted {
                self.call_scoped.push(cref);
            }
            self.ctx.stats.learned += 1;
            let ok = self.enqueue(assert_lit, Reason::Clause(cref));
            debug_assert!(ok, "asserting literal was already refuted");
        }
        true
    }

    /// Two-watched-literal visit of every clause watching `¬p`.
    fn visit_watchers(&mut self, p: Lit) -> bool {
        let fw = p.negated();
        let mut ws = self.db.take_watchers(p);
        let mut ok = true;
        let mut j = 0;
        while j < ws.len() {
            let cref = ws[j];
            let action = {
                let assign = &self.assign;
                match self.db.get_mut(cref) {
                    None => WatchAction::Prune,
                    Some(c) => {
                        if c.lits[0] == fw {
                            c.lits.swap(0, 1);
                        }
                        debug_assert_eq!(c.lits[1], fw);
                        let w0 = c.lits[0];
                        if lit_value(assign, w0) == Value::True {
                            WatchAction::Keep
                        } else {
                            let repl = (2..c.lits.len())
                                .find(|&k| lit_value(assign, c.lits[k]) != Value::False);
                            match repl {
                                Some(k) => {
                                    c.lits.swap(1, k);
                                    WatchAction::Moved(c.lits[1])
                                }
                                None if lit_value(assign, w0) == Value::False => {
                                    WatchAction::Conflict
                                }
                                None => WatchAction::Unit(w0),
                            }
                        }
                    }
                }
            };
            match action {
                WatchAction::Prune => {
                    ws.swap_remove(j);
                }
                WatchAction::Keep => {
                    j += 1;
                }
                WatchAction::Moved(nl) => {
                    self.db.watch(nl, cref);
                    ws.swap_remove(j);
                }
                WatchAction::Unit(w0) => {
                    self.touch(cref);
                    let pushed = self.enqueue(w0, Reason::Clause(cref));
                    debug_assert!(pushed);
                    j += 1;
                }
                WatchAction::Conflict => {
                    self.touch(cref);
                    self.confl.clear();
                    let c = self.db.get_ref(cref).expect("conflicting clause is live");
                    self.confl.extend_from_slice(&c.lits);
                    self.confl_taint = c.tag == ClauseTag::CallScoped;
                    ok = false;
                    break;
                }
            }
        }
        self.db.put_watchers_back(p, ws);
        ok
    }

    /// Recency signal for learned-clause eviction.
    fn touch(&mut self, cref: ClauseRef) {
        let tick = self.db.bump();
        if let Some(c) = self.db.get_mut(cref) {
            if c.tag == ClauseTag::LearnedGlobal {
                c.last_used = tick;
                if c.birth < self.ctx.call_seq {
                    self.ctx.stats.reused_hits += 1;
                }
            }
        }
    }

    /// Records why the just-closed short loop is hopeless: the cycle must
    /// leave the loop's cell set, and it must enter it. Both cuts follow
    /// from the cycle structure alone, so they stay valid across calls,
    /// and they kill every other confinement of the same region, not just
    /// the loop that was hit.
    fn learn_subtour(&mut self, start: usize) {
        self.visit_stamp += 1;
        let stamp = self.visit_stamp;
        let mut c = start;
        loop {
            self.visit_mark[c] = stamp;
            c = self.model.edge(EdgeId(self.succ_edge[c])).to_cell as usize;
            if c == start {
                break;
            }
        }
        let mut leave = Vec::new();
        let mut enter = Vec::new();
        c = start;
        loop {
            let (outs, n_out) = copy4(self.model.out_edges(c));
            for &e in &outs[..n_out] {
                if self.visit_mark[self.model.edge(EdgeId(e)).to_cell as usize] != stamp {
                    leave.push(Lit::new(e, true));
                }
            }
            let (ins, n_in) = copy4(self.model.in_edges(c));
            for &e in &ins[..n_in] {
                if self.visit_mark[self.model.edge(EdgeId(e)).from_cell as usize] != stamp {
                    enter.push(Lit::new(e, true));
                }
            }
            c = self.model.edge(EdgeId(self.succ_edge[c])).to_cell as usize;
            if c == start {
                break;
            }
        }
        for mut lits in [leave, enter] {
            // Watch the two most recently assigned literals: right after
            // backtracking they are the first to come free again.
            lits.sort_unstable_by_key(|l| std::cmp::Reverse(self.trail_pos[l.var() as usize]));
            debug_assert!(lits.len() >= 2);
            self.db.add(lits, ClauseTag::LearnedGlobal, NONE);
            self.ctx.stats.learned += 1;
        }
    }

    pub(super) fn dfs(&mut self) -> DfsOutcome {
        loop {
            match self.propagate() {
                Prop::Deadline => return DfsOutcome::Deadline,
                Prop::Conflict => {
                    if !self.cdcl_resolve() {
                        return DfsOutcome::Exhausted;
                    }
                    continue;
                }
                Prop::Fixpoint => {}
            }
            if self.num_assigned == self.assign.len() {
                // Complete cycle; the bound is a hard constraint on it.
                if self.ctx.optimizing
                    && self.ctx.bound != usize::MAX
                    && self.current_objective() >= self.ctx.bound
                {
                    if !self.resolve_conflict() {
                        return DfsOutcome::Exhausted;
                    }
                    continue;
                }
                return DfsOutcome::Model;
            }
            match self.analyze_and_branch() {
                Some(lit) => self.decide(lit),
                None => {
                    // Prunes with a conflict clause earn a learned clause
                    // and a backjump; bare ones backtrack chronologically.
                    let recovered = if self.prune_clause {
                        self.prune_clause = false;
                        self.cdcl_resolve()
                    } else {
                        self.resolve_conflict()
                    };
                    if !recovered {
                        return DfsOutcome::Exhausted;
                    }
                }
            }
        }
    }

    /// Prune checks plus branch selection at a fixpoint; `None` means the
    /// state cannot beat the incumbent and the search should back off.
    fn analyze_and_branch(&mut self) -> Option<Lit> {
        // Warm dive: follow the stored cycle until the first model.
        if self.ctx.stats.models == 0 {
            if let Some(plan) = self.model.warm_plan() {
                for &eid in &plan.edge_order {
                    if self.assign[eid.0 as usize] == Value::Undef {
                        return Some(Lit::new(eid.0, true));
                    }
                }
            }
        }
        if self.ctx.optimizing {
            let hc = self.head_chain();
            if self.ctx.bound != usize::MAX {
                let lb = match hc.apple_pos {
                    Some(j) => j as usize,
                    None => {
                        hc.forward_len as usize + self.dist_apple[hc.z as usize] as usize
                    }
                };
                if lb >= self.ctx.bound {
                    return None;
                }
            }
            if !self.completion_feasible(hc.z as usize, hc.t as usize) {
                return None;
            }
            // Extend the head chain. Until the apple joins it, steps that
            // close the gap to the apple come first; ties go to the
            // successor with the fewest open exits (Warnsdorff's rule), so
            // the chain sweeps tight regions before they get stranded.
            let (outs, n) = copy4(self.model.out_edges(hc.z as usize));
            let mut best: Option<(u64, u32)> = None;
            for &e in &outs[..n] {
                if self.assign[e as usize] != Value::Undef {
                    continue;
                }
                let to = self.model.edge(EdgeId(e)).to_cell as usize;
                let (t_outs, t_n) = copy4(self.model.out_edges(to));
                let exits = t_outs[..t_n]
                    .iter()
                    .filter(|&&x| lit_value(&self.assign, Lit::new(x, true)) != Value::False)
                    .count() as u64;
                let dist =
                    if hc.apple_pos.is_some() { 0 } else { self.dist_apple[to] as u64 };
                let key = dist << 36 | exits << 32 | e as u64;
                if best.is_none_or(|(bk, _)| key < bk) {
                    best = Some((key, e));
                }
            }
            if let Some((_, e)) = best {
                return Some(Lit::new(e, true));
            }
        }
        // Satisfaction mode, or nothing better: lowest unassigned edge.
        (0..self.n_edge_vars)
            .find(|&v| self.assign[v as usize] == Value::Undef)
            .map(|v| Lit::new(v, true))
    }

    /// Walks the forced chain through the head cell both ways.
    fn head_chain(&self) -> HeadChain {
        let head = self.ctx.head_cell as usize;
        let apple = self.ctx.apple_cell as usize;
        let mut t = head;
        while self.pred_edge[t] != NONE {
            t = self.model.edge(EdgeId(self.pred_edge[t])).from_cell as usize;
        }
        let mut z = head;
        let mut forward_len = 1u32;
        let mut apple_pos = (head == apple).then_some(1u32);
        while self.succ_edge[z] != NONE {
            z = self.model.edge(EdgeId(self.succ_edge[z])).to_cell as usize;
            forward_len += 1;
            if apple_pos.is_none() && z == apple {
                apple_pos = Some(forward_len);
            }
        }
        HeadChain { z: z as u32, t: t as u32, forward_len, apple_pos }
    }

    /// Checkerboard accounting over free regions. A region is a maximal
    /// set of chainless cells connected by open edges; the cycle crosses
    /// it as disjoint alternating path segments, one per entry, so the
    /// region's color imbalance can never exceed the number of distinct
    /// chain cells with an open edge in (or out, whichever is smaller).
    /// A violated region means no completion exists from here.
    fn free_regions_feasible(&mut self, z: usize, t: usize) -> bool {
        let nm = self.visit_mark.len();
        self.visit_stamp += 1;
        let stamp = self.visit_stamp;
        for c0 in 0..nm {
            if self.visit_mark[c0] == stamp
                || c0 == z
                || c0 == t
                || self.pred_edge[c0] != NONE
                || self.succ_edge[c0] != NONE
            {
                continue;
            }
            let mut balance = 0i32;
            let mut ports_in = 0u32;
            let mut ports_out = 0u32;
            self.bfs.clear();
            self.bfs.push(c0 as u32);
            self.visit_mark[c0] = stamp;
            let mut qi = 0;
            while qi < self.bfs.len() {
                let v = self.bfs[qi] as usize;
                qi += 1;
                balance += if self.cell_color[v] == 0 { 1 } else { -1 };
                let (ins, n_in) = copy4(self.model.in_edges(v));
                for &e in &ins[..n_in] {
                    if lit_value(&self.assign, Lit::new(e, true)) == Value::False {
                        continue;
                    }
                    let u = self.model.edge(EdgeId(e)).from_cell as usize;
                    if u == z || u == t || self.pred_edge[u] != NONE || self.succ_edge[u] != NONE
                    {
                        if self.port_src_mark[u] != stamp {
                            self.port_src_mark[u] = stamp;
                            ports_in += 1;
                        }
                    } else if self.visit_mark[u] != stamp {
                        self.visit_mark[u] = stamp;
                        self.bfs.push(u as u32);
                    }
                }
                let (outs, n_out) = copy4(self.model.out_edges(v));
                for &e in &outs[..n_out] {
                    if lit_value(&self.assign, Lit::new(e, true)) == Value::False {
                        continue;
                    }
                    let u = self.model.edge(EdgeId(e)).to_cell as usize;
                    if u == z || u == t || self.pred_edge[u] != NONE || self.succ_edge[u] != NONE
                    {
                        if self.port_dst_mark[u] != stamp {
                            self.port_dst_mark[u] = stamp;
                            ports_out += 1;
                        }
                    } else if self.visit_mark[u] != stamp {
                        self.visit_mark[u] = stamp;
                        self.bfs.push(u as u32);
                    }
                }
            }
            let segments = ports_in.min(ports_out);
            if segments == 0 || balance.unsigned_abs() > segments {
                // Conflict clause: some closed crossing on the tighter
                // side must open, whatever the rest of the board does.
                self.confl.clear();
                self.confl_taint = false;
                let want_in = ports_in <= ports_out;
                for qi in 0..self.bfs.len() {
                    let v = self.bfs[qi] as usize;
                    let (es, n) = if want_in {
                        copy4(self.model.in_edges(v))
                    } else {
                        copy4(self.model.out_edges(v))
                    };
                    for &e in &es[..n] {
                        if lit_value(&self.assign, Lit::new(e, true)) != Value::False {
                            continue;
                        }
                        let other = if want_in {
                            self.model.edge(EdgeId(e)).from_cell as usize
                        } else {
                            self.model.edge(EdgeId(e)).to_cell as usize
                        };
                        if self.visit_mark[other] != stamp {
                            self.confl.push(Lit::new(e, true));
                        }
                    }
                }
                self.prune_clause = true;
                return false;
            }
        }
        true
    }

    /// Relaxed coverage check: from the head chain's end, following edges
    /// not yet false (whole forced chains traversed start to end), every
    /// chainless cell and every other chain must be reachable, and so must
    /// the head chain's own start to close the cycle. BFS, so cells may be
    /// reused; failing even this relaxation means no completion exists.
    fn completion_feasible(&mut self, z: usize, t: usize) -> bool {
        if !self.free_regions_feasible(z, t) {
            return false;
        }
        let nm = self.visit_mark.len();
        self.visit_stamp += 1;
        let stamp = self.visit_stamp;
        let mut targets = 0usize;
        for c in 0..nm {
            if c != t && c != z && self.pred_edge[c] == NONE {
                targets += 1;
            }
        }
        let mut reached_tail = false;
        let mut marked = 0usize;
        self.bfs.clear();
        self.bfs.push(z as u32);
        self.visit_mark[z] = stamp;
        let mut qi = 0;
        while qi < self.bfs.len() {
            let pos = self.bfs[qi] as usize;
            qi += 1;
            let (outs, n) = copy4(self.model.out_edges(pos));
            for &e in &outs[..n] {
                if lit_value(&self.assign, Lit::new(e, true)) == Value::False {
                    continue;
                }
                let w = self.model.edge(EdgeId(e)).to_cell as usize;
                if w == t {
                    reached_tail = true;
                    continue;
                }
                // Cells with a predecessor can only be crossed along their
                // chain, which is entered at its start.
                if self.pred_edge[w] != NONE || self.visit_mark[w] == stamp {
                    continue;
                }
                self.visit_mark[w] = stamp;
                marked += 1;
                if self.succ_edge[w] == NONE {
                    self.bfs.push(w as u32);
                } else {
                    self.bfs.push(self.chain_end[w]);
                }
            }
        }
        reached_tail && marked == targets
    }

    pub(super) fn extract_cycle(&self) -> CyclePath {
        let grid = self.model.grid();
        let nm = grid.cell_count();
        let anchor = if self.ctx.head_cell != NONE { self.ctx.head_cell as usize } else { 0 };
        let mut cells = Vec::with_capacity(nm);
        let mut c = anchor;
        loop {
            cells.push(grid.coord(c));
            c = self.model.edge(EdgeId(self.succ_edge[c])).to_cell as usize;
            if c == anchor {
                break;
            }
        }
        debug_assert_eq!(cells.len(), nm);
        debug_assert!(crate::grid::validate_hc(grid, &cells));
        CyclePath::from_validated(cells)
    }

    pub(super) fn current_objective(&self) -> usize {
        let apple = self.ctx.apple_cell as usize;
        let mut pos = 1usize;
        let mut c = self.ctx.head_cell as usize;
        while c != apple {
            c = self.model.edge(EdgeId(self.succ_edge[c])).to_cell as usize;
            pos += 1;
        }
        pos
    }

    pub(super) fn matches_warm_start(&self) -> bool {
        match self.model.warm_plan() {
            None => false,
            Some(plan) => {
                plan.succ_edge.iter().enumerate().all(|(c, e)| self.succ_edge[c] == e.0)
            }
        }
    }
}
