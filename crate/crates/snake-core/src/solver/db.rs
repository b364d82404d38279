//! Literals and the tagged clause store.
//!
//! Variables are dense u32 ids: first every directed edge of the model,
//! then guard variables in creation order. Clauses live in a slotted arena
//! with generation counters so watch lists can be pruned lazily after
//! deletions (guard cleanup, scope drops, eviction).

pub(crate) type Var = u32;

/// Literal: variable plus polarity, packed. Even = positive.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub(crate) struct Lit(pub(crate) u32);

impl Lit {
    pub(crate) fn new(var: Var, positive: bool) -> Lit {
        Lit(var << 1 | u32::from(!positive))
    }

    pub(crate) fn var(self) -> Var {
        self.0 >> 1
    }

    pub(crate) fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub(crate) fn negated(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Value {
    Undef,
    True,
    False,
}

impl Value {
    pub(crate) fn of(self, lit: Lit) -> Value {
        match (self, lit.is_positive()) {
            (Value::Undef, _) => Value::Undef,
            (v, true) => v,
            (Value::True, false) => Value::False,
            (Value::False, false) => Value::True,
        }
    }
}

/// Clause lifetime class.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClauseTag {
    /// Facts and structure, live for the solver's lifetime.
    Static,
    /// Tied to a guard literal; deleted by cleanup once the guard is released.
    Guarded,
    /// Learned from a forced subtour; implied by the structural constraints
    /// alone, so it stays valid across calls.
    LearnedGlobal,
    /// Injected during one solve call, dropped when the call returns.
    CallScoped,
}

/// Live clause counts by tag.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ClauseCounts {
    pub static_clauses: usize,
    pub guarded: usize,
    pub learned_global: usize,
    pub call_scoped: usize,
}

impl ClauseCounts {
    pub fn total(&self) -> usize {
        self.static_clauses + self.guarded + self.learned_global + self.call_scoped
    }
}

pub(crate) struct Clause {
    pub(crate) lits: Vec<Lit>,
    pub(crate) tag: ClauseTag,
    /// Guard variable for Guarded clauses, used by cleanup.
    pub(crate) guard_var: Var,
    pub(crate) last_used: u64,
    /// Solve call the clause was added in.
    pub(crate) birth: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) struct ClauseRef {
    slot: u32,
    gen: u32,
}

pub(crate) struct ClauseDb {
    slots: Vec<Option<Clause>>,
    gens: Vec<u32>,
    free: Vec<u32>,
    /// watches[p] lists clauses that watch the literal ¬p, i.e. must be
    /// revisited when p becomes true.
    watches: Vec<Vec<ClauseRef>>,
    counts: ClauseCounts,
    tick: u64,
    call_seq: u64,
}

impl ClauseDb {
    pub(crate) fn new(n_lits: usize) -> ClauseDb {
        ClauseDb {
            slots: Vec::new(),
            gens: Vec::new(),
            free: Vec::new(),
            watches: vec![Vec::new(); n_lits],
            counts: ClauseCounts::default(),
            tick: 0,
            call_seq: 0,
        }
    }

    /// Starts the next solve call and returns its sequence number.
    pub(crate) fn begin_call(&mut self) -> u64 {
        self.call_seq += 1;
        self.call_seq
    }

    pub(crate) fn grow_vars(&mut self, n_lits: usize) {
        if n_lits > self.watches.len() {
            self.watches.resize(n_lits, Vec::new());
        }
    }

    pub(crate) fn counts(&self) -> ClauseCounts {
        self.counts
    }

    fn count_mut(&mut self, tag: ClauseTag) -> &mut usize {
        match tag {
            ClauseTag::Static => &mut self.counts.static_clauses,
            ClauseTag::Guarded => &mut self.counts.guarded,
            ClauseTag::LearnedGlobal => &mut self.counts.learned_global,
            ClauseTag::CallScoped => &mut self.counts.call_scoped,
        }
    }

    pub(crate) fn bump(&mut self) -> u64 {
        self.tick += 1;
        self.tick
    }

    /// Adds a clause of at least 2 literals; the first two are watched.
    /// Callers order the literals so both watches are sound at add time.
    pub(crate) fn add(&mut self, lits: Vec<Lit>, tag: ClauseTag, guard_var: Var) -> ClauseRef {
        debug_assert!(lits.len() >= 2);
        let tick = self.bump();
        let clause = Clause { lits, tag, guard_var, last_used: tick, birth: self.call_seq };
        let slot = match self.free.pop() {
            Some(s) => {
                self.gens[s as usize] += 1;
                self.slots[s as usize] = Some(clause);
                s
            }
            None => {
                self.slots.push(Some(clause));
                self.gens.push(0);
                (self.slots.len() - 1) as u32
            }
        };
        let cref = ClauseRef { slot, gen: self.gens[slot as usize] };
        let c = self.slots[slot as usize].as_ref().unwrap();
        let (w0, w1) = (c.lits[0], c.lits[1]);
        *self.count_mut(tag) += 1;
        self.watches[w0.negated().index()].push(cref);
        self.watches[w1.negated().index()].push(cref);
        cref
    }

    pub(crate) fn get_ref(&self, cref: ClauseRef) -> Option<&Clause> {
        if self.gens[cref.slot as usize] != cref.gen {
            return None;
        }
        self.slots[cref.slot as usize].as_ref()
    }

    pub(crate) fn get_mut(&mut self, cref: ClauseRef) -> Option<&mut Clause> {
        if self.gens[cref.slot as usize] != cref.gen {
            return None;
        }
        self.slots[cref.slot as usize].as_mut()
    }

    /// Drops the clause; stale watch entries disappear lazily.
    pub(crate) fn remove(&mut self, cref: ClauseRef) {
        if self.gens[cref.slot as usize] != cref.gen {
            return;
        }
        if let Some(c) = self.slots[cref.slot as usize].take() {
            *self.count_mut(c.tag) -= 1;
            self.free.push(cref.slot);
        }
    }

    /// Registers `cref` as a watcher of `watched` (the clause must hold
    /// `watched` among its literals).
    pub(crate) fn watch(&mut self, watched: Lit, cref: ClauseRef) {
        self.watches[watched.negated().index()].push(cref);
    }

    /// Takes the watch list for "p just became true" wholesale; propagation
    /// pushes surviving entries back.
    pub(crate) fn take_watchers(&mut self, p: Lit) -> Vec<ClauseRef> {
        std::mem::take(&mut self.watches[p.index()])
    }

    /// Entries pushed while the list was taken out (new clauses, re-watch
    /// of the same literal) are appended behind the surviving ones.
    pub(crate) fn put_watchers_back(&mut self, p: Lit, mut ws: Vec<ClauseRef>) {
        ws.extend(self.watches[p.index()].drain(..));
        self.watches[p.index()] = ws;
    }

    /// Deletes clauses satisfied by a permanent root value and strips
    /// permanently false literals out of the rest; shrunk clauses are
    /// re-added so both watches land on live literals. Returns the lits of
    /// clauses that shrank to units, or None when one lost every literal
    /// (the permanent facts are unsatisfiable with the stored clauses).
    pub(crate) fn simplify_permanent(&mut self, perm: &[Value]) -> Option<Vec<Lit>> {
        let mut units = Vec::new();
        let mut rebuilt: Vec<Clause> = Vec::new();
        for slot in 0..self.slots.len() {
            let Some(c) = &self.slots[slot] else { continue };
            let mut sat = false;
            let mut n_false = 0usize;
            for &l in &c.lits {
                match perm[l.var() as usize].of(l) {
                    Value::True => {
                        sat = true;
                        break;
                    }
                    Value::False => n_false += 1,
                    Value::Undef => {}
                }
            }
            if !sat && n_false == 0 {
                continue;
            }
            let mut c = self.slots[slot].take().unwrap();
            *self.count_mut(c.tag) -= 1;
            self.free.push(slot as u32);
            self.gens[slot] += 1;
            if sat {
                continue;
            }
            c.lits.retain(|&l| perm[l.var() as usize].of(l) != Value::False);
            match c.lits.len() {
                0 => return None,
                1 => units.push(c.lits[0]),
                _ => rebuilt.push(c),
            }
        }
        for c in rebuilt {
            let cref = self.add(c.lits, c.tag, c.guard_var);
            if let Some(nc) = self.get_mut(cref) {
                nc.last_used = c.last_used;
                nc.birth = c.birth;
            }
        }
        Some(units)
    }

    /// Deletes every clause matching `pred`, returning how many went.
    pub(crate) fn retain(&mut self, mut pred: impl FnMut(&Clause) -> bool) -> usize {
        let mut removed = 0;
        for slot in 0..self.slots.len() {
            let doomed = match &self.slots[slot] {
                Some(c) => !pred(c),
                None => false,
            };
            if doomed {
                let c = self.slots[slot].take().unwrap();
                *self.count_mut(c.tag) -= 1;
                self.free.push(slot as u32);
                self.gens[slot] += 1;
                removed += 1;
            }
        }
        removed
    }

    /// Evicts least-recently-used learned clauses down to `cap`.
    pub(crate) fn evict_learned_to(&mut self, cap: usize) -> usize {
        if self.counts.learned_global <= cap {
            return 0;
        }
        let mut learned: Vec<(u64, u32)> = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Some(c) if c.tag == ClauseTag::LearnedGlobal => Some((c.last_used, i as u32)),
                _ => None,
            })
            .collect();
        learned.sort_unstable();
        let doomed = self.counts.learned_global - cap;
        for &(_, slot) in learned.iter().take(doomed) {
            self.slots[slot as usize] = None;
            self.free.push(slot);
            self.gens[slot as usize] += 1;
        }
        self.counts.learned_global = cap;
        doomed
    }
}
