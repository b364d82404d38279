//! The constraint model the solver searches over.
//!
//! One boolean variable per *directed* grid edge: `next(u, v)` true means
//! the cycle leaves `u` into `v`. The structural constraints (every cell has
//! exactly one successor and one predecessor, and the chosen edges form a
//! single cycle) live in the solver's propagators; this module owns the
//! variable layout and everything declarative that varies between solve
//! calls: head/apple externals, per-edge activation flags, and the stored
//! cycle used to warm-start the search.
//!
//! Edges are numbered by (x, y, direction) of their source cell, which is
//! also the solver's deterministic tie-breaking order.

use std::collections::BTreeSet;
use std::fmt;

use crate::grid::{Coord, CyclePath, Dir, GridGraph, Snake, DIRS};

/// Index into the model's edge table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct EdgeId(pub(crate) u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A directed edge between adjacent cells, the atom `next(from, to)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct EdgeLit {
    pub from: Coord,
    pub to: Coord,
}

impl EdgeLit {
    pub fn new(from: Coord, to: Coord) -> EdgeLit {
        EdgeLit { from, to }
    }
}

impl fmt::Display for EdgeLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "next({},{})", self.from, self.to)
    }
}

/// Facts that anchor the objective; set per call, idempotently.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum External {
    Head(Coord),
    Apple(Coord),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// External refers to a cell outside the grid.
    UnknownAtom(Coord),
    /// Not a directed edge of this grid.
    UnknownEdge { from: Coord, to: Coord },
    /// Cycle doesn't fit the model's grid.
    InvalidCycle(&'static str),
    /// Head or apple missing from the cycle.
    NotOnCycle(Coord),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::UnknownAtom(c) => write!(f, "no such cell: {c}"),
            ModelError::UnknownEdge { from, to } => write!(f, "no directed edge {from} -> {to}"),
            ModelError::InvalidCycle(why) => write!(f, "invalid cycle: {why}"),
            ModelError::NotOnCycle(c) => write!(f, "{c} is not on the cycle"),
        }
    }
}

impl std::error::Error for ModelError {}

pub(crate) struct Edge {
    pub(crate) lit: EdgeLit,
    pub(crate) from_cell: u32,
    pub(crate) to_cell: u32,
}

/// Warm-start plan derived from a stored Hamiltonian cycle.
pub(crate) struct WarmPlan {
    pub(crate) cycle: CyclePath,
    /// Edge ids in traversal order; branching follows this sequence.
    pub(crate) edge_order: Vec<EdgeId>,
    /// Per cell, the cycle's outgoing edge.
    pub(crate) succ_edge: Vec<EdgeId>,
}

/// Variable layout plus the per-call declarative state. Owned by exactly
/// one [`crate::solver::Solver`].
pub struct Model {
    grid: GridGraph,
    edges: Vec<Edge>,
    /// cell * 4 + dir -> edge id (u32::MAX where the step leaves the grid).
    edge_at: Vec<u32>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    heads: BTreeSet<Coord>,
    apples: BTreeSet<Coord>,
    activation: Vec<bool>,
    warm: Option<WarmPlan>,
}

impl Model {
    /// Lays out one variable per directed edge: 8 on a 2x2 grid, 120 on 6x6.
    pub fn new(grid: GridGraph) -> Model {
        let nm = grid.cell_count();
        let mut edges = Vec::with_capacity(grid.directed_edge_count());
        let mut edge_at = vec![u32::MAX; nm * 4];
        let mut out_edges = vec![Vec::new(); nm];
        let mut in_edges = vec![Vec::new(); nm];
        for x in 1..=grid.n() {
            for y in 1..=grid.m() {
                let from = Coord::new(x, y);
                for &dir in &DIRS {
                    let Some(to) = grid.step(from, dir) else { continue };
                    let id = EdgeId(edges.len() as u32);
                    let from_cell = grid.index(from) as u32;
                    let to_cell = grid.index(to) as u32;
                    edges.push(Edge { lit: EdgeLit { from, to }, from_cell, to_cell });
                    edge_at[from_cell as usize * 4 + dir as usize] = id.0;
                    out_edges[from_cell as usize].push(id);
                    in_edges[to_cell as usize].push(id);
                }
            }
        }
        debug_assert_eq!(edges.len(), grid.directed_edge_count());
        let activation = vec![false; edges.len()];
        Model {
            grid,
            edges,
            edge_at,
            out_edges,
            in_edges,
            heads: BTreeSet::new(),
            apples: BTreeSet::new(),
            activation,
            warm: None,
        }
    }

    pub fn grid(&self) -> &GridGraph {
        &self.grid
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_lit(&self, id: EdgeId) -> EdgeLit {
        self.edges[id.index()].lit
    }

    pub fn edge_id(&self, lit: EdgeLit) -> Result<EdgeId, ModelError> {
        if !self.grid.contains(lit.from) || !self.grid.contains(lit.to) {
            return Err(ModelError::UnknownEdge { from: lit.from, to: lit.to });
        }
        let dir = Dir::between(lit.from, lit.to)
            .ok_or(ModelError::UnknownEdge { from: lit.from, to: lit.to })?;
        let raw = self.edge_at[self.grid.index(lit.from) * 4 + dir as usize];
        debug_assert_ne!(raw, u32::MAX);
        Ok(EdgeId(raw))
    }

    pub(crate) fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub(crate) fn out_edges(&self, cell: usize) -> &[EdgeId] {
        &self.out_edges[cell]
    }

    pub(crate) fn in_edges(&self, cell: usize) -> &[EdgeId] {
        &self.in_edges[cell]
    }

    /// Sets or clears a head/apple external. Idempotent; a later solve call
    /// checks that at most one of each is active.
    pub fn set_external(&mut self, atom: External, value: bool) -> Result<(), ModelError> {
        let (set, c) = match atom {
            External::Head(c) => (&mut self.heads, c),
            External::Apple(c) => (&mut self.apples, c),
        };
        if !self.grid.contains(c) {
            return Err(ModelError::UnknownAtom(c));
        }
        if value {
            set.insert(c);
        } else {
            set.remove(&c);
        }
        Ok(())
    }

    pub fn heads(&self) -> impl Iterator<Item = Coord> + '_ {
        self.heads.iter().copied()
    }

    pub fn apples(&self) -> impl Iterator<Item = Coord> + '_ {
        self.apples.iter().copied()
    }

    /// While true, every model must use this edge. All activation literals
    /// exist from construction; flipping one never grows the model.
    pub fn set_activation(&mut self, lit: EdgeLit, value: bool) -> Result<(), ModelError> {
        let id = self.edge_id(lit)?;
        self.activation[id.index()] = value;
        Ok(())
    }

    pub fn activation_count(&self) -> usize {
        self.activation.len()
    }

    pub(crate) fn active_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.activation
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| EdgeId(i as u32))
    }

    /// Stores the cycle the next solve call dives to first.
    pub fn set_warm_start(&mut self, cycle: CyclePath) -> Result<(), ModelError> {
        if cycle.len() != self.grid.cell_count() {
            return Err(ModelError::InvalidCycle("wrong length for this grid"));
        }
        let cells = cycle.cells();
        let mut edge_order = Vec::with_capacity(cells.len());
        let mut succ_edge = vec![EdgeId(u32::MAX); self.grid.cell_count()];
        for i in 0..cells.len() {
            let from = cells[i];
            let to = cells[(i + 1) % cells.len()];
            let id = self
                .edge_id(EdgeLit { from, to })
                .map_err(|_| ModelError::InvalidCycle("consecutive cells not adjacent"))?;
            if succ_edge[self.grid.index(from)] != EdgeId(u32::MAX) {
                return Err(ModelError::InvalidCycle("repeated cell"));
            }
            edge_order.push(id);
            succ_edge[self.grid.index(from)] = id;
        }
        self.warm = Some(WarmPlan { cycle, edge_order, succ_edge });
        Ok(())
    }

    pub fn clear_warm_start(&mut self) {
        self.warm = None;
    }

    pub fn warm_start(&self) -> Option<&CyclePath> {
        self.warm.as_ref().map(|w| &w.cycle)
    }

    pub(crate) fn warm_plan(&self) -> Option<&WarmPlan> {
        self.warm.as_ref()
    }
}

/// The directed edges the snake's body occupies, tail to head;
/// empty for a single-cell snake.
pub fn snake_edge_lits(snake: &Snake) -> Vec<EdgeLit> {
    snake
        .cells()
        .windows(2)
        .map(|w| EdgeLit { from: w[0], to: w[1] })
        .collect()
}

/// 1-based position of the apple along the cycle counting from the head:
/// a head sitting on the apple scores 1, the next cell 2, and so on. One
/// less than this is exactly the number of steps the snake walks.
pub fn objective_of(cycle: &CyclePath, head: Coord, apple: Coord) -> Result<usize, ModelError> {
    let h = cycle.position_of(head).ok_or(ModelError::NotOnCycle(head))?;
    let a = cycle.position_of(apple).ok_or(ModelError::NotOnCycle(apple))?;
    let nm = cycle.len();
    Ok((a + nm - h) % nm + 1)
}
