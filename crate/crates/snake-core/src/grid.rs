//! Rectangular grid graphs and the path/cycle geometry the rest of the
//! crate is built on.
//!
//! Coordinates are 1-based: `x` runs 1..=n (columns), `y` runs 1..=m (rows).
//! A grid admits a Hamiltonian cycle only if `n * m` is even, so grid
//! construction rejects odd cell counts outright.

use std::fmt;

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// 1-based cell coordinate. Serializes as a two-element array `[x, y]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub x: u32,
    pub y: u32,
}

impl Coord {
    pub const fn new(x: u32, y: u32) -> Self {
        Coord { x, y }
    }

    pub fn manhattan(self, other: Coord) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn is_adjacent(self, other: Coord) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl Serialize for Coord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.x)?;
        t.serialize_element(&self.y)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Coord;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a [x, y] pair")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Coord, A::Error> {
                let x = seq
                    .next_element()?
                    .ok_or_else(|| serde::de::Error::invalid_length(0, &self))?;
                let y = seq
                    .next_element()?
                    .ok_or_else(|| serde::de::Error::invalid_length(1, &self))?;
                Ok(Coord { x, y })
            }
        }
        deserializer.deserialize_tuple(2, V)
    }
}

/// Axis directions in branching order. The numeric order (right, left, up,
/// down) is a tie-breaking convention relied on for deterministic search.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Dir {
    Right = 0,
    Left = 1,
    Up = 2,
    Down = 3,
}

pub const DIRS: [Dir; 4] = [Dir::Right, Dir::Left, Dir::Up, Dir::Down];

impl Dir {
    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir::Right => (1, 0),
            Dir::Left => (-1, 0),
            Dir::Up => (0, 1),
            Dir::Down => (0, -1),
        }
    }

    /// Direction of the unit step from `a` to `b`, if they are adjacent.
    pub fn between(a: Coord, b: Coord) -> Option<Dir> {
        let dx = b.x as i64 - a.x as i64;
        let dy = b.y as i64 - a.y as i64;
        match (dx, dy) {
            (1, 0) => Some(Dir::Right),
            (-1, 0) => Some(Dir::Left),
            (0, 1) => Some(Dir::Up),
            (0, -1) => Some(Dir::Down),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridError {
    /// Both sides must be at least 2.
    Dimension { n: u32, m: u32 },
    /// Odd cell count: no Hamiltonian cycle exists.
    OddCellCount { n: u32, m: u32 },
    /// Coordinate outside the grid.
    OutOfGrid { c: Coord, n: u32, m: u32 },
    /// Cell sequence is not a valid snake.
    Snake(&'static str),
    /// Cell sequence is not a Hamiltonian cycle.
    Cycle(&'static str),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::Dimension { n, m } => {
                write!(f, "grid {n}x{m} is too small, both sides must be at least 2")
            }
            GridError::OddCellCount { n, m } => {
                write!(f, "grid {n}x{m} has an odd number of cells, no Hamiltonian cycle exists")
            }
            GridError::OutOfGrid { c, n, m } => write!(f, "cell {c} lies outside the {n}x{m} grid"),
            GridError::Snake(why) => write!(f, "invalid snake: {why}"),
            GridError::Cycle(why) => write!(f, "invalid cycle: {why}"),
        }
    }
}

impl std::error::Error for GridError {}

/// An `n` x `m` grid graph: vertices are cells, edges join orthogonal
/// neighbors. Always has an even cell count (enforced at construction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridGraph {
    n: u32,
    m: u32,
}

impl GridGraph {
    /// Builds the grid, rejecting sides < 2 and odd cell counts.
    pub fn new(n: u32, m: u32) -> Result<GridGraph, GridError> {
        if n < 2 || m < 2 {
            return Err(GridError::Dimension { n, m });
        }
        if (n * m) % 2 != 0 {
            return Err(GridError::OddCellCount { n, m });
        }
        Ok(GridGraph { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn cell_count(&self) -> usize {
        (self.n * self.m) as usize
    }

    /// Number of undirected edges: 2nm - n - m.
    pub fn edge_count(&self) -> usize {
        (2 * self.n * self.m - self.n - self.m) as usize
    }

    pub fn directed_edge_count(&self) -> usize {
        2 * self.edge_count()
    }

    pub fn contains(&self, c: Coord) -> bool {
        (1..=self.n).contains(&c.x) && (1..=self.m).contains(&c.y)
    }

    /// Dense cell index, row-major in y.
    pub fn index(&self, c: Coord) -> usize {
        debug_assert!(self.contains(c));
        ((c.y - 1) * self.n + (c.x - 1)) as usize
    }

    pub fn coord(&self, index: usize) -> Coord {
        debug_assert!(index < self.cell_count());
        Coord::new(index as u32 % self.n + 1, index as u32 / self.n + 1)
    }

    pub fn step(&self, c: Coord, dir: Dir) -> Option<Coord> {
        let (dx, dy) = dir.delta();
        let x = c.x as i64 + dx;
        let y = c.y as i64 + dy;
        if x >= 1 && x <= self.n as i64 && y >= 1 && y <= self.m as i64 {
            Some(Coord::new(x as u32, y as u32))
        } else {
            None
        }
    }

    /// Orthogonal in-grid neighbors, in `Dir` order.
    pub fn neighbors(&self, c: Coord) -> Vec<Coord> {
        debug_assert!(self.contains(c));
        DIRS.iter().filter_map(|&d| self.step(c, d)).collect()
    }
}

/// The snake: tail-to-head list of distinct, consecutively adjacent cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Snake {
    cells: Vec<Coord>,
}

impl Snake {
    pub fn new(g: &GridGraph, cells: Vec<Coord>) -> Result<Snake, GridError> {
        if cells.is_empty() {
            return Err(GridError::Snake("empty"));
        }
        for &c in &cells {
            if !g.contains(c) {
                return Err(GridError::OutOfGrid { c, n: g.n, m: g.m });
            }
        }
        if !distinct(g, &cells) {
            return Err(GridError::Snake("repeated cell"));
        }
        if !consecutive_adjacent(&cells) {
            return Err(GridError::Snake("non-adjacent consecutive cells"));
        }
        Ok(Snake { cells })
    }

    /// The single-cell snake every game starts from.
    pub fn initial() -> Snake {
        Snake { cells: vec![Coord::new(1, 1)] }
    }

    pub fn cells(&self) -> &[Coord] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> Coord {
        *self.cells.last().unwrap()
    }

    pub fn tail(&self) -> Coord {
        self.cells[0]
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.cells.contains(&c)
    }
}

/// A Hamiltonian cycle stored as the cell sequence of one full traversal;
/// the closing edge from last back to first is implicit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CyclePath {
    cells: Vec<Coord>,
}

impl CyclePath {
    pub fn new(g: &GridGraph, cells: Vec<Coord>) -> Result<CyclePath, GridError> {
        if !validate_hc(g, &cells) {
            return Err(GridError::Cycle("not a Hamiltonian cycle of this grid"));
        }
        Ok(CyclePath { cells })
    }

    /// Caller guarantees `cells` is a Hamiltonian cycle of the intended grid.
    pub(crate) fn from_validated(cells: Vec<Coord>) -> CyclePath {
        CyclePath { cells }
    }

    pub fn cells(&self) -> &[Coord] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position_of(&self, c: Coord) -> Option<usize> {
        self.cells.iter().position(|&p| p == c)
    }

    /// Same cycle traversed from `start`.
    pub fn rotated_to(&self, start: Coord) -> Option<CyclePath> {
        let i = self.position_of(start)?;
        let mut cells = Vec::with_capacity(self.cells.len());
        cells.extend_from_slice(&self.cells[i..]);
        cells.extend_from_slice(&self.cells[..i]);
        Some(CyclePath { cells })
    }

    /// Successor of `c` along the cycle.
    pub fn successor(&self, c: Coord) -> Option<Coord> {
        let i = self.position_of(c)?;
        Some(self.cells[(i + 1) % self.cells.len()])
    }
}

fn distinct(g: &GridGraph, cells: &[Coord]) -> bool {
    let mut seen = vec![false; g.cell_count()];
    for &c in cells {
        let i = g.index(c);
        if seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

fn consecutive_adjacent(cells: &[Coord]) -> bool {
    cells.windows(2).all(|w| w[0].is_adjacent(w[1]))
}

/// Checks that `cells` lists every grid cell exactly once, consecutive cells
/// are adjacent, and the last cell is adjacent to the first.
pub fn validate_hc(g: &GridGraph, cells: &[Coord]) -> bool {
    if cells.len() != g.cell_count() {
        return false;
    }
    if cells.iter().any(|&c| !g.contains(c)) {
        return false;
    }
    distinct(g, cells) && consecutive_adjacent(cells) && cells[cells.len() - 1].is_adjacent(cells[0])
}

/// Validity of a path under the relaxed re-visit rule: the path must start
/// with the snake (tail to head), end at the apple (which appears exactly
/// once), and any two visits of the same cell must be at least `snake.len()`
/// steps apart, so the tail has left a cell before the head returns to it.
pub fn validate_general_snake(g: &GridGraph, snake: &Snake, p: &[Coord], apple: Coord) -> bool {
    if p.len() < snake.len() + 1 {
        return false;
    }
    if p[..snake.len()] != *snake.cells() {
        return false;
    }
    if p.iter().any(|&c| !g.contains(c)) {
        return false;
    }
    if !consecutive_adjacent(p) {
        return false;
    }
    if *p.last().unwrap() != apple || p.iter().filter(|&&c| c == apple).count() != 1 {
        return false;
    }
    let mut last_seen = vec![usize::MAX; g.cell_count()];
    for (k, &c) in p.iter().enumerate() {
        let i = g.index(c);
        if last_seen[i] != usize::MAX && k < p.len() - 1 && k - last_seen[i] < snake.len() {
            return false;
        }
        last_seen[i] = k;
    }
    true
}

/// Deterministic serpentine Hamiltonian cycle.
///
/// For even `n`: start at (1,1), climb column 1, serpentine columns 2..n
/// across rows 2..m (even columns descend, odd columns ascend), drop from
/// (n,2) to (n,1) and walk row 1 back to (2,1). For odd `n` (then `m` is
/// even) the transposed cycle is built and coordinates are swapped.
pub fn generic_hc(g: &GridGraph) -> CyclePath {
    let cells = if g.n % 2 == 0 {
        serpentine(g.n, g.m).collect()
    } else {
        serpentine(g.m, g.n).map(|c| Coord::new(c.y, c.x)).collect()
    };
    debug_assert!(validate_hc(g, {
        let cells: &Vec<Coord> = &cells;
        cells
    }));
    CyclePath::from_validated(cells)
}

// n even. Yields the cycle cell by cell.
fn serpentine(n: u32, m: u32) -> impl Iterator<Item = Coord> {
    debug_assert!(n % 2 == 0);
    let up_first_column = (1..=m).map(|y| Coord::new(1, y));
    let sweep = (2..=n).flat_map(move |x| {
        let rows: Vec<u32> = if x % 2 == 0 {
            (2..=m).rev().collect()
        } else {
            (2..=m).collect()
        };
        rows.into_iter().map(move |y| Coord::new(x, y))
    });
    let back_along_bottom = (2..=n).rev().map(|x| Coord::new(x, 1));
    up_first_column.chain(sweep).chain(back_along_bottom)
}

/// Composition of optional axis mirrors on an `n` x `m` grid. Applying the
/// same transform twice is the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MirrorTransform {
    n: u32,
    m: u32,
    flip_x: bool,
    flip_y: bool,
}

impl MirrorTransform {
    pub fn identity(g: &GridGraph) -> MirrorTransform {
        MirrorTransform { n: g.n, m: g.m, flip_x: false, flip_y: false }
    }

    pub fn new(g: &GridGraph, flip_x: bool, flip_y: bool) -> MirrorTransform {
        MirrorTransform { n: g.n, m: g.m, flip_x, flip_y }
    }

    pub fn is_identity(&self) -> bool {
        !self.flip_x && !self.flip_y
    }

    pub fn flips(&self) -> (bool, bool) {
        (self.flip_x, self.flip_y)
    }

    pub fn apply(&self, c: Coord) -> Coord {
        let x = if self.flip_x { self.n + 1 - c.x } else { c.x };
        let y = if self.flip_y { self.m + 1 - c.y } else { c.y };
        Coord::new(x, y)
    }

    pub fn apply_cells(&self, cells: &[Coord]) -> Vec<Coord> {
        cells.iter().map(|&c| self.apply(c)).collect()
    }

    pub fn apply_snake(&self, s: &Snake) -> Snake {
        Snake { cells: self.apply_cells(s.cells()) }
    }

    /// Mirroring maps Hamiltonian cycles to Hamiltonian cycles.
    pub fn apply_cycle(&self, c: &CyclePath) -> CyclePath {
        CyclePath { cells: self.apply_cells(c.cells()) }
    }
}

/// Mirrors the state so the head lands in the first quadrant:
/// head.x <= ceil(n/2) and head.y <= ceil(m/2). Exact-center ties flip
/// nothing. Returns the mirrored snake and apple with the transform used;
/// applying the transform again restores the original frame.
pub fn canonicalize(g: &GridGraph, snake: &Snake, apple: Coord) -> (Snake, Coord, MirrorTransform) {
    let head = snake.head();
    let flip_x = head.x > g.n.div_ceil(2);
    let flip_y = head.y > g.m.div_ceil(2);
    let t = MirrorTransform::new(g, flip_x, flip_y);
    (t.apply_snake(snake), t.apply(apple), t)
}
