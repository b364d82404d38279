//! Board pictures: a text grid for terminals and a hand-built SVG for
//! files. Both draw the same things: snake body `#`, head `@`, apple `A`,
//! and optionally the cycle being followed. Rendering is pure; equal
//! inputs give byte-equal output.
//!
//! Rows print with y growing upward, so (1,1) is the bottom-left corner.

use std::fmt::Write;

use crate::grid::{Coord, CyclePath, Dir, GridGraph};
use crate::game::GameState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Ascii,
    Svg,
}

#[derive(Clone, Copy, Debug)]
pub struct RenderSpec {
    pub format: RenderFormat,
    /// Square cell edge in pixels; SVG only.
    pub cell_px: u32,
    /// Draw the cycle: arrows on free cells in text, a closed line in SVG.
    pub show_cycle: bool,
}

impl RenderSpec {
    pub fn ascii() -> RenderSpec {
        RenderSpec { format: RenderFormat::Ascii, cell_px: 24, show_cycle: false }
    }

    pub fn svg() -> RenderSpec {
        RenderSpec { format: RenderFormat::Svg, cell_px: 24, show_cycle: false }
    }

    pub fn with_cycle(mut self) -> RenderSpec {
        self.show_cycle = true;
        self
    }
}

pub fn render_board(
    g: &GridGraph,
    state: &GameState,
    cycle: Option<&CyclePath>,
    spec: &RenderSpec,
) -> String {
    let overlay = if spec.show_cycle { cycle } else { None };
    match spec.format {
        RenderFormat::Ascii => ascii(g, state, overlay),
        RenderFormat::Svg => svg(g, state, overlay, spec.cell_px.max(8)),
    }
}

fn arrow(cycle: &CyclePath, c: Coord) -> Option<char> {
    let next = cycle.successor(c)?;
    Some(match Dir::between(c, next)? {
        Dir::Right => '>',
        Dir::Left => '<',
        Dir::Up => '^',
        Dir::Down => 'v',
    })
}

fn ascii(g: &GridGraph, state: &GameState, overlay: Option<&CyclePath>) -> String {
    let mut out = String::new();
    for y in (1..=g.m()).rev() {
        for x in 1..=g.n() {
            let c = Coord::new(x, y);
            let glyph = if c == state.snake.head() {
                '@'
            } else if state.snake.contains(c) {
                '#'
            } else if state.apple == Some(c) {
                'A'
            } else {
                overlay.and_then(|cy| arrow(cy, c)).unwrap_or('.')
            };
            if x > 1 {
                out.push(' ');
            }
            out.push(glyph);
        }
        out.push('\n');
    }
    out
}

/// Pixel center of a cell; the SVG y axis points down, the board's up.
fn center(g: &GridGraph, c: Coord, s: u32) -> (u32, u32) {
    ((c.x - 1) * s + s / 2, (g.m() - c.y) * s + s / 2)
}

fn svg(g: &GridGraph, state: &GameState, overlay: Option<&CyclePath>, s: u32) -> String {
    let (w, h) = (g.n() * s, g.m() * s);
    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = write!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"#fdf6e3\"/>\n");
    for x in 1..g.n() {
        let px = x * s;
        let _ = write!(
            out,
            "<line x1=\"{px}\" y1=\"0\" x2=\"{px}\" y2=\"{h}\" stroke=\"#ddd\" stroke-width=\"1\"/>\n"
        );
    }
    for y in 1..g.m() {
        let py = y * s;
        let _ = write!(
            out,
            "<line x1=\"0\" y1=\"{py}\" x2=\"{w}\" y2=\"{py}\" stroke=\"#ddd\" stroke-width=\"1\"/>\n"
        );
    }
    if let Some(cycle) = overlay {
        let mut points = String::new();
        for &c in cycle.cells().iter().chain(cycle.cells().first()) {
            let (px, py) = center(g, c, s);
            let _ = write!(points, "{px},{py} ");
        }
        let _ = write!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#b0c4b1\" stroke-width=\"{}\"/>\n",
            points.trim_end(),
            (s / 8).max(1)
        );
    }
    for &c in state.snake.cells() {
        let fill = if c == state.snake.head() { "#2a9d8f" } else { "#264653" };
        let _ = write!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" rx=\"{}\" fill=\"{fill}\"/>\n",
            (c.x - 1) * s + 1,
            (g.m() - c.y) * s + 1,
            s - 2,
            s - 2,
            s / 6
        );
    }
    if let Some(a) = state.apple {
        let (px, py) = center(g, a, s);
        let _ = write!(
            out,
            "<circle cx=\"{px}\" cy=\"{py}\" r=\"{}\" fill=\"#e76f51\"/>\n",
            s / 3
        );
    }
    out.push_str("</svg>\n");
    out
}
