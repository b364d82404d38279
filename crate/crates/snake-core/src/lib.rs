//! Snake, played to a guaranteed win.
//!
//! Each time an apple appears, the engine searches for a Hamiltonian cycle
//! of the grid that starts with the snake's body and reaches the apple in as
//! few steps as possible, then walks the snake along it. Because the snake
//! always follows a Hamiltonian cycle it can never trap itself, and because
//! the cycle is re-solved per apple it takes far fewer steps than blindly
//! circling one fixed tour.
//!
//! The search runs on a purpose-built incremental solver over directed grid
//! edges ([`solver`]), and the per-apple re-solve can reuse the previous
//! iteration's solver state through several mechanisms ([`strategy`]):
//! rebuilding from scratch, disposable guard literals, pre-grounded
//! activation literals, per-call assumptions, or model-callback clause
//! injection. A benchmark harness ([`bench`]) measures how the mechanisms
//! compare, and [`oracle`] provides a brute-force reference for small grids.

pub mod bench;
pub mod game;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod render;
pub mod rng;
pub mod solver;
pub mod strategy;

pub use grid::{Coord, CyclePath, GridGraph, Snake};
