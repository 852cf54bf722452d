//! Full-tilt particle motion on a grid: every particle slides as far as it
//! can in the commanded direction, all at once, without pushing.
//!
//! The crate is `no_std` with `alloc`. File formats other than TWF, the
//! command line and the stepping service live in the `tilt` crate.

#![no_std]

extern crate alloc;

mod carve;
pub mod circuit;
pub mod gates;
pub mod permute;
pub mod reductions;
pub mod solver;
pub mod sim;
pub mod twf;

pub use sim::{
    format_moves, parse_moves, Cell, Configuration, Engine, Goal, Move, MoveSequence, Particle, Scratch, Shape,
    Who, Workspace, WorkspaceError, CLOCK,
};
