//! Random current representation of ferromagnetic Ising and lattice phi^4
//! systems: exact enumeration oracles, Pfaffian boundary correlations,
//! Monte Carlo samplers and diagrammatic bounds.

pub mod currents;
pub mod diagrams;
pub mod error;
pub mod graph;
pub mod harness;
pub mod gs_blocks;
pub mod pfaffian;
pub mod ising_exact;
pub mod unionfind;
pub mod worm_mc;

pub use error::{Error, Result};
