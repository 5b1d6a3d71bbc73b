use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid lattice spec: {0}")]
    InvalidLattice(String),

    #[error("{what} has {size} sites, exceeding the cap of {cap}")]
    SiteCap { what: &'static str, size: u64, cap: u64 },

    #[error("exact enumeration over {size} {unit} exceeds the cap of {cap}")]
    EnumerationCap { unit: &'static str, size: usize, cap: usize },

    #[error("graph file {path}: {msg}")]
    GraphFile { path: PathBuf, msg: String },

    #[error("odd source set of size {0}")]
    OddSources(usize),

    #[error("source sector {0:?} has zero weight")]
    EmptySector(Vec<usize>),

    #[error("external field h = {0} is not supported by the random current representation")]
    NonzeroField(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-ferromagnetic coupling {j} on edge {edge}")]
    NonFerromagnetic { edge: usize, j: f64 },

    #[error("no Binder-cumulant crossing in bracket ({lo}, {hi})")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("root find did not converge: {0}")]
    NoConvergence(String),

    #[error("non-normalizable target measure: lambda = {lambda}, b = {b}")]
    NonNormalizable { lambda: f64, b: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
