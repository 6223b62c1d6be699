//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building instances or running solvers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A graph with no edges (or no vertices) was passed where structure is required.
    #[error("graph has no edges")]
    EmptyGraph,

    /// Every edge of the graph is a self-loop, so loop removal has nothing to keep.
    #[error("all edge weight sits on self-loops (loop weight {w_loops})")]
    AllLoops {
        /// Total normalized weight on self-loops.
        w_loops: f64,
    },

    /// Self-loops present in a context that requires a loop-free graph.
    #[error("graph contains self-loops but {context} requires a loop-free graph")]
    LoopsNotAllowed {
        /// Operation that rejected the graph.
        context: &'static str,
    },

    /// Edge weights must be non-negative.
    #[error("negative edge weight {w} on edge ({u}, {v})")]
    NegativeWeight {
        /// First endpoint label.
        u: String,
        /// Second endpoint label.
        v: String,
        /// Offending weight.
        w: f64,
    },

    /// An edge referenced a vertex that does not exist.
    #[error("edge references unknown vertex index {index} (graph has {len} vertices)")]
    VertexOutOfRange {
        /// Offending index.
        index: usize,
        /// Number of vertices in the graph.
        len: usize,
    },

    /// An operation needed a vertex the assignment does not cover.
    #[error("assignment is missing vertex {label:?}")]
    MissingVertex {
        /// Label of the uncovered vertex.
        label: String,
    },

    /// Instance-size guard (hypercube dimension, qubit count, UG label count, ...).
    #[error("{what} = {got} exceeds the supported maximum {max}")]
    DimensionTooLarge {
        /// Human-readable name of the limited quantity.
        what: &'static str,
        /// Requested size.
        got: usize,
        /// Supported maximum.
        max: usize,
    },

    /// A parameter was outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Monte Carlo net left at least one Voronoi cell empty.
    #[error("degenerate net: cell {cell} received no samples ({samples} samples over {cells} cells)")]
    DegenerateNet {
        /// Index of the starved cell.
        cell: usize,
        /// Total number of cells.
        cells: usize,
        /// Total number of samples drawn.
        samples: u64,
    },

    /// A series or iteration hit its step cap before reaching tolerance.
    #[error("{what} did not converge within {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        /// Name of the iteration.
        what: &'static str,
        /// Iterations performed.
        iterations: usize,
        /// Residual when the cap was hit.
        residual: f64,
    },

    /// A structural problem with a Unique Games instance.
    #[error("invalid unique-games instance: {0}")]
    InvalidUgInstance(String),

    /// A file did not parse as the expected qmclab text format.
    #[error("parse error at line {line}: {msg}")]
    Parse {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },

    /// Wrapper around I/O failures when reading or writing instance files.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
