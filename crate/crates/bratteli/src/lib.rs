//! Graded graphs (Bratteli diagrams) and the asymptotic structure of their
//! path spaces.
//!
//! The crate is organized around a handful of objects:
//!
//! * [`graph`] — ℕ-graded graphs with edge multiplicities, exact path-count
//!   dimensions, cotransition equipments and level telescoping.
//! * [`builders`] — the canonical example graphs (Pascal, Young, dyadic,
//!   Fibonacci, ordered/unordered pairs, pascalizations of a chain or tree).
//! * [`measure`] — Markov measures on path spaces: centrality, cocycles,
//!   level projections and the extremality (ergodicity) statistic.
//! * [`adic`] — lexicographic orderings, the adic successor map (odometer,
//!   Pascal automorphism), orbits and exact invariance checks.
//! * [`transport`] — an exact solver for the finite transportation problem
//!   (Kantorovich distance) over big rationals.
//! * [`standardness`] — iterated transport metrics, the weak and strong
//!   standardness scans, coupling-constrained filtration distance and the
//!   binary-tree orbit distance.
//! * [`boundary`] — concrete boundary computations: de Finetti on Pascal,
//!   Plancherel and uniform limit shapes, the tree-boundary family with its
//!   phase transition, signed Young subgroups and character estimation.
//! * [`mm`] — matrix distributions of finite metric measure spaces and
//!   reconstruction at desk scale.
//!
//! All probability computations are carried out in exact rational
//! arithmetic unless a measure explicitly declares itself float-valued;
//! samplers take explicit seeds and are deterministic given the seed.

pub mod adic;
pub mod boundary;
pub mod builders;
pub mod graph;
pub mod measure;
pub mod mm;
pub mod numeric;
pub mod standardness;
pub mod transport;

pub use graph::{Equipment, GradedGraph, Label, PathPrefix, VertexId};
pub use measure::{LevelDistribution, MarkovMeasure, Measure};
pub use numeric::Rational;

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex: level {level}, index {index}")]
    UnknownVertex { level: usize, index: usize },
    #[error("level {level} out of range (graph has {max_level} levels)")]
    LevelOutOfRange { level: usize, max_level: usize },
    #[error("malformed graph: {0}")]
    MalformedGraph(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("paths are not cofinal")]
    NotCofinal,
    #[error("path has no successor within the representation horizon")]
    NoSuccessor,
    #[error("path has no predecessor within the representation horizon")]
    NoPredecessor,
    #[error("marginal mismatch: mass {0} vs {1}")]
    MarginalMismatch(String, String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tree height mismatch: {0} vs {1}")]
    HeightMismatch(usize, usize),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),
    #[error("label count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("target level must be below the start level: {target} >= {start}")]
    BadProjectionLevels { target: usize, start: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
