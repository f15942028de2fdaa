//! Hard-core model toolkit.
//!
//! The hard-core model weighs each independent set `I` of a finite simple
//! graph by `lambda^|I|`; the partition function `Z` sums these weights.
//! This crate provides:
//!
//! - exact `log Z` and exact vertex marginals on small graphs ([`oracle`]);
//! - self-avoiding-walk trees whose cycle-closing leaves are fixed occupied
//!   or unoccupied so that the root ratio matches the graph ([`weitz`]);
//! - certified marginal intervals from the two extreme frontier
//!   completions, decay profiles, and symmetric-tree reports ([`decay`]);
//! - the decay-threshold calculus: critical activities, the fixed point of
//!   the tree recurrence, the per-step decay factor, certificates, and the
//!   lattice threshold table ([`threshold`]);
//! - exact self-avoiding-walk counts and connective-constant estimates
//!   ([`saw`]), plus finite-memory walk branching matrices on the square
//!   lattice and their Perron roots ([`branching`]);
//! - a deterministic approximation scheme for `log Z` driven by certified
//!   intervals ([`fptas`]).
//!
//! Everything seeded is reproducible bit-for-bit: the only randomness
//! primitive is SplitMix64 (see [`graph::splitmix64`]).

pub mod boundary;
pub mod branching;
pub mod decay;
pub mod error;
pub mod fptas;
pub mod graph;
pub mod oracle;
pub mod saw;
pub mod threshold;
pub mod weitz;

pub use boundary::{reduce_by_boundary, BoundaryCondition, ReducedGraph, Spin};
pub use error::{Error, Result};
pub use graph::{Activity, Graph};
pub use weitz::DEFAULT_NODE_BUDGET;
