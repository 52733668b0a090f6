//! Certified bounds on asymptotic tensor-rank quantities.
//!
//! The crate has two halves. The lower-bound half works with the support of a
//! sparse tensor: it decides tightness, synthesizes integer labelings,
//! enumerates fiber-respecting equivalence relations, solves max-entropy
//! coupling problems and combines everything into a certified lower bound on
//! the monomial subexponent. The upper-bound half evaluates the generalized
//! Coppersmith–Winograd construction for complete-graph tensors: border-rank
//! certificate checking, the asymptotic sum inequality, cut-based flattening
//! bounds and the per-edge exponent table.
//!
//! Everything combinatorial is exact (rational arithmetic, explicit
//! enumeration); everything variational (entropy maximization) carries a dual
//! certificate so that published bounds err on the safe side.

pub mod entropy;
pub mod error;
pub mod exponent;
pub mod lab;
pub mod linalg;
pub mod subrank;
pub mod tensor;
pub mod tightness;

pub use error::{Error, Result};
pub use tensor::{Graph, PolyTensor, ProductPartition, SparseTensor, Support, SupportPoint};

/// Default RNG seed used by every randomized routine when the caller does not
/// supply one. Fixed so that repeated runs are byte-identical.
pub const DEFAULT_SEED: u64 = 1729;
