//! Exact computation of behavioural distances between programs of an affine
//! probabilistic λ-calculus: trace distance, bisimulation distance through
//! the Kantorovich lifting, and tuple distance.
//!
//! All probabilities are exact rationals.

pub mod bisim;
pub mod dist;
pub mod kantorovich;
pub mod semantics;
pub mod syntax;
pub mod templates;
pub mod trace;
pub mod tuple;

pub use dist::{fmt_rational, Dist, Rational};
pub use syntax::{parse, Term};
pub use trace::{Trace, TraceAction};
