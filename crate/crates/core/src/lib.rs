//! Executable colored operads, operadic field theories and linear quantization.
//!
//! The crate is organised bottom-up:
//!
//! * [`exact`]: rational scalars and sparse Gaussian elimination;
//! * [`complexes`]: chain complexes, homology and quasi-isomorphisms;
//! * [`operads`]: tree-based free colored operads, named presentations and the
//!   morphism `uLie → As` sending the bracket to the commutator;
//! * [`algebras`]: structure-constant dg algebras, the commutator functor and
//!   Heisenberg Lie algebras;
//! * [`envelope`]: truncated unital universal enveloping algebras via PBW
//!   rewriting;
//! * [`fieldtheory`]: orthogonal categories, causality checks, quantization;
//! * [`cherns`]: linear Chern–Simons theory on triangulated surfaces;
//! * [`json`]: the on-disk formats shared with the command-line tool.

pub mod algebras;
pub mod cherns;
pub mod complexes;
pub mod envelope;
pub mod exact;
pub mod fieldtheory;
pub mod json;
pub mod operads;

pub use exact::{Rational, RationalMatrix};
