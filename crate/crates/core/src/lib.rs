//! Homogeneous holomorphic vector bundles over the unit ball `B_n`.
//!
//! The crate builds the graded Lie algebra `sl(n+1,C)`, the factorization of
//! `SU(n,1)` acting on the ball, the representations of `K̃^C` that label the
//! layers of a bundle, the intertwining operator `Γ` between the direct-sum and
//! the twisted actions, a symbolic algebra for reproducing kernels, and
//! truncated Hilbert-space models of the multiplication tuples.

pub mod bundle;
pub mod error;
pub mod gamma;
pub mod jet;
pub mod kernel;
pub mod lie;
pub mod linalg;
pub mod mobius;
pub mod poly;
pub mod reps;
pub mod sampling;
pub mod tuples;

pub use error::{Error, Result};
pub use lie::{DomainConstants, LieElement};
pub use mobius::{Factorization, GroupElement, KFactor};
pub use reps::{CGProjection, IrrepLabel};
