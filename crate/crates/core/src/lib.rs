//! Explicit isometric dilations of commuting pairs of contraction matrices.
//!
//! Two constructions of an Andô dilation are provided, one on `H ⊕ H²(F)` built from an Andô
//! tuple ([`schaffer`]) and one on `H²(D_{T*}) ⊕ Ran Q` built from the adjoint tuple and the
//! asymptotic limit of `T = T₁T₂` ([`douglas`]). [`model`] adds the characteristic function,
//! the pure-case functional model, coincidence of characteristic triples, and the unitary
//! aligning two minimal dilations. Every statement is checked numerically on truncated
//! Hardy spaces, and [`suite`] collects those checks.

pub mod ando;
#[cfg(feature = "cli")]
pub mod cli;
pub mod douglas;
pub mod error;
pub mod hardy;
pub mod instance;
pub mod linalg;
pub mod model;
pub mod pairs;
pub mod report;
pub mod schaffer;
pub mod suite;
