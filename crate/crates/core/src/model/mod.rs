//! Characteristic functions, the pure-case functional model, coincidence of characteristic
//! triples, and uniqueness of minimal dilations across the two models.

pub mod charfn;
pub mod coincidence;
pub mod functional;
pub mod uniqueness;

pub use charfn::{char_eval, char_triple, CharFn, CharTriple};
pub use coincidence::{check_coincidence, search_coincidence, SearchOutcome};
pub use functional::{admissible_check, functional_model, verify_model_equivalence, FunctionalModel};
pub use uniqueness::{align_minimal_dilations, verify_ut_membership, Alignment, Triple};
