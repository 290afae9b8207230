//! Equations as orthonomic rewrite systems.

pub mod equivalence;
pub mod linearized;
pub mod presentation;

pub use equivalence::{transport, verify_equivalence, EquivalenceWitness, IdentityCheck};
pub use presentation::{Presentation, Reduction, Rule, DEFAULT_MAX_PROLONG};
pub use linearized::{adjoint_system, leads, tangent_system};
