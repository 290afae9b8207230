//! Variational multivectors, Schouten brackets, Hamiltonian structures and the
//! Magri scheme.

pub mod magri;
pub mod on_equation;
pub mod schouten;
pub mod superdensity;

pub use superdensity::{
    are_compatible, from_superdensity, is_hamiltonian, odd_extension, to_superdensity, HamiltonianCheck,
    Superdensity,
};
pub use schouten::{poisson_bracket, schouten_direct, trivial_on_triple, BracketValue, Multivector, PoissonBracket};
pub use magri::{magri, magri_step, solve_operator, Hierarchy};
pub use on_equation::{schouten_on_equation, verify_bivector_on_equation, EquationBracket};
