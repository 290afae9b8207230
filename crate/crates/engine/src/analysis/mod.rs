//! Symmetries, cosymmetries, conservation laws, recursion operators and
//! symplectic structures on an equation.

pub mod ansatz;
pub mod currents;
pub mod recursion;
pub mod symmetries;
pub mod symplectic;

pub use ansatz::{monomials_upto, normalize_sign, solve_linear, span_contains, Ansatz};
pub use currents::{conservation_law_from_cosymmetry, generating_section, pair, verify_current, ConservedCurrent};
pub use recursion::{lie_derivative_recursion, recursion_apply, torsion};
pub use symmetries::{
    box_operator, lie_on_cosymmetry, linearization, reduce_all, solve_cosymmetries, solve_symmetries,
    verify_cosymmetry, verify_symmetry,
};
pub use symplectic::{nabla_adjoint, verify_symplectic, ClosednessRoute, SymplecticReport};
