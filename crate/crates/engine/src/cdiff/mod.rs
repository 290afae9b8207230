//! 𝒞-differential operators: algebra, adjoints, linearizations, Green forms.

pub mod op;
pub mod pseudo;

pub use op::{ell_op, green_form, helmholtz, jacobi, linearize, linearize_on, pairing, CDiffOp, ScalarOp};
pub use pseudo::{lie_derivative, nijenhuis_torsion, PseudoOp, TailTerm};
