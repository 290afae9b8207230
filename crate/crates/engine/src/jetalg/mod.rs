//! Jet coordinates and the graded Laurent algebra of differential polynomials.

pub mod calculus;
pub mod expr;
pub mod forms;
pub mod homotopy;
pub mod parse;
pub mod space;

pub use calculus::{
    ev_apply, ev_apply_on, euler, euler_all, is_variationally_trivial, jets_of, shift_var,
    signed_total_sum,
    total_derivative, total_derivative_with, Calculus, FreeJets,
};
pub use expr::{q, q_frac, DiffExpr, Monomial, Q};
pub use forms::{d_h, HorizontalForm};
pub use homotopy::{canonical_density, homotopy_density, invert_divergence, invert_x};
pub use parse::{parse, parse_operator, render, render_monomial, render_operator, ParseError};
pub use space::{binom, Field, JetSpace, MultiIndex, Symbol, Var, MAX_INDEP};
