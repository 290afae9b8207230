use crate::cdiff::{green_form, linearize};
use crate::equation::Presentation;
use crate::error::{Error, Result};
use crate::jetalg::{canonical_density, d_h, euler_all, homotopy_density, invert_x, Calculus, DiffExpr, HorizontalForm};

use super::symmetries::reduce_all;

/// A closed horizontal (n−1)-form on ℰ with its generating section when known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservedCurrent {
    pub form: HorizontalForm,
    pub section: Option<Vec<DiffExpr>>,
}

impl ConservedCurrent {
    /// (X, T) for the current X dx + T dt of a two-dimensional evolution equation.
    pub fn density_flux(&self, x: usize, t: usize) -> (DiffExpr, DiffExpr) {
        (self.form.get(&[x as u8]), self.form.get(&[t as u8]))
    }
}

/// The current X dx + T dt with D̄_t X = D̄_x T whose density has
/// variational derivative ψ.
pub fn conservation_law_from_cosymmetry(pres: &Presentation, psi: &[DiffExpr]) -> Result<ConservedCurrent> {
    let space = pres.space();
    let t = pres
        .evolution_time()
        .ok_or_else(|| Error::Unsupported("conservation law search needs an evolution equation".into()))?;
    if space.n() != 2 {
        return Err(Error::Unsupported("conservation law search needs two independents".into()));
    }
    let x = 1 - t;
    let psi = reduce_all(pres, psi)?;
    let l = homotopy_density(space, &psi)?;
    let density = canonical_density(&l, x, space)?;
    let dt = pres.derive(&density, t)?;
    let flux = invert_x(&dt, x, space)?;
    let mut form = HorizontalForm::zero(2, 1);
    form.set(vec![x as u8], density);
    form.set(vec![t as u8], flux);
    let residual = verify_current(pres, &form)?;
    if !residual.is_zero() {
        return Err(Error::NoSolution("reconstructed current is not closed".into()));
    }
    Ok(ConservedCurrent {
        form,
        section: Some(psi),
    })
}

/// Generating section of an evolution current: δX/δu.
pub fn generating_section(pres: &Presentation, current: &ConservedCurrent) -> Result<Vec<DiffExpr>> {
    let t = pres
        .evolution_time()
        .ok_or_else(|| Error::Unsupported("generating section needs an evolution equation".into()))?;
    let x = 1 - t;
    euler_all(pres.free(), &current.form.get(&[x as u8]))
}

/// reduce(d̄_h ω) as a density; zero iff ω is closed on ℰ.
pub fn verify_current(pres: &Presentation, form: &HorizontalForm) -> Result<DiffExpr> {
    let reduced = form.map(|a| pres.reduce(a))?;
    Ok(d_h(pres, &reduced)?.density())
}

/// The current arising from the Green formula for ℓ_F on (φ, ψ).
pub fn pair(pres: &Presentation, phi: &[DiffExpr], psi: &[DiffExpr]) -> Result<ConservedCurrent> {
    let l = linearize(pres.components(), pres.space());
    let phi = reduce_all(pres, phi)?;
    let psi = reduce_all(pres, psi)?;
    let w = green_form(pres.free(), &l, &phi, &psi)?;
    Ok(ConservedCurrent {
        form: w.map(|a| pres.reduce(a))?,
        section: None,
    })
}
