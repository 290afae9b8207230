use crate::cdiff::{linearize, CDiffOp};
use crate::equation::Presentation;
use crate::error::{Error, Result};
use crate::jetalg::{ev_apply, Calculus, DiffExpr, JetSpace};

use super::ansatz::{solve_linear, Ansatz};

/// ℓ̄_F: the linearization with coefficients reduced to ℰ.
pub fn linearization(pres: &Presentation) -> Result<CDiffOp> {
    linearize(pres.components(), pres.space()).normalize(pres)
}

/// reduce(ℓ̄_F(φ)); φ is a symmetry iff every entry vanishes.
pub fn verify_symmetry(pres: &Presentation, phi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    let phi = reduce_all(pres, phi)?;
    linearization(pres)?.apply(pres, &phi)
}

/// reduce(ℓ̄_F*(ψ)).
pub fn verify_cosymmetry(pres: &Presentation, psi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    let psi = reduce_all(pres, psi)?;
    linearization(pres)?.adjoint(pres)?.apply(pres, &psi)
}

pub fn reduce_all(pres: &Presentation, v: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    v.iter().map(|e| pres.reduce(e)).collect()
}

fn unknown_monomials(pres: &Presentation, a: &Ansatz, components: usize) -> Result<Vec<Vec<crate::jetalg::Monomial>>> {
    let space: &JetSpace = pres.space();
    let deps: Vec<usize> = (0..space.m()).collect();
    let internal = pres.internal_jets(&deps, a.max_order);
    let vars = a.variables(space, &internal)?;
    let mons = a.monomials(space, &vars);
    Ok(vec![mons; components])
}

/// Basis of the symmetries within the ansatz.
pub fn solve_symmetries(pres: &Presentation, a: &Ansatz) -> Result<Vec<Vec<DiffExpr>>> {
    let l = linearization(pres)?;
    let mons = unknown_monomials(pres, a, pres.space().m())?;
    solve_linear(&mons, |phi| l.apply(pres, phi))
}

/// Basis of the cosymmetries within the ansatz.
pub fn solve_cosymmetries(pres: &Presentation, a: &Ansatz) -> Result<Vec<Vec<DiffExpr>>> {
    let l = linearization(pres)?.adjoint(pres)?;
    let mons = unknown_monomials(pres, a, pres.components().len())?;
    solve_linear(&mons, |psi| l.apply(pres, psi))
}

/// The operator □ with ℓ_F(φ) = □(F) on free jets.
pub fn box_operator(pres: &Presentation, phi: &[DiffExpr]) -> Result<CDiffOp> {
    let l = linearize(pres.components(), pres.space());
    let lphi = l.apply(pres.free(), phi)?;
    let mut rows = Vec::with_capacity(lphi.len());
    for e in &lphi {
        let (nf, row) = pres.cofactor_row(e)?;
        if !nf.is_zero() {
            return Err(Error::NoSolution(
                "section is not a symmetry; ℓ_F(φ) does not vanish on the equation".into(),
            ));
        }
        rows.push(row.entries()[0].clone());
    }
    CDiffOp::from_entries(rows)
}

/// L_φ(ψ) = 𝐄_φ(ψ) + □*(ψ).
pub fn lie_on_cosymmetry(pres: &Presentation, phi: &[DiffExpr], psi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    if phi.iter().all(DiffExpr::is_zero) {
        return Ok(vec![DiffExpr::zero(); psi.len()]);
    }
    let phi = reduce_all(pres, phi)?;
    let psi = reduce_all(pres, psi)?;
    let bx = box_operator(pres, &phi)?;
    let bstar = bx.adjoint(pres)?.apply(pres, &psi)?;
    psi.iter()
        .zip(bstar.iter())
        .map(|(p, b)| {
            let e = ev_apply(pres, &phi, p)?;
            pres.normalize(&(&e + b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::span_contains;
    use crate::jetalg::{parse, MultiIndex};

    pub(crate) fn kdv() -> Presentation {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s).unwrap();
        Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap()
    }

    fn p(pres: &Presentation, t: &str) -> DiffExpr {
        parse(t, pres.space()).unwrap()
    }

    #[test]
    fn kdv_symmetry_checks() {
        let e = kdv();
        assert!(verify_symmetry(&e, &[p(&e, "u[1,0]")]).unwrap()[0].is_zero());
        assert!(verify_symmetry(&e, &[p(&e, "6*t*u[1,0] + 1")]).unwrap()[0].is_zero());
        assert!(!verify_symmetry(&e, &[p(&e, "u^2")]).unwrap()[0].is_zero());
    }

    #[test]
    fn kdv_low_order_symmetries() {
        let e = kdv();
        let basis = solve_symmetries(&e, &Ansatz::new(1, 2)).unwrap();
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(verify_symmetry(&e, b).unwrap()[0].is_zero());
        }
    }

    #[test]
    fn kdv_third_order_symmetries() {
        let e = kdv();
        let basis = solve_symmetries(&e, &Ansatz::new(3, 3)).unwrap();
        let rendered: Vec<String> = basis.iter().map(|b| crate::jetalg::render(&b[0], e.space())).collect();
        assert_eq!(basis.len(), 4, "{rendered:?}");
        for want in ["u[1,0]", "6*t*u[1,0] + 1", "6*u*u[1,0] + u[3,0]", "x*u[1,0] + 3*t*(6*u*u[1,0] + u[3,0]) + 2*u"] {
            assert!(span_contains(&basis, &[p(&e, want)]), "{want}");
        }
        assert!(!span_contains(&basis, &[p(&e, "u^2")]));
    }

    #[test]
    fn kdv_cosymmetries() {
        let e = kdv();
        assert!(verify_cosymmetry(&e, &[p(&e, "u[2,0] + 3*u^2")]).unwrap()[0].is_zero());
        assert!(!verify_cosymmetry(&e, &[p(&e, "u[1,0]")]).unwrap()[0].is_zero());
        let basis = solve_cosymmetries(&e, &Ansatz::new(2, 2).with_whitelist(&["u"])).unwrap();
        assert_eq!(basis.len(), 3);
    }

    #[test]
    fn lie_action_on_mass() {
        let e = kdv();
        let r = lie_on_cosymmetry(&e, &[p(&e, "u[1,0]")], &[p(&e, "1")]).unwrap();
        assert!(r[0].is_zero());
        let r = lie_on_cosymmetry(&e, &[p(&e, "u[1,0]")], &[p(&e, "u")]).unwrap();
        assert!(verify_cosymmetry(&e, &r).unwrap()[0].is_zero());
    }
}
