use crate::cdiff::{ell_op, linearize, CDiffOp};
use crate::equation::Presentation;
use crate::error::{Error, Result};
use crate::jetalg::{Calculus, DiffExpr, Monomial, Q};

use super::ansatz::Ansatz;
use super::symmetries::linearization;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosednessRoute {
    Evolution,
    General,
}

#[derive(Clone, Debug)]
pub struct SymplecticReport {
    /// ℓ̄_F*Δ − Δ*ℓ̄_F.
    pub membership: CDiffOp,
    /// Δ + Δ* (evolution route only).
    pub skew: Option<CDiffOp>,
    pub route: ClosednessRoute,
    /// Nonzero closedness residuals with the indices of the test pair.
    pub closedness: Vec<(usize, usize, Vec<DiffExpr>)>,
    pub pairs_checked: usize,
}

impl SymplecticReport {
    pub fn is_symplectic(&self) -> bool {
        self.membership.is_zero()
            && self.skew.as_ref().map(CDiffOp::is_zero).unwrap_or(true)
            && self.closedness.is_empty()
    }
}

fn test_family(pres: &Presentation, a: &Ansatz) -> Result<Vec<Vec<DiffExpr>>> {
    let space = pres.space();
    let m = space.m();
    let deps: Vec<usize> = (0..m).collect();
    let internal = pres.internal_jets(&deps, a.max_order);
    let vars = a.variables(space, &internal)?;
    let mons: Vec<Monomial> = a.monomials(space, &vars);
    let mut out = Vec::new();
    for j in 0..m {
        for mon in &mons {
            let mut phi = vec![DiffExpr::zero(); m];
            phi[j] = DiffExpr::term(mon.clone(), Q::from_integer(1.into()));
            out.push(phi);
        }
    }
    Ok(out)
}

/// ∇^{*1}(φ₁, φ₂) for the operator ∇ with `m_free` = ∇(F, ·) on free jets;
/// cofactors come from `pres`, the result is evaluated in `calc`.
pub fn nabla_adjoint<C: Calculus + ?Sized>(
    pres: &Presentation,
    calc: &C,
    m_free: &CDiffOp,
    phi1: &[DiffExpr],
    phi2: &[DiffExpr],
) -> Result<Vec<DiffExpr>> {
    let k = pres.components().len();
    let mut out = vec![DiffExpr::zero(); k];
    for r in 0..m_free.rows() {
        if phi1[r].is_zero() {
            continue;
        }
        for c in 0..m_free.cols() {
            for (idx, a) in m_free.entry(r, c).coeffs() {
                let red = pres.reduce_full(a)?;
                if !red.normal_form.is_zero() {
                    return Err(Error::NoSolution("operator identity fails on the equation".into()));
                }
                let d = calc.derive_multi(&phi2[c], idx)?;
                let arg = calc.normalize(&(&phi1[r] * &d))?;
                if arg.is_zero() {
                    continue;
                }
                for (s, cof) in red.cofactors.iter().enumerate() {
                    if cof.is_zero() {
                        continue;
                    }
                    let adj = CDiffOp::scalar(cof.clone()).adjoint(calc)?;
                    out[s] += &adj.apply(calc, std::slice::from_ref(&arg))?[0];
                }
            }
        }
    }
    out.iter().map(|e| calc.normalize(e)).collect()
}

/// Checks both conditions for Δ: κ → P̂ to define a symplectic structure;
/// closedness is tested on all pairs from the ansatz family.
pub fn verify_symplectic(pres: &Presentation, delta: &CDiffOp, tests: &Ansatz) -> Result<SymplecticReport> {
    let m = pres.space().m();
    let k = pres.components().len();
    if delta.cols() != m || delta.rows() != k {
        return Err(Error::Shape(format!(
            "symplectic operator must be {k}x{m}, got {}x{}",
            delta.rows(),
            delta.cols()
        )));
    }
    let delta = delta.normalize(pres)?;
    let l = linearization(pres)?;
    let lstar = l.adjoint(pres)?;
    let dstar = delta.adjoint(pres)?;
    let membership = lstar.compose(pres, &delta)?.sub(&dstar.compose(pres, &l)?)?;
    let family = test_family(pres, tests)?;
    let mut closedness = Vec::new();
    let mut pairs_checked = 0;
    let evolution = pres.evolution_time().is_some();
    let (route, skew) = if evolution {
        (ClosednessRoute::Evolution, Some(delta.add(&dstar)?))
    } else {
        (ClosednessRoute::General, None)
    };
    if !membership.is_zero() {
        return Ok(SymplecticReport {
            membership,
            skew,
            route,
            closedness,
            pairs_checked,
        });
    }
    let ldeltas: Vec<CDiffOp> = family
        .iter()
        .map(|phi| ell_op(pres, &delta, phi))
        .collect::<Result<_>>()?;
    let m_free = if evolution {
        None
    } else {
        let lf = linearize(pres.components(), pres.space());
        let free = pres.free();
        let ds = delta.adjoint(free)?;
        Some(lf.adjoint(free)?.compose(free, &delta)?.sub(&ds.compose(free, &lf)?)?)
    };
    for i in 0..family.len() {
        for j in 0..family.len() {
            if !evolution && j < i {
                continue;
            }
            pairs_checked += 1;
            let a = ldeltas[i].apply(pres, &family[j])?;
            let b = ldeltas[j].apply(pres, &family[i])?;
            let res: Vec<DiffExpr> = match &m_free {
                None => {
                    let c = ldeltas[i].adjoint(pres)?.apply(pres, &family[j])?;
                    (0..a.len()).map(|r| &(&a[r] - &b[r]) - &c[r]).collect()
                }
                Some(mf) => {
                    let nb = nabla_adjoint(pres, pres, mf, &family[i], &family[j])?;
                    (0..b.len()).map(|r| &(&b[r] - &a[r]) + &nb[r]).collect()
                }
            };
            let res = res.iter().map(|e| pres.normalize(e)).collect::<Result<Vec<_>>>()?;
            if res.iter().any(|e| !e.is_zero()) {
                closedness.push((i, j, res));
            }
        }
    }
    Ok(SymplecticReport {
        membership,
        skew,
        route,
        closedness,
        pairs_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdiff::ScalarOp;
    use crate::jetalg::{parse, parse_operator, JetSpace, MultiIndex};

    fn dx(s: &crate::jetalg::JetSpace, text: &str) -> CDiffOp {
        CDiffOp::scalar(ScalarOp::from_map(parse_operator(text, s).unwrap()))
    }

    #[test]
    fn kdv_dx_is_not_symplectic() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s).unwrap();
        let e = Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let r = verify_symplectic(&e, &dx(&s, "D[1,0]"), &Ansatz::new(1, 1)).unwrap();
        assert!(!r.membership.is_zero());
        assert!(!r.is_symplectic());
        let z = verify_symplectic(&e, &CDiffOp::zero(1, 1), &Ansatz::new(1, 1)).unwrap();
        assert!(z.is_symplectic());
    }

    #[test]
    fn wdvv_dx_is_symplectic() {
        let s = JetSpace::simple(&["x", "y"], &["u"], &[]).unwrap();
        let f = parse("u[0,3] - u[2,1]^2 + u[3,0]*u[1,2]", &s).unwrap();
        let e = Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[0, 3]))], true).unwrap();
        let r = verify_symplectic(&e, &dx(&s, "D[1,0]"), &Ansatz::new(1, 1)).unwrap();
        assert!(r.membership.is_zero(), "{:?}", r.membership.render(&s));
        assert!(r.is_symplectic());
    }
}
