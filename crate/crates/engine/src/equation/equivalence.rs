use crate::cdiff::{linearize, CDiffOp};
use crate::error::{Error, Result};
use crate::jetalg::{Calculus, DiffExpr, Var};

use super::presentation::Presentation;

/// Operators of the equivalence diagram between ℓ̄_{F₁} and ℓ̄_{F₂}, all with
/// coefficients on ℰ₂, plus the images of ℰ₁'s dependents in ℰ₂'s coordinates.
#[derive(Clone, Debug)]
pub struct EquivalenceWitness {
    pub alpha: CDiffOp,
    pub beta: CDiffOp,
    pub alpha_prime: CDiffOp,
    pub beta_prime: CDiffOp,
    pub s1: CDiffOp,
    pub s2: CDiffOp,
    pub sigma: Vec<DiffExpr>,
}

#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: CDiffOp,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Rewrites a function on ℰ₁ in the internal coordinates of ℰ₂.
pub fn transport(e1: &Presentation, e2: &Presentation, sigma: &[DiffExpr], f: &DiffExpr) -> Result<DiffExpr> {
    let s1 = e1.space();
    let s2 = e2.space();
    let g = f.substitute(|v| -> Result<Option<DiffExpr>> {
        match v {
            Var::Indep(_) => Ok(None),
            Var::Param(k) => {
                let name = &s1.parameters()[*k as usize];
                let idx = s2
                    .parameters()
                    .iter()
                    .position(|p| p == name)
                    .ok_or_else(|| Error::Space(format!("parameter `{name}` missing in target")))?;
                Ok(Some(DiffExpr::even(Var::Param(idx as u8))))
            }
            Var::Jet(j, idx) => {
                let base = sigma
                    .get(*j as usize)
                    .ok_or_else(|| Error::Shape("transport map too short".into()))?;
                Ok(Some(e2.derive_multi(base, idx)?))
            }
            Var::Nonlocal(_) => Err(Error::Unsupported("transport of nonlocal variables".into())),
        }
    })?;
    e2.reduce(&g)
}

pub fn verify_equivalence(e1: &Presentation, e2: &Presentation, w: &EquivalenceWitness) -> Result<Vec<IdentityCheck>> {
    if e1.space().n() != e2.space().n() {
        return Err(Error::Shape("presentations over different base dimensions".into()));
    }
    if w.sigma.len() != e1.space().m() {
        return Err(Error::Shape("transport map must cover every dependent".into()));
    }
    let l1 = linearize(e1.components(), e1.space())
        .normalize(e1)?
        .map_coeffs(|a| transport(e1, e2, &w.sigma, a))?;
    let l2 = linearize(e2.components(), e2.space()).normalize(e2)?;
    let m1 = l1.cols();
    let m2 = l2.cols();
    let lhs1 = l1.compose(e2, &w.beta)?;
    let rhs1 = w.beta_prime.compose(e2, &l2)?;
    let lhs2 = l2.compose(e2, &w.alpha)?;
    let rhs2 = w.alpha_prime.compose(e2, &l1)?;
    let ba = w.beta.compose(e2, &w.alpha)?;
    let rhs3 = CDiffOp::identity(m1).add(&w.s1.compose(e2, &l1)?)?;
    let ab = w.alpha.compose(e2, &w.beta)?;
    let rhs4 = CDiffOp::identity(m2).add(&w.s2.compose(e2, &l2)?)?;
    Ok(vec![
        IdentityCheck {
            name: "l1*beta = beta'*l2",
            residual: lhs1.sub(&rhs1)?.normalize(e2)?,
        },
        IdentityCheck {
            name: "l2*alpha = alpha'*l1",
            residual: lhs2.sub(&rhs2)?.normalize(e2)?,
        },
        IdentityCheck {
            name: "beta*alpha = id + s1*l1",
            residual: ba.sub(&rhs3)?.normalize(e2)?,
        },
        IdentityCheck {
            name: "alpha*beta = id + s2*l2",
            residual: ab.sub(&rhs4)?.normalize(e2)?,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdiff::ScalarOp;
    use crate::jetalg::{parse, parse_operator, JetSpace, MultiIndex};

    fn op(s: &crate::jetalg::JetSpace, rows: &[&[&str]]) -> CDiffOp {
        CDiffOp::from_entries(
            rows.iter()
                .map(|r| r.iter().map(|t| ScalarOp::from_map(parse_operator(t, s).unwrap())).collect())
                .collect(),
        )
        .unwrap()
    }

    fn presentations() -> (Presentation, Presentation) {
        let s1 = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f1 = parse("u[0,1] - u[3,0] - 6*u*u[1,0]", &s1).unwrap();
        let e1 = Presentation::new(s1, vec![f1], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let s2 = JetSpace::simple(&["x", "t"], &["u", "v", "w"], &[]).unwrap();
        let f2 = ["u[1,0] - v", "v[1,0] - w", "w[1,0] + 6*u*v - u[0,1]"]
            .iter()
            .map(|t| parse(t, &s2).unwrap())
            .collect();
        let leads = vec![
            (0, MultiIndex::from_slice(&[1, 0])),
            (1, MultiIndex::from_slice(&[1, 0])),
            (2, MultiIndex::from_slice(&[1, 0])),
        ];
        (e1, Presentation::new(s2, f2, leads, true).unwrap())
    }

    fn witness(s: &crate::jetalg::JetSpace) -> EquivalenceWitness {
        EquivalenceWitness {
            alpha: op(s, &[&["1"], &["D[1,0]"], &["D[2,0]"]]),
            beta: op(s, &[&["1", "0", "0"]]),
            alpha_prime: op(s, &[&["0"], &["0"], &["-1"]]),
            beta_prime: op(s, &[&["-D[2,0] - 6*u", "-D[1,0]", "-1"]]),
            s1: CDiffOp::zero(1, 1),
            s2: op(s, &[&["0", "0", "0"], &["1", "0", "0"], &["D[1,0]", "1", "0"]]),
            sigma: vec![parse("u", s).unwrap()],
        }
    }

    #[test]
    fn kdv_scalar_and_three_component() {
        let (e1, e2) = presentations();
        let checks = verify_equivalence(&e1, &e2, &witness(e2.space())).unwrap();
        assert_eq!(checks.len(), 4);
        for c in &checks {
            assert!(c.holds(), "{}: {:?}", c.name, c.residual.render(e2.space()));
        }
    }

    #[test]
    fn perturbed_witness_fails() {
        let (e1, e2) = presentations();
        let mut w = witness(e2.space());
        w.s2 = CDiffOp::zero(3, 3);
        let checks = verify_equivalence(&e1, &e2, &w).unwrap();
        assert!(checks[0].holds() && checks[1].holds() && checks[2].holds());
        assert!(!checks[3].holds());
    }
}
