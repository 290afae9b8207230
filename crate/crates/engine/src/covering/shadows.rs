use crate::analysis::{solve_linear, Ansatz};
use crate::cdiff::{linearize_on, CDiffOp};
use crate::error::{Error, Result};
use crate::jetalg::{Calculus, DiffExpr, Field, Monomial, Var};

use super::Covering;

/// ℓ_F for the base equation, to be applied with lifted derivatives.
pub fn lifted_linearization(c: &Covering) -> CDiffOp {
    let deps: Vec<usize> = (0..c.base_m()).collect();
    linearize_on(c.base_components(), &deps)
}

/// reduce(ℓ̃_F(φ)); φ is a shadow iff every entry vanishes.
pub fn verify_shadow(c: &Covering, phi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    if phi.len() != c.base_m() {
        return Err(Error::Shape(format!("shadow needs {} components", c.base_m())));
    }
    let phi: Vec<DiffExpr> = phi.iter().map(|e| c.normalize(e)).collect::<Result<_>>()?;
    lifted_linearization(c).apply(c, &phi)
}

/// The covering over `c` with new nonlocals w̃^j,
/// D̃_i(w̃^j) = ℓ̃_{X_i^j}(φ) + Σ_α ∂X_i^j/∂w^α · w̃^α.
pub fn reconstruct_step(c: &Covering, phi: &[DiffExpr]) -> Result<Covering> {
    if phi.len() != c.base_m() {
        return Err(Error::Shape(format!("shadow needs {} components", c.base_m())));
    }
    let space = c.space();
    let old = space.nonlocal().len();
    let mut taken = space.clone();
    let mut fields = Vec::with_capacity(old);
    for f in space.nonlocal() {
        let name = taken.fresh_name(&format!("{}_s", f.name));
        let field = Field { name, odd: f.odd };
        taken = taken.with_nonlocals(vec![field.clone()])?.0;
        fields.push(field);
    }
    let deps: Vec<usize> = (0..c.base_m()).collect();
    let phi: Vec<DiffExpr> = phi.iter().map(|e| c.normalize(e)).collect::<Result<_>>()?;
    let mut x = Vec::with_capacity(old);
    for row in c.fields() {
        let mut out = Vec::with_capacity(row.len());
        for xi in row {
            let mut e = crate::jetalg::ev_apply_on(c, &phi, &deps, xi)?;
            for a in 0..old {
                let d = xi.partial(&Var::Nonlocal(a as u8));
                if !d.is_zero() {
                    e += &d * &DiffExpr::var(Var::Nonlocal((old + a) as u8), fields[a].odd);
                }
            }
            out.push(e);
        }
        x.push(out);
    }
    let next = c.extend(fields, x)?;
    let report = next.verify_flat()?;
    if !report.is_flat() {
        return Err(Error::Covering("reconstructed covering is not flat".into()));
    }
    Ok(next)
}

fn linear_in(e: &DiffExpr, slot: &dyn Fn(&Var) -> bool) -> bool {
    e.terms().all(|(m, _)| {
        let d: i32 = m.even().iter().filter(|(v, _)| slot(v)).map(|(_, k)| *k).sum::<i32>()
            + m.odd().iter().filter(|v| slot(v)).count() as i32;
        d == 1
    })
}

/// Nonlocals whose defining fields are homogeneous linear in the fiber
/// variables and in earlier such nonlocals.
pub fn fiber_linear_nonlocals(c: &Covering) -> Vec<usize> {
    let fibers = c.fibers().to_vec();
    let mut out: Vec<usize> = Vec::new();
    for (w, row) in c.fields().iter().enumerate() {
        let known = out.clone();
        let slot = |v: &Var| match v {
            Var::Jet(j, _) => fibers.contains(&(*j as usize)),
            Var::Nonlocal(a) => known.contains(&(*a as usize)),
            _ => false,
        };
        if !fibers.is_empty() && row.iter().all(|e| e.is_zero() || linear_in(e, &slot)) {
            out.push(w);
        }
    }
    out
}

/// All φ, each component linear in the fiber variables (jets up to the ansatz
/// order and fiber-linear nonlocals) with polynomial coefficients in the base
/// variables, such that reduce(target(φ)) = 0 with lifted derivatives.
pub fn solve_fiberlinear(c: &Covering, ansatz: &Ansatz, target: &CDiffOp) -> Result<Vec<Vec<DiffExpr>>> {
    if c.fibers().is_empty() {
        return Err(Error::Covering("covering has no fiber variables".into()));
    }
    let space = c.space();
    let base_deps: Vec<usize> = (0..c.base_m()).collect();
    let internal = c.system().internal_jets(&base_deps, ansatz.max_order);
    let coef_vars: Vec<Var> = ansatz
        .variables(space, &internal)?
        .into_iter()
        .filter(|v| !matches!(v, Var::Nonlocal(_)))
        .collect();
    let coefs = ansatz.monomials(space, &coef_vars);
    let mut slots: Vec<Var> = c.system().internal_jets(c.fibers(), ansatz.max_order);
    slots.extend(fiber_linear_nonlocals(c).into_iter().map(|w| Var::Nonlocal(w as u8)));
    let mut mons = Vec::new();
    for s in &slots {
        let sm = if space.is_odd(s) { Monomial::odd_var(*s) } else { Monomial::even_var(*s, 1) };
        for m in &coefs {
            if let Some((p, _)) = m.mul(&sm) {
                mons.push(p);
            }
        }
    }
    let per_comp = vec![mons; target.cols()];
    solve_linear(&per_comp, |phi| target.apply(c, phi))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::span_contains;
    use crate::covering::{tangent_covering, tests::kdv, Covering};
    use crate::equation::Presentation;
    use crate::jetalg::{parse, JetSpace, MultiIndex};

    fn w_covering() -> Covering {
        let e = kdv();
        let c = Covering::trivial(&e);
        let s = c.extended_space(&[Field::even("w")]).unwrap();
        c.extend(
            vec![Field::even("w")],
            vec![vec![parse("u", &s).unwrap(), parse("3*u^2 + u[2,0]", &s).unwrap()]],
        )
        .unwrap()
    }

    #[test]
    fn nonlocal_shadow_of_kdv() {
        let c = w_covering();
        let s = c.space().clone();
        let phi = parse(
            "t*u[5,0] + (10*t*u + 1/3*x)*u[3,0] + 4*(5*t*u[1,0] + 1/3)*u[2,0] + 2*(15*t*u^2 + x*u + 1/3*w)*u[1,0] + 8/3*u^2",
            &s,
        )
        .unwrap();
        assert!(verify_shadow(&c, &[phi]).unwrap().iter().all(DiffExpr::is_zero));
        assert!(verify_shadow(&c, &[parse("u[1,0]", &s).unwrap()]).unwrap()[0].is_zero());
        assert!(!verify_shadow(&c, &[parse("w", &s).unwrap()]).unwrap()[0].is_zero());
    }

    #[test]
    fn reconstruction_of_translation() {
        let c = w_covering();
        let s = c.space().clone();
        let next = reconstruct_step(&c, &[parse("u[1,0]", &s).unwrap()]).unwrap();
        assert!(next.is_abelian());
        assert_eq!(next.space().nonlocal().len(), 2);
        assert_eq!(next.fields()[1][0], parse("u[1,0]", &s).unwrap());
    }

    #[test]
    fn heat_fiberlinear_solutions() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - u[2,0]", &s).unwrap();
        let e = Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let t = tangent_covering(&e).unwrap();
        let basis = solve_fiberlinear(&t, &Ansatz::new(1, 1), &lifted_linearization(&t)).unwrap();
        assert_eq!(basis.len(), 3);
        let ts = t.space().clone();
        for g in ["v", "v[1,0]", "2*t*v[1,0] + x*v"] {
            assert!(span_contains(&basis, &[parse(g, &ts).unwrap()]), "{g}");
        }
    }

    #[test]
    fn kdv_lenard_shadow_with_layer() {
        let e = kdv();
        let t = tangent_covering(&e).unwrap();
        let s = t.extended_space(&[Field::even("vm")]).unwrap();
        let t = t
            .extend(
                vec![Field::even("vm")],
                vec![vec![parse("v", &s).unwrap(), parse("v[2,0] + 6*u*v", &s).unwrap()]],
            )
            .unwrap();
        assert!(t.verify_flat().unwrap().is_flat());
        assert_eq!(fiber_linear_nonlocals(&t), vec![0]);
        let basis = solve_fiberlinear(&t, &Ansatz::new(2, 1), &lifted_linearization(&t)).unwrap();
        let target = parse("v[2,0] + 4*u*v + 2*u[1,0]*vm", &s).unwrap();
        assert!(span_contains(&basis, &[target]));
    }
}
