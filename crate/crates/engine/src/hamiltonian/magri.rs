use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::analysis::Ansatz;
use crate::cdiff::{helmholtz, CDiffOp};
use crate::error::{Error, Result};
use crate::jetalg::{
    canonical_density, euler_all, homotopy_density, invert_x, Calculus, DiffExpr, FreeJets, JetSpace, Monomial,
    MultiIndex, Var, Q,
};
use crate::linalg::{solve_affine, SparseRow};

/// Densities ω₀, ω₁, … with A(δω_{s+1}) = B(δω_s) and the flows A(δω_s).
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub densities: Vec<DiffExpr>,
    pub flows: Vec<Vec<DiffExpr>>,
}

/// c with A = c·D_dir, if A has that form.
fn scaled_first_derivative(a: &CDiffOp, n: usize) -> Option<(Q, usize)> {
    if a.rows() != 1 || a.cols() != 1 {
        return None;
    }
    let coeffs = a.entry(0, 0).coeffs();
    if coeffs.len() != 1 {
        return None;
    }
    let (idx, c) = coeffs.iter().next()?;
    if idx.order() != 1 {
        return None;
    }
    let dir = (0..n).find(|&i| idx.get(i) == 1)?;
    Some((c.as_constant()?, dir))
}

/// Solves A(ψ) = φ for ψ within the ansatz.
pub fn solve_operator(calc: &FreeJets, a: &CDiffOp, phi: &[DiffExpr], ansatz: &Ansatz) -> Result<Vec<DiffExpr>> {
    let space = calc.space();
    if let Some((c, dir)) = scaled_first_derivative(a, space.n()) {
        let prim = invert_x(&phi[0], dir, space)?;
        return Ok(vec![prim.scale(&c.recip())]);
    }
    let m = a.cols();
    let mut jets = Vec::new();
    for dep in 0..space.m() {
        for k in 0..=ansatz.max_order {
            for idx in MultiIndex::of_order(space.n(), k) {
                jets.push(Var::jet(dep, idx));
            }
        }
    }
    let mut vars = ansatz.variables(space, &jets)?;
    vars.extend((0..space.parameters().len()).map(|k| Var::Param(k as u8)));
    let mons: Vec<Monomial> = ansatz.monomials(space, &vars);
    let unknowns: Vec<(usize, &Monomial)> = (0..m).flat_map(|j| mons.iter().map(move |mo| (j, mo))).collect();
    if unknowns.is_empty() {
        return Err(Error::EmptyAnsatz);
    }
    let mut rows: BTreeMap<(usize, Monomial), (SparseRow, Q)> = BTreeMap::new();
    for (col, (j, mo)) in unknowns.iter().enumerate() {
        let mut psi = vec![DiffExpr::zero(); m];
        psi[*j] = DiffExpr::term((*mo).clone(), Q::one());
        for (r, e) in a.apply(calc, &psi)?.iter().enumerate() {
            for (mm, c) in e.terms() {
                rows.entry((r, mm.clone())).or_insert_with(|| (SparseRow::new(), Q::zero())).0.insert(col, c.clone());
            }
        }
    }
    for (r, e) in phi.iter().enumerate() {
        for (mm, c) in e.terms() {
            rows.entry((r, mm.clone())).or_insert_with(|| (SparseRow::new(), Q::zero())).1 = c.clone();
        }
    }
    let (sol, _) = solve_affine(rows.into_values(), unknowns.len())
        .ok_or_else(|| Error::NoSolution("A(ψ) = φ has no solution within the ansatz".into()))?;
    let mut psi = vec![DiffExpr::zero(); m];
    for (col, c) in sol.iter().enumerate() {
        if !c.is_zero() {
            let (j, mo) = unknowns[col];
            psi[j].add_term(mo.clone(), c.clone());
        }
    }
    Ok(psi)
}

/// Returns ω′ with A(δω′) = B(δω).
pub fn magri_step(space: &JetSpace, a: &CDiffOp, b: &CDiffOp, w: &DiffExpr, ansatz: &Ansatz) -> Result<DiffExpr> {
    let calc = FreeJets::new(space.clone());
    let phi = b.apply(&calc, &euler_all(&calc, w)?)?;
    let psi = solve_operator(&calc, a, &phi, ansatz)?;
    if !helmholtz(&calc, &psi)?.is_zero() {
        return Err(Error::Helmholtz("the solution of A(ψ) = B(δω) is not a variational derivative".into()));
    }
    let l = homotopy_density(space, &psi)?;
    if space.n() == 1 {
        canonical_density(&l, 0, space)
    } else {
        Ok(l)
    }
}

pub fn magri(space: &JetSpace, a: &CDiffOp, b: &CDiffOp, w0: &DiffExpr, steps: usize, ansatz: &Ansatz) -> Result<Hierarchy> {
    let calc = FreeJets::new(space.clone());
    let mut densities = vec![w0.clone()];
    for _ in 0..steps {
        let next = magri_step(space, a, b, densities.last().expect("nonempty"), ansatz)?;
        densities.push(next);
    }
    let flows = densities
        .iter()
        .map(|w| a.apply(&calc, &euler_all(&calc, w)?))
        .collect::<Result<_>>()?;
    Ok(Hierarchy { densities, flows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdiff::ScalarOp;
    use crate::hamiltonian::poisson_bracket;
    use crate::jetalg::{parse, parse_operator};

    fn op(s: &JetSpace, text: &str) -> CDiffOp {
        CDiffOp::scalar(ScalarOp::from_map(parse_operator(text, s).unwrap()))
    }

    #[test]
    fn kdv_hierarchy() {
        let s = JetSpace::simple(&["x"], &["u"], &[]).unwrap();
        let a = op(&s, "D[1]");
        let b = op(&s, "D[3] + 4*u*D[1] + 2*u[1]");
        let p = |t: &str| parse(t, &s).unwrap();
        let h = magri(&s, &a, &b, &p("1/2*u"), 3, &Ansatz::new(4, 4)).unwrap();
        assert_eq!(h.densities[1], p("1/2*u^2"));
        assert_eq!(h.densities[2], p("u^3 - 1/2*u[1]^2"));
        assert_eq!(h.flows[1], vec![p("u[1]")]);
        assert_eq!(h.flows[2], vec![p("6*u*u[1] + u[3]")]);
        assert_eq!(h.flows[3], vec![p("u[5] + 10*u*u[3] + 20*u[1]*u[2] + 30*u^2*u[1]")]);
        let c = FreeJets::new(s.clone());
        for x in &h.densities {
            for y in &h.densities {
                assert!(poisson_bracket(&c, x, y, &a).unwrap().trivial);
                assert!(poisson_bracket(&c, x, y, &b).unwrap().trivial);
            }
        }
    }

    #[test]
    fn boussinesq_step_by_ansatz() {
        let s = JetSpace::simple(&["x"], &["u", "v"], &["sigma"]).unwrap();
        let e = |t: &str| crate::cdiff::ScalarOp::from_map(parse_operator(t, &s).unwrap());
        let a = CDiffOp::from_entries(vec![vec![e("0"), e("D[1]")], vec![e("D[1]"), e("0")]]).unwrap();
        let b = CDiffOp::from_entries(vec![
            vec![e("sigma*D[3] + u*D[1] + 1/2*u[1]"), e("1/2*v*D[1]")],
            vec![e("1/2*v*D[1] + 1/2*v[1]"), e("D[1]")],
        ])
        .unwrap();
        let w = magri_step(&s, &a, &b, &parse("u*v", &s).unwrap(), &Ansatz::new(2, 3)).unwrap();
        let c = FreeJets::new(s.clone());
        let lhs = a.apply(&c, &euler_all(&c, &w).unwrap()).unwrap();
        let rhs = b.apply(&c, &euler_all(&c, &parse("u*v", &s).unwrap()).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }
}
