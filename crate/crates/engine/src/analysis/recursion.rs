use crate::cdiff::{lie_derivative, nijenhuis_torsion, PseudoOp};
use crate::equation::Presentation;
use crate::error::Result;
use crate::jetalg::DiffExpr;

use super::symmetries::reduce_all;

/// R(φ) on ℰ, with one layer of D⁻¹.
pub fn recursion_apply(pres: &Presentation, r: &PseudoOp, phi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    r.apply(pres, &reduce_all(pres, phi)?)
}

/// ½[[R,R]](φ₁, φ₂) evaluated on ℰ.
pub fn torsion(pres: &Presentation, r: &PseudoOp, phi1: &[DiffExpr], phi2: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    nijenhuis_torsion(pres, r, &reduce_all(pres, phi1)?, &reduce_all(pres, phi2)?)
}

/// L_φ(R) evaluated on each argument.
pub fn lie_derivative_recursion(
    pres: &Presentation,
    phi: &[DiffExpr],
    r: &PseudoOp,
    args: &[Vec<DiffExpr>],
) -> Result<Vec<Vec<DiffExpr>>> {
    let l = lie_derivative(pres, &reduce_all(pres, phi)?, r)?;
    args.iter().map(|a| l.apply(pres, &reduce_all(pres, a)?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdiff::{CDiffOp, ScalarOp, TailTerm};
    use crate::jetalg::{parse, parse_operator, JetSpace, MultiIndex};

    fn kdv() -> Presentation {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s).unwrap();
        Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap()
    }

    fn lenard(e: &Presentation) -> PseudoOp {
        let s = e.space();
        let local = CDiffOp::scalar(ScalarOp::from_map(parse_operator("D[2,0] + 4*u", s).unwrap()));
        let tail = vec![TailTerm {
            a: vec![parse("2*u[1,0]", s).unwrap()],
            b: CDiffOp::identity(1),
        }];
        PseudoOp::new(local, tail, 0).unwrap()
    }

    #[test]
    fn lenard_is_nijenhuis_on_kdv() {
        let e = kdv();
        let p = |t: &str| parse(t, e.space()).unwrap();
        let r = lenard(&e);
        let t = torsion(&e, &r, &[p("u[1,0]")], &[p("6*u*u[1,0] + u[3,0]")]).unwrap();
        assert!(t[0].is_zero());
    }

    #[test]
    fn galilean_lie_derivative_nonzero() {
        let e = kdv();
        let p = |t: &str| parse(t, e.space()).unwrap();
        let r = lenard(&e);
        let z = lie_derivative_recursion(&e, &[p("u[1,0]")], &r, &[vec![p("u[1,0]")], vec![p("1")]]).unwrap();
        assert!(z.iter().all(|v| v[0].is_zero()));
        let g = lie_derivative_recursion(&e, &[p("6*t*u[1,0] + 1")], &r, &[vec![p("u[1,0]")]]).unwrap();
        assert!(!g[0][0].is_zero());
    }

    #[test]
    fn galilean_to_scaling() {
        let e = kdv();
        let p = |t: &str| parse(t, e.space()).unwrap();
        let img = recursion_apply(&e, &lenard(&e), &[p("6*t*u[1,0] + 1")]).unwrap();
        let want = p("2*x*u[1,0] + 6*t*(6*u*u[1,0] + u[3,0]) + 4*u");
        assert_eq!(img[0], want);
    }
}
