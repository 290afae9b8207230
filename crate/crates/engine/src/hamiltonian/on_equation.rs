use crate::analysis::{linearization, nabla_adjoint};
use crate::cdiff::{ell_op, linearize, pairing, CDiffOp};
use crate::equation::{adjoint_system, Presentation};
use crate::error::{Error, Result};
use crate::jetalg::{euler_all, Calculus, DiffExpr, JetSpace, MultiIndex, Q};

fn check_shape(pres: &Presentation, delta: &CDiffOp) -> Result<()> {
    let m = pres.space().m();
    let k = pres.components().len();
    if delta.rows() != m || delta.cols() != k {
        return Err(Error::Shape(format!(
            "bivector on the equation must be {m}x{k}, got {}x{}",
            delta.rows(),
            delta.cols()
        )));
    }
    Ok(())
}

/// ℓ̄_F Δ − Δ* ℓ̄_F*; Δ is a variational bivector on ℰ iff this vanishes.
pub fn verify_bivector_on_equation(pres: &Presentation, delta: &CDiffOp) -> Result<CDiffOp> {
    check_shape(pres, delta)?;
    let delta = delta.normalize(pres)?;
    let l = linearization(pres)?;
    let lhs = l.compose(pres, &delta)?;
    let rhs = delta.adjoint(pres)?.compose(pres, &l.adjoint(pres)?)?;
    lhs.sub(&rhs)
}

/// The Schouten bracket of two bivectors on ℰ, written as a bilinear form
/// Θ(a, b) in even cotangent arguments.
#[derive(Clone, Debug)]
pub struct EquationBracket {
    /// ℰ with three cotangent families a, b, c adjoined.
    pub system: Presentation,
    pub families: [Vec<usize>; 3],
    pub theta: Vec<DiffExpr>,
    /// Variational derivatives of the skew trilinear density Σ ±⟨c, Θ(a, b)⟩;
    /// empty when Θ vanishes outright.
    pub euler: Vec<DiffExpr>,
}

impl EquationBracket {
    pub fn is_trivial(&self) -> bool {
        self.euler.iter().all(DiffExpr::is_zero)
    }

    pub fn space(&self) -> &JetSpace {
        self.system.space()
    }
}

fn pad(v: &[DiffExpr], m: usize) -> Vec<DiffExpr> {
    let mut out = v.to_vec();
    out.resize(m, DiffExpr::zero());
    out
}

struct Prepared {
    delta: CDiffOp,
    m_free: CDiffOp,
}

fn prepare(pres: &Presentation, delta: &CDiffOp) -> Result<Prepared> {
    let residual = verify_bivector_on_equation(pres, delta)?;
    if !residual.is_zero() {
        return Err(Error::NoSolution("operator is not a bivector on the equation".into()));
    }
    let free = pres.free();
    let lf = linearize(pres.components(), pres.space());
    let m_free = lf
        .compose(free, delta)?
        .sub(&delta.adjoint(free)?.compose(free, &lf.adjoint(free)?)?)?;
    Ok(Prepared {
        delta: delta.normalize(pres)?,
        m_free,
    })
}

/// One half of Θ: ℓ_{Δ₂,a}(Δ₁b) − ℓ_{Δ₂,b}(Δ₁a) − Δ₂(∇₁^{*1}(a,b)).
fn half(
    pres: &Presentation,
    sys: &Presentation,
    d1: &Prepared,
    d2: &Prepared,
    a: &[DiffExpr],
    b: &[DiffExpr],
) -> Result<Vec<DiffExpr>> {
    let me = sys.space().m();
    let d1a = pad(&d1.delta.apply(sys, a)?, me);
    let d1b = pad(&d1.delta.apply(sys, b)?, me);
    let x = ell_op(sys, &d2.delta, a)?.apply(sys, &d1b)?;
    let y = ell_op(sys, &d2.delta, b)?.apply(sys, &d1a)?;
    let nab = nabla_adjoint(pres, sys, &d1.m_free, a, b)?;
    let z = d2.delta.apply(sys, &nab)?;
    Ok((0..x.len()).map(|i| &(&x[i] - &y[i]) - &z[i]).collect())
}

fn theta(
    pres: &Presentation,
    sys: &Presentation,
    p1: &Prepared,
    p2: &Prepared,
    a: &[DiffExpr],
    b: &[DiffExpr],
) -> Result<Vec<DiffExpr>> {
    let h1 = half(pres, sys, p1, p2, a, b)?;
    let h2 = half(pres, sys, p2, p1, a, b)?;
    h1.iter().zip(&h2).map(|(x, y)| sys.normalize(&(x + y))).collect()
}

/// [[Δ₁, Δ₂]] on ℰ. Both operators must be bivectors on ℰ and the system
/// must have one leading jet per dependent so that ℓ_F*(a) = 0 is orthonomic.
pub fn schouten_on_equation(pres: &Presentation, d1: &CDiffOp, d2: &CDiffOp) -> Result<EquationBracket> {
    check_shape(pres, d1)?;
    check_shape(pres, d2)?;
    let names = [("a".to_string(), false), ("b".to_string(), false), ("c".to_string(), false)];
    let (sys, ids) = adjoint_system(pres, &names)?;
    let p1 = prepare(pres, d1)?;
    let p2 = prepare(pres, d2)?;
    let fam: Vec<Vec<DiffExpr>> = ids
        .iter()
        .map(|f| f.iter().map(|&d| DiffExpr::jet(d, MultiIndex::zero(), false)).collect())
        .collect();
    let th = theta(pres, &sys, &p1, &p2, &fam[0], &fam[1])?;
    let mut euler = Vec::new();
    if th.iter().any(|e| !e.is_zero()) {
        let perms: [([usize; 3], i64); 6] = [
            ([0, 1, 2], 1),
            ([1, 2, 0], 1),
            ([2, 0, 1], 1),
            ([1, 0, 2], -1),
            ([0, 2, 1], -1),
            ([2, 1, 0], -1),
        ];
        let mut density = DiffExpr::zero();
        for (p, sign) in perms {
            let t = if p == [0, 1, 2] {
                th.clone()
            } else {
                theta(pres, &sys, &p1, &p2, &fam[p[0]], &fam[p[1]])?
            };
            let d = pairing(&fam[p[2]], &t);
            density.add_scaled(&d, &Q::from_integer(sign.into()));
        }
        euler = euler_all(&sys, &sys.normalize(&density)?)?;
    }
    let [a, b, c]: [Vec<usize>; 3] = ids.try_into().expect("three families");
    Ok(EquationBracket {
        system: sys,
        families: [a, b, c],
        theta: th,
        euler,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdiff::ScalarOp;
    use crate::jetalg::{parse, parse_operator};

    fn op(s: &JetSpace, text: &str) -> ScalarOp {
        ScalarOp::from_map(parse_operator(text, s).unwrap())
    }

    fn kdv() -> Presentation {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s).unwrap();
        Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap()
    }

    #[test]
    fn kdv_operators_on_equation() {
        let e = kdv();
        let s = e.space().clone();
        let a = CDiffOp::scalar(op(&s, "D[1,0]"));
        let b = CDiffOp::scalar(op(&s, "D[3,0] + 4*u*D[1,0] + 2*u[1,0]"));
        assert!(verify_bivector_on_equation(&e, &a).unwrap().is_zero());
        assert!(verify_bivector_on_equation(&e, &b).unwrap().is_zero());
        assert!(schouten_on_equation(&e, &a, &a).unwrap().is_trivial());
        assert!(schouten_on_equation(&e, &b, &b).unwrap().is_trivial());
        assert!(schouten_on_equation(&e, &a, &b).unwrap().is_trivial());
    }

    #[test]
    fn stationary_equation_detects_non_hamiltonian() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1]", &s).unwrap();
        let e = Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let bad = CDiffOp::scalar(op(&s, "2*u[1,0]*D[1,0] + u[2,0]"));
        assert!(verify_bivector_on_equation(&e, &bad).unwrap().is_zero());
        let br = schouten_on_equation(&e, &bad, &bad).unwrap();
        assert!(!br.is_trivial());
        let b = CDiffOp::scalar(op(&s, "D[3,0] + 4*u*D[1,0] + 2*u[1,0]"));
        assert!(schouten_on_equation(&e, &b, &b).unwrap().is_trivial());
    }

    #[test]
    fn zero_bivector_is_trivial() {
        let e = kdv();
        let z = CDiffOp::zero(1, 1);
        let br = schouten_on_equation(&e, &z, &z).unwrap();
        assert!(br.is_trivial());
        assert!(br.theta.iter().all(DiffExpr::is_zero));
    }

    fn ops(s: &JetSpace, rows: &[&[&str]]) -> CDiffOp {
        CDiffOp::from_entries(rows.iter().map(|r| r.iter().map(|t| op(s, t)).collect()).collect()).unwrap()
    }

    #[test]
    fn two_component_camassa_holm() {
        let s = JetSpace::simple(&["x", "t"], &["u", "m"], &[]).unwrap();
        let f1 = parse("m[0,1] + u*m[1,0] + 2*u[1,0]*m", &s).unwrap();
        let f2 = parse("m - u + u[2,0]", &s).unwrap();
        let e = Presentation::new(
            s.clone(),
            vec![f1, f2],
            vec![(1, MultiIndex::from_slice(&[0, 1])), (0, MultiIndex::from_slice(&[2, 0]))],
            true,
        )
        .unwrap();
        let a1 = ops(&s, &[&["D[1,0]", "0"], &["D[1,0] - D[3,0]", "0"]]);
        let a2 = ops(&s, &[&["0", "-1"], &["2*m*D[1,0] + m[1,0]", "0"]]);
        assert!(verify_bivector_on_equation(&e, &a1).unwrap().is_zero());
        assert!(verify_bivector_on_equation(&e, &a2).unwrap().is_zero());
        assert!(schouten_on_equation(&e, &a1, &a2).unwrap().is_trivial());
    }

    #[test]
    fn kdv6_deformation() {
        let s = JetSpace::simple(&["x", "t"], &["v", "w"], &[]).unwrap();
        let f1 = parse("v[0,1] + v[3,0] + 12*v*v[1,0] - w[1,0]", &s).unwrap();
        let f2 = parse("-w[3,0] - 8*v*w[1,0] - 4*w*v[1,0]", &s).unwrap();
        let e = Presentation::new(
            s.clone(),
            vec![f1, f2],
            vec![(0, MultiIndex::from_slice(&[0, 1])), (1, MultiIndex::from_slice(&[3, 0]))],
            true,
        )
        .unwrap();
        let a1 = "D[1,0]";
        let a2 = "D[3,0] + 8*v*D[1,0] + 4*v[1,0]";
        // adjoint of the v-linearization of F + A1*(w) + A2*(w)
        let l = "-D[0,1] - D[3,0] - 12*v*D[1,0] + 4*w*D[1,0] - 4*w[1,0]";
        let nl = "D[0,1] + D[3,0] + 12*v*D[1,0] - 4*w*D[1,0] + 4*w[1,0]";
        let na1 = "-D[1,0]";
        let na2 = "-D[3,0] - 8*v*D[1,0] - 4*v[1,0]";
        let t1 = ops(&s, &[&[a1, na1], &["0", l]]);
        let t2 = ops(&s, &[&[a2, na2], &[nl, "0"]]);
        assert!(verify_bivector_on_equation(&e, &t1).unwrap().is_zero());
        assert!(verify_bivector_on_equation(&e, &t2).unwrap().is_zero());
        assert!(schouten_on_equation(&e, &t1, &t1).unwrap().is_trivial());
        assert!(schouten_on_equation(&e, &t1, &t2).unwrap().is_trivial());
    }

    #[test]
    fn weingarten_operators() {
        let s = JetSpace::simple(&["x", "y"], &["z"], &[]).unwrap();
        let f = parse("z[0,2] - z[2,0]*z^-2 + 2*z[1,0]^2*z^-3 + 2", &s).unwrap();
        let e = Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[0, 2]))], true).unwrap();
        let a = CDiffOp::scalar(op(&s, "D[2,0]"));
        let b = CDiffOp::scalar(op(&s, "2*z*D[1,1] - z[0,1]*D[1,0] + z[1,0]*D[0,1]"));
        assert!(verify_bivector_on_equation(&e, &a).unwrap().is_zero());
        assert!(verify_bivector_on_equation(&e, &b).unwrap().is_zero());
    }

    #[test]
    fn camassa_holm_pair_is_compatible() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - u[2,1] - u*u[3,0] - 2*u[1,0]*u[2,0] + 3*u*u[1,0]", &s).unwrap();
        let e = Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[2, 1]))], true).unwrap();
        let a1 = CDiffOp::scalar(op(&s, "D[1,0]"));
        let a2 = CDiffOp::scalar(op(&s, "-D[0,1] - u*D[1,0] + u[1,0]"));
        assert!(verify_bivector_on_equation(&e, &a1).unwrap().is_zero());
        assert!(verify_bivector_on_equation(&e, &a2).unwrap().is_zero());
        assert!(schouten_on_equation(&e, &a1, &a2).unwrap().is_trivial());
    }
}
