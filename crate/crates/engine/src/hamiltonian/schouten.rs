use crate::cdiff::{ell_op, linearize, CDiffOp};
use crate::error::{Error, Result};
use crate::jetalg::{euler_all, is_variationally_trivial, Calculus, DiffExpr};

/// A variational multivector of degree ≤ 2 in operator form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Multivector {
    Density(DiffExpr),
    Vector(Vec<DiffExpr>),
    Bivector(CDiffOp),
}

impl Multivector {
    pub fn degree(&self) -> usize {
        match self {
            Multivector::Density(_) => 0,
            Multivector::Vector(_) => 1,
            Multivector::Bivector(_) => 2,
        }
    }
}

/// Value of a bracket evaluated on its arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BracketValue {
    Density(DiffExpr),
    Vector(Vec<DiffExpr>),
}

fn sub(a: &[DiffExpr], b: &[DiffExpr]) -> Vec<DiffExpr> {
    a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
}

fn add(a: &[DiffExpr], b: &[DiffExpr]) -> Vec<DiffExpr> {
    a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
}

/// ℓ_{M,ψ…}(χ) = 𝐄_χ(M)(ψ…).
fn ell<C: Calculus + ?Sized>(calc: &C, m: &Multivector, args: &[&[DiffExpr]], chi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    match m {
        Multivector::Vector(phi) => linearize(phi, calc.space()).apply(calc, chi),
        Multivector::Bivector(a) => ell_op(calc, a, args[0])?.apply(calc, chi),
        Multivector::Density(_) => Err(Error::Unsupported("linearization of a density in a bracket".into())),
    }
}

/// ℓ*_{M,ψ…}(ψ').
fn ell_star<C: Calculus + ?Sized>(calc: &C, m: &Multivector, args: &[&[DiffExpr]], psi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    match m {
        Multivector::Vector(phi) => linearize(phi, calc.space()).adjoint(calc)?.apply(calc, psi),
        Multivector::Bivector(a) => ell_op(calc, a, args[0])?.adjoint(calc)?.apply(calc, psi),
        Multivector::Density(_) => Err(Error::Unsupported("linearization of a density in a bracket".into())),
    }
}

fn eval<C: Calculus + ?Sized>(calc: &C, m: &Multivector, args: &[&[DiffExpr]]) -> Result<Vec<DiffExpr>> {
    match m {
        Multivector::Vector(phi) => phi.iter().map(|e| calc.normalize(e)).collect(),
        Multivector::Bivector(a) => a.apply(calc, args[0]),
        Multivector::Density(_) => Err(Error::Unsupported("evaluation of a density".into())),
    }
}

/// [[A, B]](ψ₁, …, ψ_{p+q−2}) for multivectors of degree ≤ 2, evaluated
/// literally by the un-shuffle formula; densities enter through δ.
pub fn schouten_direct<C: Calculus + ?Sized>(
    calc: &C,
    a: &Multivector,
    b: &Multivector,
    psi: &[Vec<DiffExpr>],
) -> Result<BracketValue> {
    let (p, q) = (a.degree(), b.degree());
    let arity = (p + q).saturating_sub(2);
    if psi.len() != arity {
        return Err(Error::Shape(format!(
            "bracket of degrees {p} and {q} takes {arity} arguments, got {}",
            psi.len()
        )));
    }
    match (a, b) {
        (Multivector::Density(_), Multivector::Density(_)) => Ok(BracketValue::Density(DiffExpr::zero())),
        (_, Multivector::Density(w)) => {
            let grad = euler_all(calc, w)?;
            match a {
                Multivector::Vector(phi) => {
                    let mut acc = DiffExpr::zero();
                    for (x, y) in phi.iter().zip(grad.iter()) {
                        acc += x * y;
                    }
                    Ok(BracketValue::Density(calc.normalize(&acc)?))
                }
                Multivector::Bivector(op) => Ok(BracketValue::Vector(op.apply(calc, &grad)?)),
                Multivector::Density(_) => unreachable!(),
            }
        }
        (Multivector::Density(_), _) => {
            let v = schouten_direct(calc, b, a, psi)?;
            // [[ω, B]] = −(−1)^{(q−1)}[[B, ω]]
            Ok(if q % 2 == 1 {
                v
            } else {
                match v {
                    BracketValue::Density(d) => BracketValue::Density(-d),
                    BracketValue::Vector(v) => BracketValue::Vector(v.into_iter().map(|e| -e).collect()),
                }
            })
        }
        (Multivector::Vector(_), Multivector::Vector(_)) => {
            let t1 = ell(calc, b, &[], &eval(calc, a, &[])?)?;
            let t3 = ell(calc, a, &[], &eval(calc, b, &[])?)?;
            Ok(BracketValue::Vector(sub(&t1, &t3)))
        }
        (Multivector::Bivector(_), Multivector::Vector(_)) => {
            let s = &psi[0][..];
            let t1 = ell(calc, b, &[], &eval(calc, a, &[s])?)?;
            let t3 = ell(calc, a, &[s], &eval(calc, b, &[])?)?;
            let t4 = eval(calc, a, &[&ell_star(calc, b, &[], s)?])?;
            Ok(BracketValue::Vector(add(&sub(&t1, &t3), &t4)))
        }
        (Multivector::Vector(_), Multivector::Bivector(_)) => {
            let s = &psi[0][..];
            let t1 = ell(calc, b, &[s], &eval(calc, a, &[])?)?;
            let t2 = eval(calc, b, &[&ell_star(calc, a, &[], s)?])?;
            let t3 = ell(calc, a, &[], &eval(calc, b, &[s])?)?;
            Ok(BracketValue::Vector(sub(&sub(&t1, &t2), &t3)))
        }
        (Multivector::Bivector(_), Multivector::Bivector(_)) => {
            let (s1, s2) = (&psi[0][..], &psi[1][..]);
            let t1 = sub(
                &ell(calc, b, &[s1], &eval(calc, a, &[s2])?)?,
                &ell(calc, b, &[s2], &eval(calc, a, &[s1])?)?,
            );
            let t2 = eval(calc, b, &[&ell_star(calc, a, &[s1], s2)?])?;
            let t3 = sub(
                &ell(calc, a, &[s1], &eval(calc, b, &[s2])?)?,
                &ell(calc, a, &[s2], &eval(calc, b, &[s1])?)?,
            );
            let t4 = eval(calc, a, &[&ell_star(calc, b, &[s1], s2)?])?;
            let v = add(&add(&t1, &t2), &add(&t3, &t4));
            Ok(BracketValue::Vector(v.iter().map(|e| calc.normalize(e)).collect::<Result<_>>()?))
        }
    }
}

/// ⟨[[A, B]](ψ₁, ψ₂), ψ₃⟩ is variationally trivial.
pub fn trivial_on_triple<C: Calculus + ?Sized>(
    calc: &C,
    a: &CDiffOp,
    b: &CDiffOp,
    psi: [&[DiffExpr]; 3],
) -> Result<bool> {
    let v = schouten_direct(
        calc,
        &Multivector::Bivector(a.clone()),
        &Multivector::Bivector(b.clone()),
        &[psi[0].to_vec(), psi[1].to_vec()],
    )?;
    let BracketValue::Vector(v) = v else { unreachable!() };
    let mut density = DiffExpr::zero();
    for (x, y) in v.iter().zip(psi[2].iter()) {
        density += x * y;
    }
    is_variationally_trivial(calc, &density)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoissonBracket {
    pub density: DiffExpr,
    pub trivial: bool,
}

/// {ω, ω′}_A = ⟨A(δω), δω′⟩.
pub fn poisson_bracket<C: Calculus + ?Sized>(calc: &C, w1: &DiffExpr, w2: &DiffExpr, a: &CDiffOp) -> Result<PoissonBracket> {
    let flow = a.apply(calc, &euler_all(calc, w1)?)?;
    let g2 = euler_all(calc, w2)?;
    let mut density = DiffExpr::zero();
    for (x, y) in flow.iter().zip(g2.iter()) {
        density += x * y;
    }
    let density = calc.normalize(&density)?;
    let trivial = is_variationally_trivial(calc, &density)?;
    Ok(PoissonBracket { density, trivial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdiff::{jacobi, ScalarOp};
    use crate::jetalg::{parse, parse_operator, FreeJets, JetSpace};

    fn setup() -> (JetSpace, FreeJets) {
        let s = JetSpace::simple(&["x"], &["u"], &[]).unwrap();
        (s.clone(), FreeJets::new(s))
    }

    fn op(s: &JetSpace, text: &str) -> CDiffOp {
        CDiffOp::scalar(ScalarOp::from_map(parse_operator(text, s).unwrap()))
    }

    #[test]
    fn vector_bracket_is_jacobi() {
        let (s, c) = setup();
        let f = parse("u[1]", &s).unwrap();
        let g = parse("u*u[1]", &s).unwrap();
        let v = schouten_direct(&c, &Multivector::Vector(vec![f.clone()]), &Multivector::Vector(vec![g.clone()]), &[]).unwrap();
        assert_eq!(v, BracketValue::Vector(jacobi(&c, &[f], &[g]).unwrap()));
    }

    #[test]
    fn bivector_on_density() {
        let (s, c) = setup();
        let a = op(&s, "D[1]");
        let w = parse("1/2*u^2", &s).unwrap();
        let v = schouten_direct(&c, &Multivector::Bivector(a), &Multivector::Density(w), &[]).unwrap();
        assert_eq!(v, BracketValue::Vector(vec![parse("u[1]", &s).unwrap()]));
    }

    #[test]
    fn kdv_second_structure_self_bracket() {
        let (s, c) = setup();
        let b = op(&s, "D[3] + 4*u*D[1] + 2*u[1]");
        let grads: Vec<DiffExpr> = ["1", "u", "3*u^2 + u[2]"].iter().map(|t| parse(t, &s).unwrap()).collect();
        for x in &grads {
            for y in &grads {
                for z in &grads {
                    assert!(trivial_on_triple(&c, &b, &b, [std::slice::from_ref(x), std::slice::from_ref(y), std::slice::from_ref(z)]).unwrap());
                }
            }
        }
        let bad = op(&s, "2*u[1]*D[1] + u[2]");
        let mut any = false;
        for x in &grads {
            for y in &grads {
                for z in &grads {
                    any |= !trivial_on_triple(&c, &bad, &bad, [std::slice::from_ref(x), std::slice::from_ref(y), std::slice::from_ref(z)]).unwrap();
                }
            }
        }
        assert!(any);
    }

    #[test]
    fn poisson_examples() {
        let (s, c) = setup();
        let a = op(&s, "D[1]");
        let p = |t: &str| parse(t, &s).unwrap();
        assert!(poisson_bracket(&c, &p("1/2*u^2"), &p("1/2*u"), &a).unwrap().trivial);
        assert!(poisson_bracket(&c, &p("u^3 - 1/2*u[1]^2"), &p("u^3 - 1/2*u[1]^2"), &a).unwrap().trivial);
    }
}
