use crate::error::{Error, Result};
use crate::jetalg::{binom, ev_apply, invert_x, q, Calculus, DiffExpr, JetSpace, MultiIndex};

use super::op::{CDiffOp, ScalarOp};

/// One summand a ∘ D⁻¹ ∘ b of the nonlocal tail; `a` is a column of
/// functions and `b` a row operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailTerm {
    pub a: Vec<DiffExpr>,
    pub b: CDiffOp,
}

/// local + Σ a_α D_x⁻¹ b_α with a single layer of inversion in direction `dir`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoOp {
    pub local: CDiffOp,
    pub tail: Vec<TailTerm>,
    pub dir: usize,
}

fn pure_power(idx: &MultiIndex, dir: usize, n: usize) -> Result<usize> {
    let k = idx.get(dir) as usize;
    if idx.order() != k {
        return Err(Error::Unsupported(format!(
            "pseudo-differential algebra only in direction {dir} (n = {n})"
        )));
    }
    Ok(k)
}

impl PseudoOp {
    pub fn local(op: CDiffOp, dir: usize) -> Self {
        PseudoOp {
            local: op,
            tail: Vec::new(),
            dir,
        }
    }

    pub fn new(local: CDiffOp, tail: Vec<TailTerm>, dir: usize) -> Result<Self> {
        for t in &tail {
            if t.a.len() != local.rows() || t.b.rows() != 1 || t.b.cols() != local.cols() {
                return Err(Error::Shape("tail term does not match the local part".into()));
            }
        }
        let mut p = PseudoOp { local, tail, dir };
        p.merge_tail();
        Ok(p)
    }

    pub fn rows(&self) -> usize {
        self.local.rows()
    }

    pub fn cols(&self) -> usize {
        self.local.cols()
    }

    fn merge_tail(&mut self) {
        let mut merged: Vec<TailTerm> = Vec::new();
        for t in self.tail.drain(..) {
            if t.a.iter().all(|x| x.is_zero()) || t.b.is_zero() {
                continue;
            }
            if let Some(m) = merged.iter_mut().find(|m| m.b == t.b) {
                for (x, y) in m.a.iter_mut().zip(t.a.iter()) {
                    *x += y;
                }
            } else {
                merged.push(t);
            }
        }
        merged.retain(|t| t.a.iter().any(|x| !x.is_zero()));
        self.tail = merged;
    }

    /// R(φ): each tail term integrates the normalized b(φ) in direction `dir`.
    pub fn apply<C: Calculus + ?Sized>(&self, calc: &C, phi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
        let mut out = self.local.apply(calc, phi)?;
        for t in &self.tail {
            let integrand = calc.normalize(&t.b.apply(calc, phi)?[0])?;
            let prim = invert_x(&integrand, self.dir, calc.space())?;
            for (o, a) in out.iter_mut().zip(t.a.iter()) {
                *o += a * &prim;
            }
        }
        out.into_iter().map(|e| calc.normalize(&e)).collect()
    }

    /// 𝐄_χ(R), differentiating every coefficient.
    pub fn ev<C: Calculus + ?Sized>(&self, calc: &C, chi: &[DiffExpr]) -> Result<PseudoOp> {
        let mut tail = Vec::new();
        for t in &self.tail {
            let ea = t
                .a
                .iter()
                .map(|a| ev_apply(calc, chi, a))
                .collect::<Result<Vec<_>>>()?;
            tail.push(TailTerm {
                a: ea,
                b: t.b.clone(),
            });
            tail.push(TailTerm {
                a: t.a.clone(),
                b: t.b.ev(calc, chi)?,
            });
        }
        PseudoOp::new(self.local.ev(calc, chi)?, tail, self.dir)
    }

    pub fn add(&self, other: &PseudoOp) -> Result<PseudoOp> {
        let mut tail = self.tail.clone();
        tail.extend(other.tail.iter().cloned());
        PseudoOp::new(self.local.add(&other.local)?, tail, self.dir)
    }

    pub fn neg(&self) -> PseudoOp {
        let m1 = -q(1);
        PseudoOp {
            local: self.local.scale(&m1),
            tail: self
                .tail
                .iter()
                .map(|t| TailTerm {
                    a: t.a.iter().map(|x| -x).collect(),
                    b: t.b.clone(),
                })
                .collect(),
            dir: self.dir,
        }
    }

    /// L ∘ R for a local operator L, using
    /// D^k ∘ a D⁻¹ = D^k(a) D⁻¹ + Σ_{j≥1} C(k,j) D^{k−j}(a) D^{j−1}.
    pub fn compose_left<C: Calculus + ?Sized>(&self, calc: &C, l: &CDiffOp) -> Result<PseudoOp> {
        let n = calc.space().n();
        let dir = self.dir;
        let mut local = l.compose(calc, &self.local)?;
        let mut tail = Vec::new();
        for t in &self.tail {
            tail.push(TailTerm {
                a: l.apply(calc, &t.a)?,
                b: t.b.clone(),
            });
            let mut coeff_row = CDiffOp::zero(l.rows(), 1);
            for r in 0..l.rows() {
                let mut s = ScalarOp::zero();
                for c in 0..l.cols() {
                    for (idx, lc) in l.entry(r, c).coeffs() {
                        let k = pure_power(idx, dir, n)?;
                        let mut da = t.a[c].clone();
                        let mut derivs = vec![da.clone()];
                        for _ in 0..k {
                            da = calc.derive(&da, dir)?;
                            derivs.push(da.clone());
                        }
                        for j in 1..=k {
                            let coef = binom(k as u64, j as u64) as i64;
                            let term = (lc * &derivs[k - j]).scale(&q(coef));
                            let mut di = MultiIndex::zero();
                            for _ in 0..j - 1 {
                                di = di.plus(dir);
                            }
                            s.add_term(di, term);
                        }
                    }
                }
                *coeff_row.entry_mut(r, 0) = s;
            }
            local = local.add(&coeff_row.compose(calc, &t.b)?)?;
        }
        PseudoOp::new(local, tail, dir)
    }

    /// R ∘ L for a local operator L: each b∘L is split as D∘Q + c, so that
    /// D⁻¹ b L = Q + D⁻¹ c.
    pub fn compose_right<C: Calculus + ?Sized>(&self, calc: &C, l: &CDiffOp) -> Result<PseudoOp> {
        let n = calc.space().n();
        let dir = self.dir;
        let mut local = self.local.compose(calc, l)?;
        let mut tail = Vec::new();
        for t in &self.tail {
            let bl = t.b.compose(calc, l)?;
            let mut qrow = CDiffOp::zero(1, l.cols());
            let mut crow = CDiffOp::zero(1, l.cols());
            for c in 0..l.cols() {
                let mut m: Vec<DiffExpr> = Vec::new();
                for (idx, coef) in bl.entry(0, c).coeffs() {
                    let k = pure_power(idx, dir, n)?;
                    if m.len() <= k {
                        m.resize(k + 1, DiffExpr::zero());
                    }
                    m[k] += coef;
                }
                let mut qs = ScalarOp::zero();
                for k in (1..m.len()).rev() {
                    let mk = std::mem::take(&mut m[k]);
                    if mk.is_zero() {
                        continue;
                    }
                    let mut di = MultiIndex::zero();
                    for _ in 0..k - 1 {
                        di = di.plus(dir);
                    }
                    let dm = calc.derive(&mk, dir)?;
                    m[k - 1] -= &dm;
                    qs.add_term(di, mk);
                }
                *qrow.entry_mut(0, c) = qs;
                if let Some(c0) = m.first() {
                    *crow.entry_mut(0, c) = ScalarOp::mult(c0.clone());
                }
            }
            let acol = CDiffOp::from_entries(
                t.a.iter().map(|x| vec![ScalarOp::mult(x.clone())]).collect(),
            )?;
            local = local.add(&acol.compose(calc, &qrow)?)?;
            tail.push(TailTerm {
                a: t.a.clone(),
                b: crow,
            });
        }
        PseudoOp::new(local, tail, dir)
    }

    pub fn render(&self, space: &JetSpace) -> String {
        let loc = self.local.render(space);
        let mut s = format!("{loc:?}");
        for t in &self.tail {
            let a: Vec<String> = t.a.iter().map(|x| crate::jetalg::render(x, space)).collect();
            s.push_str(&format!(" + {a:?}*Dinv*{:?}", t.b.render(space)));
        }
        s
    }
}

/// L_φ(R) = 𝐄_φ(R) − ℓ_φ ∘ R + R ∘ ℓ_φ in the formal algebra where D⁻¹ D = 1.
pub fn lie_derivative<C: Calculus + ?Sized>(calc: &C, phi: &[DiffExpr], r: &PseudoOp) -> Result<PseudoOp> {
    let l = super::op::linearize(phi, calc.space()).normalize(calc)?;
    let e = r.ev(calc, phi)?;
    let left = r.compose_left(calc, &l)?;
    let right = r.compose_right(calc, &l)?;
    e.add(&left.neg())?.add(&right)
}

/// ℓ_{R,φ}(χ) = 𝐄_χ(R)(φ).
fn l_r<C: Calculus + ?Sized>(calc: &C, r: &PseudoOp, phi: &[DiffExpr], chi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    r.ev(calc, chi)?.apply(calc, phi)
}

/// ½[[R,R]](φ₁,φ₂) = ℓ_{R,φ₂}(Rφ₁) − ℓ_{R,φ₁}(Rφ₂) + R(ℓ_{R,φ₁}(φ₂) − ℓ_{R,φ₂}(φ₁)).
pub fn nijenhuis_torsion<C: Calculus + ?Sized>(
    calc: &C,
    r: &PseudoOp,
    phi1: &[DiffExpr],
    phi2: &[DiffExpr],
) -> Result<Vec<DiffExpr>> {
    let r1 = r.apply(calc, phi1)?;
    let r2 = r.apply(calc, phi2)?;
    let a = l_r(calc, r, phi2, &r1)?;
    let b = l_r(calc, r, phi1, &r2)?;
    let c = l_r(calc, r, phi1, phi2)?;
    let d = l_r(calc, r, phi2, phi1)?;
    let inner: Vec<DiffExpr> = c.iter().zip(d.iter()).map(|(x, y)| x - y).collect();
    let rc = r.apply(calc, &inner)?;
    let mut out = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let v = &(&a[k] - &b[k]) + &rc[k];
        out.push(calc.normalize(&v)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetalg::{parse, parse_operator, FreeJets};

    fn space() -> JetSpace {
        JetSpace::simple(&["x"], &["u"], &[]).unwrap()
    }

    fn lenard(s: &JetSpace) -> PseudoOp {
        let local = CDiffOp::scalar(ScalarOp::from_map(parse_operator("D[2] + 4*u", s).unwrap()));
        let tail = vec![TailTerm {
            a: vec![parse("2*u[1]", s).unwrap()],
            b: CDiffOp::identity(1),
        }];
        PseudoOp::new(local, tail, 0).unwrap()
    }

    #[test]
    fn lenard_on_translation() {
        let s = space();
        let c = FreeJets::new(s.clone());
        let r = lenard(&s);
        let p = |t: &str| parse(t, &s).unwrap();
        assert_eq!(r.apply(&c, &[p("u[1]")]).unwrap()[0], p("u[3] + 6*u*u[1]"));
        assert_eq!(
            r.apply(&c, &[p("u[3] + 6*u*u[1]")]).unwrap()[0],
            p("u[5] + 10*u*u[3] + 20*u[1]*u[2] + 30*u^2*u[1]")
        );
        assert!(matches!(
            r.apply(&c, &[p("u")]),
            Err(Error::NonlocalObstruction(_))
        ));
    }

    #[test]
    fn lie_derivative_along_translation_vanishes() {
        let s = space();
        let c = FreeJets::new(s.clone());
        let r = lenard(&s);
        let p = |t: &str| parse(t, &s).unwrap();
        let l = lie_derivative(&c, &[p("u[1]")], &r).unwrap();
        assert!(l.local.is_zero());
        assert!(l.tail.is_empty());
    }

    #[test]
    fn torsion_of_lenard() {
        let s = space();
        let c = FreeJets::new(s.clone());
        let r = lenard(&s);
        let p = |t: &str| parse(t, &s).unwrap();
        let t = nijenhuis_torsion(&c, &r, &[p("u[1]")], &[p("u[3] + 6*u*u[1]")]).unwrap();
        assert!(t[0].is_zero());
    }
}
