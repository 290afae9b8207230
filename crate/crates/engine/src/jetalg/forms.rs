use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::calculus::Calculus;
use super::expr::DiffExpr;

/// ω = Σ a_I dx^{i₁}∧…∧dx^{i_q} with sorted index sets I.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizontalForm {
    n: usize,
    degree: usize,
    comps: BTreeMap<Vec<u8>, DiffExpr>,
}

impl HorizontalForm {
    pub fn zero(n: usize, degree: usize) -> Self {
        HorizontalForm {
            n,
            degree,
            comps: BTreeMap::new(),
        }
    }

    pub fn function(n: usize, f: DiffExpr) -> Self {
        let mut w = Self::zero(n, 0);
        w.set(Vec::new(), f);
        w
    }

    /// The n-form f·dx¹∧…∧dxⁿ.
    pub fn volume(n: usize, f: DiffExpr) -> Self {
        let mut w = Self::zero(n, n);
        w.set((0..n as u8).collect(), f);
        w
    }

    /// The (n−1)-form Σ_i (−1)^i P^i dx^{[n]∖i}, whose differential is div P.
    pub fn from_flux(flux: &[DiffExpr]) -> Self {
        let n = flux.len();
        let mut w = Self::zero(n, n.saturating_sub(1));
        for (i, p) in flux.iter().enumerate() {
            let idx: Vec<u8> = (0..n as u8).filter(|&k| k as usize != i).collect();
            let v = if i % 2 == 1 { -p } else { p.clone() };
            w.set(idx, v);
        }
        w
    }

    /// Inverse of [`HorizontalForm::from_flux`].
    pub fn flux(&self) -> Vec<DiffExpr> {
        (0..self.n)
            .map(|i| {
                let idx: Vec<u8> = (0..self.n as u8).filter(|&k| k as usize != i).collect();
                let a = self.get(&idx);
                if i % 2 == 1 {
                    -a
                } else {
                    a
                }
            })
            .collect()
    }

    /// For n = 2: the current X dx + T dt as (X, T).
    pub fn current(x: DiffExpr, t: DiffExpr) -> Self {
        let mut w = Self::zero(2, 1);
        w.set(vec![0], x);
        w.set(vec![1], t);
        w
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, idx: &[u8]) -> DiffExpr {
        self.comps.get(idx).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, idx: Vec<u8>, a: DiffExpr) {
        if a.is_zero() {
            self.comps.remove(&idx);
        } else {
            self.comps.insert(idx, a);
        }
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<u8>, &DiffExpr)> {
        self.comps.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn density(&self) -> DiffExpr {
        self.get(&(0..self.n as u8).collect::<Vec<_>>())
    }

    pub fn map<F: FnMut(&DiffExpr) -> Result<DiffExpr>>(&self, mut f: F) -> Result<Self> {
        let mut out = Self::zero(self.n, self.degree);
        for (k, v) in &self.comps {
            out.set(k.clone(), f(v)?);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.degree != other.degree {
            return Err(Error::Shape("forms of different type".into()));
        }
        let mut out = self.clone();
        for (k, v) in &other.comps {
            let s = &out.get(k) + v;
            out.set(k.clone(), s);
        }
        Ok(out)
    }
}

/// Horizontal differential d_h ω = Σ_i dx^i ∧ D_i ω.
pub fn d_h<C: Calculus + ?Sized>(calc: &C, w: &HorizontalForm) -> Result<HorizontalForm> {
    let n = w.n;
    if w.degree >= n {
        return Err(Error::TopDegree {
            degree: w.degree,
            n,
        });
    }
    let mut out = HorizontalForm::zero(n, w.degree + 1);
    for (idx, a) in &w.comps {
        for i in 0..n as u8 {
            if idx.contains(&i) {
                continue;
            }
            let before = idx.iter().filter(|&&k| k < i).count();
            let mut d = calc.derive(a, i as usize)?;
            if before % 2 == 1 {
                d = -d;
            }
            let mut j = idx.clone();
            j.push(i);
            j.sort_unstable();
            let s = &out.get(&j) + &d;
            out.set(j, s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetalg::calculus::FreeJets;
    use crate::jetalg::parse::parse;
    use crate::jetalg::space::JetSpace;

    #[test]
    fn differential_of_function() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let c = FreeJets::new(s.clone());
        let f = parse("u*x + u[0,1]", &s).unwrap();
        let w = d_h(&c, &HorizontalForm::function(2, f.clone())).unwrap();
        assert_eq!(w.get(&[0]), c.derive(&f, 0).unwrap());
        assert_eq!(w.get(&[1]), c.derive(&f, 1).unwrap());
        assert!(d_h(&c, &w).unwrap().is_zero());
    }

    #[test]
    fn current_differential() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let c = FreeJets::new(s.clone());
        let p = |t: &str| parse(t, &s).unwrap();
        let w = HorizontalForm::current(p("u"), p("u[2,0] + 3*u^2"));
        let dw = d_h(&c, &w).unwrap();
        assert_eq!(dw.density(), p("u[3,0] + 6*u*u[1,0] - u[0,1]"));
        let back = HorizontalForm::from_flux(&w.flux());
        assert_eq!(back, w);
    }

    #[test]
    fn top_degree_rejected() {
        let w = HorizontalForm::volume(1, DiffExpr::one());
        let s = JetSpace::simple(&["x"], &["u"], &[]).unwrap();
        assert!(d_h(&FreeJets::new(s), &w).is_err());
    }
}
