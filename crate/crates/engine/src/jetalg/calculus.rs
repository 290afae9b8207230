use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::expr::DiffExpr;
use super::space::{JetSpace, MultiIndex, Var};

/// A context in which total derivatives are taken: free jets, an equation
/// (derivatives followed by reduction), or a covering over an equation.
pub trait Calculus: Sync {
    fn space(&self) -> &JetSpace;

    fn derive(&self, e: &DiffExpr, i: usize) -> Result<DiffExpr>;

    /// Brings an expression to the context's normal form.
    fn normalize(&self, e: &DiffExpr) -> Result<DiffExpr>;

    fn derive_multi(&self, e: &DiffExpr, idx: &MultiIndex) -> Result<DiffExpr> {
        let mut cur = e.clone();
        for i in idx.directions(self.space().n()) {
            if cur.is_zero() {
                break;
            }
            cur = self.derive(&cur, i)?;
        }
        Ok(cur)
    }
}

#[derive(Clone, Debug)]
pub struct FreeJets {
    space: JetSpace,
}

impl FreeJets {
    pub fn new(space: JetSpace) -> Self {
        FreeJets { space }
    }
}

impl Calculus for FreeJets {
    fn space(&self) -> &JetSpace {
        &self.space
    }

    fn derive(&self, e: &DiffExpr, i: usize) -> Result<DiffExpr> {
        total_derivative(e, i, &self.space)
    }

    fn normalize(&self, e: &DiffExpr) -> Result<DiffExpr> {
        Ok(e.clone())
    }
}

/// D_i of a single coordinate other than a nonlocal variable.
pub fn shift_var(v: &Var, i: usize, space: &JetSpace) -> Option<DiffExpr> {
    match v {
        Var::Indep(k) => (*k as usize == i).then(DiffExpr::one),
        Var::Param(_) => None,
        Var::Jet(j, idx) => Some(DiffExpr::jet(
            *j as usize,
            idx.plus(i),
            space.is_odd(v),
        )),
        Var::Nonlocal(_) => None,
    }
}

/// Total derivative on free jets; nonlocal variables are rejected.
pub fn total_derivative(e: &DiffExpr, i: usize, space: &JetSpace) -> Result<DiffExpr> {
    total_derivative_with(e, i, space, |w| {
        Err(Error::NonlocalPresent(space.nonlocal()[w].name.clone()))
    })
}

/// Total derivative where nonlocal variables differentiate by `nonlocal`.
pub fn total_derivative_with<F>(e: &DiffExpr, i: usize, space: &JetSpace, nonlocal: F) -> Result<DiffExpr>
where
    F: Fn(usize) -> Result<DiffExpr>,
{
    e.derivation(|v| match v {
        Var::Nonlocal(w) => nonlocal(*w as usize).map(Some),
        _ => Ok(shift_var(v, i, space)),
    })
}

/// Jets of dependent `dep` occurring in `e`.
pub fn jets_of(e: &DiffExpr, dep: usize) -> Vec<MultiIndex> {
    e.vars()
        .into_iter()
        .filter_map(|v| match v {
            Var::Jet(j, idx) if j as usize == dep => Some(idx),
            _ => None,
        })
        .collect()
}

/// Σ_I (−D)_I p_I evaluated by nested Horner schemes, one direction at a time.
pub fn signed_total_sum<C: Calculus + ?Sized>(
    calc: &C,
    parts: &BTreeMap<MultiIndex, DiffExpr>,
) -> Result<DiffExpr> {
    fn rec<C: Calculus + ?Sized>(
        calc: &C,
        parts: &BTreeMap<MultiIndex, DiffExpr>,
        dim: usize,
    ) -> Result<DiffExpr> {
        let n = calc.space().n();
        if parts.is_empty() {
            return Ok(DiffExpr::zero());
        }
        if dim == n {
            let mut acc = DiffExpr::zero();
            for v in parts.values() {
                acc += v;
            }
            return Ok(acc);
        }
        let mut by_k: BTreeMap<u8, BTreeMap<MultiIndex, DiffExpr>> = BTreeMap::new();
        for (idx, v) in parts {
            let mut rest = *idx;
            let k = idx.get(dim);
            for _ in 0..k {
                rest = rest.minus(dim).expect("positive exponent");
            }
            by_k.entry(k).or_default().insert(rest, v.clone());
        }
        let top = *by_k.keys().next_back().unwrap_or(&0);
        let mut acc = DiffExpr::zero();
        for k in (0..=top).rev() {
            let inner = match by_k.get(&k) {
                Some(p) => rec(calc, p, dim + 1)?,
                None => DiffExpr::zero(),
            };
            acc = if acc.is_zero() {
                inner
            } else {
                &inner - &calc.derive(&acc, dim)?
            };
        }
        Ok(acc)
    }
    rec(calc, parts, 0)
}

/// Variational derivative δL/δu^dep = Σ_I (−1)^{|I|} D_I ∂L/∂u_I^dep,
/// with left partial derivatives for odd targets.
pub fn euler<C: Calculus + ?Sized>(calc: &C, l: &DiffExpr, dep: usize) -> Result<DiffExpr> {
    let mut parts = BTreeMap::new();
    for idx in jets_of(l, dep) {
        let p = l.partial(&Var::Jet(dep as u8, idx));
        if !p.is_zero() {
            parts.insert(idx, p);
        }
    }
    let r = signed_total_sum(calc, &parts)?;
    calc.normalize(&r)
}

pub fn euler_all<C: Calculus + ?Sized>(calc: &C, l: &DiffExpr) -> Result<Vec<DiffExpr>> {
    (0..calc.space().m()).map(|j| euler(calc, l, j)).collect()
}

/// Whether every variational derivative of `l` vanishes.
pub fn is_variationally_trivial<C: Calculus + ?Sized>(calc: &C, l: &DiffExpr) -> Result<bool> {
    for j in 0..calc.space().m() {
        if !euler(calc, l, j)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Evolutionary derivation 𝐄_φ(e) = Σ D_I(φ_j) ∂e/∂u_I^j over the dependents
/// listed in `deps` (φ[k] belongs to deps[k]).
pub fn ev_apply_on<C: Calculus + ?Sized>(
    calc: &C,
    phi: &[DiffExpr],
    deps: &[usize],
    e: &DiffExpr,
) -> Result<DiffExpr> {
    let mut memo: BTreeMap<(usize, MultiIndex), DiffExpr> = BTreeMap::new();
    let r = e.derivation(|v| -> Result<Option<DiffExpr>> {
        let Var::Jet(j, idx) = v else {
            return Ok(None);
        };
        let Some(k) = deps.iter().position(|d| *d == *j as usize) else {
            return Ok(None);
        };
        if let Some(d) = memo.get(&(k, *idx)) {
            return Ok(Some(d.clone()));
        }
        let d = calc.derive_multi(&phi[k], idx)?;
        memo.insert((k, *idx), d.clone());
        Ok(Some(d))
    })?;
    calc.normalize(&r)
}

pub fn ev_apply<C: Calculus + ?Sized>(calc: &C, phi: &[DiffExpr], e: &DiffExpr) -> Result<DiffExpr> {
    let deps: Vec<usize> = (0..phi.len()).collect();
    ev_apply_on(calc, phi, &deps, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetalg::parse::parse;

    fn setup() -> (JetSpace, FreeJets) {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        (s.clone(), FreeJets::new(s))
    }

    #[test]
    fn leibniz_and_laurent() {
        let (s, c) = setup();
        let p = |t: &str| parse(t, &s).unwrap();
        assert_eq!(c.derive(&p("u*u[1,0]"), 0).unwrap(), p("u[1,0]^2 + u*u[2,0]"));
        assert_eq!(c.derive(&p("x"), 0).unwrap(), p("1"));
        assert_eq!(c.derive(&p("u^-1"), 0).unwrap(), p("-u^-2*u[1,0]"));
    }

    #[test]
    fn euler_examples() {
        let (s, c) = setup();
        let p = |t: &str| parse(t, &s).unwrap();
        assert_eq!(euler(&c, &p("1/2*u^2"), 0).unwrap(), p("u"));
        assert_eq!(euler(&c, &p("u^3 - 1/2*u[1,0]^2"), 0).unwrap(), p("3*u^2 + u[2,0]"));
        let f = p("x*u^2*u[0,1] + t*u[1,1]^2");
        assert!(euler(&c, &c.derive(&f, 0).unwrap(), 0).unwrap().is_zero());
        assert!(euler(&c, &c.derive(&f, 1).unwrap(), 0).unwrap().is_zero());
    }

    #[test]
    fn evolutionary_field() {
        let (s, c) = setup();
        let p = |t: &str| parse(t, &s).unwrap();
        let f = p("x*u^2*u[1,0] + t*u[2,0]");
        let lhs = ev_apply(&c, &[p("u[1,0]")], &f).unwrap();
        let rhs = &c.derive(&f, 0).unwrap() - &p("u^2*u[1,0]");
        assert_eq!(lhs, rhs);
    }
}
