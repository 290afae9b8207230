use std::collections::BTreeMap;

use num_traits::One;

use crate::error::{Error, Result};

use super::calculus::{euler, total_derivative, Calculus, FreeJets};
use super::expr::{q, DiffExpr, Monomial, Q};
use super::forms::HorizontalForm;
use super::parse::render;
use super::space::{JetSpace, MultiIndex, Var};

const MAX_STEPS: usize = 20_000;

fn jet_degree(m: &Monomial) -> i32 {
    let even: i32 = m
        .even()
        .iter()
        .filter(|(v, _)| matches!(v, Var::Jet(..)))
        .map(|(_, e)| *e)
        .sum();
    even + m.odd().iter().filter(|v| matches!(v, Var::Jet(..))).count() as i32
}

fn has_negative_jet(e: &DiffExpr) -> bool {
    e.terms()
        .any(|(m, _)| m.even().iter().any(|(v, k)| matches!(v, Var::Jet(..)) && *k < 0))
}

/// A density L with euler(L) = ψ, built by the homotopy formula
/// L = Σ_j ∫₀¹ u^j ψ_j(λu) dλ.
pub fn homotopy_density(space: &JetSpace, psi: &[DiffExpr]) -> Result<DiffExpr> {
    if psi.len() != space.m() {
        return Err(Error::Shape(format!(
            "section has {} components, space has {} dependents",
            psi.len(),
            space.m()
        )));
    }
    let mut l = DiffExpr::zero();
    for (j, p) in psi.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        if space.dependent()[j].odd {
            return Err(Error::Unsupported("homotopy in odd variables".into()));
        }
        if has_negative_jet(p) {
            return Err(Error::Laurent(render(p, space)));
        }
        if p.contains_var(|v| matches!(v, Var::Nonlocal(_))) {
            return Err(Error::NonlocalPresent(render(p, space)));
        }
        let u = DiffExpr::jet(j, MultiIndex::zero(), false);
        for (m, c) in p.terms() {
            let d = jet_degree(m);
            let t = DiffExpr::term(m.clone(), c / q(d as i64 + 1));
            l += &u * &t;
        }
    }
    let calc = FreeJets::new(space.clone());
    for (j, p) in psi.iter().enumerate() {
        if &euler(&calc, &l, j)? != p {
            return Err(Error::Helmholtz(format!(
                "component {j} is not a variational derivative"
            )));
        }
    }
    Ok(l)
}

/// Integrates Φ = ∫ a dw for an even variable w.
fn antiderivative(a: &DiffExpr, w: &Var, space: &JetSpace) -> Result<DiffExpr> {
    let mut out = DiffExpr::zero();
    let lift = Monomial::even_var(*w, 1);
    for (m, c) in a.terms() {
        let k = m.exponent(w);
        if k == -1 {
            return Err(Error::NonlocalObstruction(format!(
                "logarithmic primitive in {}",
                space.var_name(w)
            )));
        }
        let (p, _) = m.mul(&lift).expect("even factor");
        out.add_term(p, c / q(k as i64 + 1));
    }
    Ok(out)
}

/// The top jet in direction `dir`: highest exponent in that direction, then
/// highest order, then the largest variable.
fn top_jet(e: &DiffExpr, dir: usize) -> Option<(Var, usize, MultiIndex)> {
    e.vars()
        .into_iter()
        .filter_map(|v| match v {
            Var::Jet(j, idx) if idx.get(dir) > 0 => Some((v, j as usize, idx)),
            _ => None,
        })
        .max_by(|a, b| {
            a.2.get(dir)
                .cmp(&b.2.get(dir))
                .then(a.2.order().cmp(&b.2.order()))
                .then(a.0.cmp(&b.0))
        })
        .map(|(v, _, idx)| (v, idx.get(dir) as usize, idx))
}

/// Euler operator restricted to the jet family u^j_{K + k e_dir}, k ≥ 0,
/// with every other coordinate held inert.
fn family_euler(e: &DiffExpr, dep: usize, base: MultiIndex, dir: usize, space: &JetSpace) -> Result<DiffExpr> {
    let mut top = 0u8;
    for v in e.vars() {
        if let Var::Jet(j, idx) = v {
            if j as usize == dep {
                let mut b = idx;
                let k = idx.get(dir);
                for _ in 0..k {
                    b = b.minus(dir).expect("positive");
                }
                if b == base {
                    top = top.max(k);
                }
            }
        }
    }
    let mut acc = DiffExpr::zero();
    let mut idx = base;
    for _ in 0..top {
        idx = idx.plus(dir);
    }
    for k in (0..=top).rev() {
        let p = e.partial(&Var::jet(dep, idx));
        acc = if acc.is_zero() {
            p
        } else {
            &p - &total_derivative(&acc, dir, space)?
        };
        if k > 0 {
            idx = idx.minus(dir).expect("positive");
        }
    }
    Ok(acc)
}

fn families(e: &DiffExpr, dir: usize) -> Vec<(usize, MultiIndex)> {
    let mut out: Vec<(usize, MultiIndex)> = e
        .vars()
        .into_iter()
        .filter_map(|v| match v {
            Var::Jet(j, mut idx) => {
                while let Some(b) = idx.minus(dir) {
                    idx = b;
                }
                Some((j as usize, idx))
            }
            _ => None,
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn integrate_explicit(e: &DiffExpr, dir: usize, space: &JetSpace) -> Result<DiffExpr> {
    antiderivative(e, &Var::Indep(dir as u8), space)
}

/// The primitive D_dir⁻¹ e with zero constant term; jets with no component in
/// `dir` and the other independents are treated as inert.
pub fn invert_x(e: &DiffExpr, dir: usize, space: &JetSpace) -> Result<DiffExpr> {
    if e.contains_var(|v| matches!(v, Var::Nonlocal(_))) {
        return Err(Error::NonlocalPresent(render(e, space)));
    }
    if e.terms().any(|(m, _)| m.odd_degree() > 0) {
        return Err(Error::Unsupported("primitive of an odd expression".into()));
    }
    for (dep, base) in families(e, dir) {
        if !family_euler(e, dep, base, dir, space)?.is_zero() {
            return Err(Error::NonlocalObstruction(render(e, space)));
        }
    }
    let mut rest = e.clone();
    let mut prim = DiffExpr::zero();
    for _ in 0..MAX_STEPS {
        let Some((v, _, idx)) = top_jet(&rest, dir) else {
            if rest.contains_var(|v| matches!(v, Var::Jet(..))) {
                return Err(Error::NonlocalObstruction(render(e, space)));
            }
            prim += integrate_explicit(&rest, dir, space)?;
            return Ok(prim);
        };
        let a = rest.partial(&v);
        let k = idx.get(dir);
        if a.vars()
            .iter()
            .any(|w| matches!(w, Var::Jet(_, i) if i.get(dir) >= k))
        {
            return Err(Error::NonlocalObstruction(render(e, space)));
        }
        let Var::Jet(j, _) = v else { unreachable!() };
        let lower = Var::Jet(j, idx.minus(dir).expect("positive"));
        let phi = antiderivative(&a, &lower, space)?;
        rest -= total_derivative(&phi, dir, space)?;
        prim += phi;
    }
    Err(Error::NonlocalObstruction(format!(
        "primitive did not terminate for {}",
        render(e, space)
    )))
}

/// An equivalent density modulo D_dir-divergences in which no top jet appears
/// affinely with a lower-order coefficient.
pub fn canonical_density(l: &DiffExpr, dir: usize, space: &JetSpace) -> Result<DiffExpr> {
    let mut cur = l.clone();
    for _ in 0..MAX_STEPS {
        let Some((v, _, idx)) = top_jet(&cur, dir) else {
            return Ok(cur);
        };
        let a = cur.partial(&v);
        let k = idx.get(dir);
        let affine = !a
            .vars()
            .iter()
            .any(|w| matches!(w, Var::Jet(_, i) if i.get(dir) >= k));
        if !affine || a.contains_var(|w| matches!(w, Var::Nonlocal(_))) {
            return Ok(cur);
        }
        let Var::Jet(j, _) = v else { unreachable!() };
        let lower = Var::Jet(j, idx.minus(dir).expect("positive"));
        let Ok(phi) = antiderivative(&a, &lower, space) else {
            return Ok(cur);
        };
        cur -= total_derivative(&phi, dir, space)?;
    }
    Ok(cur)
}

fn homogeneous_parts(e: &DiffExpr) -> BTreeMap<i32, DiffExpr> {
    let mut out: BTreeMap<i32, DiffExpr> = BTreeMap::new();
    for (m, c) in e.terms() {
        out.entry(jet_degree(m))
            .or_default()
            .add_term(m.clone(), c.clone());
    }
    out
}

/// Higher Euler operator E^J_α P = Σ_{K ≥ J} C(K,J) (−D)_{K−J} ∂P/∂u^α_K.
fn higher_euler(calc: &FreeJets, p: &DiffExpr, dep: usize, j: &MultiIndex) -> Result<DiffExpr> {
    let mut acc = DiffExpr::zero();
    for v in p.vars() {
        let Var::Jet(d, k) = v else { continue };
        if d as usize != dep || !j.divides(&k) {
            continue;
        }
        let diff = k.checked_sub(j).expect("divides");
        let part = p.partial(&v);
        let mut term = calc.derive_multi(&part, &diff)?;
        let sign = if diff.order() % 2 == 1 { -1 } else { 1 };
        let b = k.binomial(j) as i64 * sign;
        term = term.scale(&q(b));
        acc += term;
    }
    Ok(acc)
}

/// A form θ of degree n−1 with d_h θ = density·vol, or an obstruction when the
/// density is not a total divergence.
pub fn invert_divergence(density: &DiffExpr, space: &JetSpace) -> Result<HorizontalForm> {
    let n = space.n();
    if n == 1 {
        let p = invert_x(density, 0, space)?;
        return Ok(HorizontalForm::from_flux(&[p]));
    }
    if density.contains_var(|v| matches!(v, Var::Nonlocal(_))) {
        return Err(Error::NonlocalPresent(render(density, space)));
    }
    if has_negative_jet(density) {
        return Err(Error::Laurent(render(density, space)));
    }
    let calc = FreeJets::new(space.clone());
    for j in 0..space.m() {
        if !euler(&calc, density, j)?.is_zero() {
            return Err(Error::NonlocalObstruction(render(density, space)));
        }
    }
    let mut flux = vec![DiffExpr::zero(); n];
    for (d, part) in homogeneous_parts(density) {
        if d == 0 {
            flux[0] += integrate_explicit(&part, 0, space)?;
            continue;
        }
        let inv_d = Q::one() / q(d as i64);
        let mut seen: Vec<(usize, MultiIndex)> = part
            .vars()
            .into_iter()
            .filter_map(|v| v.as_jet())
            .collect();
        seen.sort();
        for dep in 0..space.m() {
            let u = DiffExpr::jet(dep, MultiIndex::zero(), false);
            let mut targets: Vec<MultiIndex> = Vec::new();
            for (d2, k) in &seen {
                if *d2 == dep {
                    for j in k.sub_indices(n) {
                        if !j.is_zero() && !targets.contains(&j) {
                            targets.push(j);
                        }
                    }
                }
            }
            targets.sort();
            for j in targets {
                let ej = higher_euler(&calc, &part, dep, &j)?;
                if ej.is_zero() {
                    continue;
                }
                let i = (0..n).find(|&i| j.get(i) > 0).expect("nonzero");
                let inner = (&u * &ej).scale(&inv_d);
                let rest = j.minus(i).expect("positive");
                flux[i] += calc.derive_multi(&inner, &rest)?;
            }
        }
    }
    if flux.iter().all(|f| f.is_zero()) && !density.is_zero() {
        return Err(Error::NonlocalObstruction(render(density, space)));
    }
    Ok(HorizontalForm::from_flux(&flux))
}
