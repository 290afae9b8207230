//! Random generators and property checks shared by the property suite and
//! the acceptance runner.

use jetcalc_engine::cdiff::{green_form, helmholtz, jacobi, pairing, CDiffOp, ScalarOp};
use jetcalc_engine::hamiltonian::{are_compatible, is_hamiltonian, trivial_on_triple};
use jetcalc_engine::jetalg::{d_h, euler_all, parse, parse_operator, Calculus, DiffExpr, FreeJets, HorizontalForm, JetSpace};
use proptest::prelude::*;

pub const CASES: u32 = 500;

pub type Check = Result<(), String>;

pub const PLANE_VARS: &[&str] = &["u", "u[1,0]", "u[0,1]", "u[2,0]", "u[1,1]", "x", "t"];
pub const LINE2_VARS: &[&str] = &["u", "v", "u[1]", "v[1]", "u[2]", "x"];
pub const LINE_VARS: &[&str] = &["u", "u[1]", "u[2]", "x"];
pub const SPACE3_VARS: &[&str] = &["u", "u[1,0,0]", "u[0,1,0]", "u[0,0,1]", "u[1,1,0]", "x", "z"];

pub fn plane() -> JetSpace {
    JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap()
}

pub fn line(deps: &[&str]) -> JetSpace {
    JetSpace::simple(&["x"], deps, &[]).unwrap()
}

pub fn space3() -> JetSpace {
    JetSpace::simple(&["x", "y", "z"], &["u"], &[]).unwrap()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// A polynomial with small integer coefficients in the given variables.
pub fn poly(vars: &'static [&'static str], max_terms: usize, max_degree: usize) -> impl Strategy<Value = String> {
    let term = (
        (-3i32..=3).prop_filter("nonzero", |c| *c != 0),
        prop::collection::vec(0..vars.len(), 0..=max_degree),
    )
        .prop_map(move |(c, fs)| {
            let mut t = c.to_string();
            for f in fs {
                t.push('*');
                t.push_str(vars[f]);
            }
            t
        });
    prop::collection::vec(term, 1..=max_terms).prop_map(|ts| ts.join(" + "))
}

/// A scalar operator Σ (coefficient)·D_σ with |σ| ≤ max_order over n independents.
pub fn scalar_op_text(vars: &'static [&'static str], n: usize, max_order: usize) -> impl Strategy<Value = String> {
    let index = prop::collection::vec(0..=max_order, n).prop_filter("order", move |v| v.iter().sum::<usize>() <= max_order);
    let term = (poly(vars, 2, 2), index).prop_map(|(c, idx)| {
        let d: Vec<String> = idx.iter().map(usize::to_string).collect();
        format!("({c})*D[{}]", d.join(","))
    });
    prop::collection::vec(term, 1..=3).prop_map(|ts| ts.join(" + "))
}

pub fn matrix_text(
    vars: &'static [&'static str],
    n: usize,
    m: usize,
    max_order: usize,
) -> impl Strategy<Value = Vec<Vec<String>>> {
    let entry = prop_oneof![1 => Just("0".to_string()), 3 => scalar_op_text(vars, n, max_order)];
    prop::collection::vec(prop::collection::vec(entry, m), m)
}

pub fn operator(space: &JetSpace, rows: &[Vec<String>]) -> Result<CDiffOp, String> {
    let entries = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|t| parse_operator(t, space).map(ScalarOp::from_map).map_err(err))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    CDiffOp::from_entries(entries).map_err(err)
}

pub fn exprs(space: &JetSpace, texts: &[String]) -> Result<Vec<DiffExpr>, String> {
    texts.iter().map(|t| parse(t, space).map_err(err)).collect()
}

pub fn adjoint_involution(space: &JetSpace, rows: &[Vec<String>]) -> Check {
    let c = FreeJets::new(space.clone());
    let a = operator(space, rows)?.normalize(&c).map_err(err)?;
    let twice = a.adjoint(&c).and_then(|b| b.adjoint(&c)).map_err(err)?;
    if twice.sub(&a).map_err(err)?.is_zero() {
        Ok(())
    } else {
        Err(format!("A** != A for {rows:?}"))
    }
}

/// ⟨Δp, q⟩ − ⟨p, Δ*q⟩ = d_h ω for the Green form ω.
pub fn green_identity(space: &JetSpace, rows: &[Vec<String>], p: &[String], q: &[String]) -> Check {
    let c = FreeJets::new(space.clone());
    let delta = operator(space, rows)?;
    let (p, q) = (exprs(space, p)?, exprs(space, q)?);
    let w = green_form(&c, &delta, &p, &q).map_err(err)?;
    let lhs = &pairing(&delta.apply(&c, &p).map_err(err)?, &q)
        - &pairing(&p, &delta.adjoint(&c).and_then(|d| d.apply(&c, &q)).map_err(err)?);
    let residual = c.normalize(&(&d_h(&c, &w).map_err(err)?.density() - &lhs)).map_err(err)?;
    if residual.is_zero() {
        Ok(())
    } else {
        Err(format!("Green residual for {rows:?}"))
    }
}

pub fn jacobi_identity(space: &JetSpace, f: &str, g: &str, h: &str) -> Check {
    let c = FreeJets::new(space.clone());
    let v = exprs(space, &[f.into(), g.into(), h.into()])?;
    let (f, g, h) = (&v[0..1], &v[1..2], &v[2..3]);
    let cyc = |a: &[DiffExpr], b: &[DiffExpr], x: &[DiffExpr]| -> Result<DiffExpr, String> {
        let inner = jacobi(&c, b, x).map_err(err)?;
        Ok(jacobi(&c, a, &inner).map_err(err)?.remove(0))
    };
    let sum = &(&cyc(f, g, h)? + &cyc(g, h, f)?) + &cyc(h, f, g)?;
    if c.normalize(&sum).map_err(err)?.is_zero() {
        Ok(())
    } else {
        Err("Jacobi identity fails".into())
    }
}

pub fn euler_of_divergence(space: &JetSpace, flux: &[String]) -> Check {
    let c = FreeJets::new(space.clone());
    let flux = exprs(space, flux)?;
    let mut div = DiffExpr::zero();
    for (i, a) in flux.iter().enumerate() {
        div += &c.derive(a, i).map_err(err)?;
    }
    if euler_all(&c, &div).map_err(err)?.iter().all(DiffExpr::is_zero) {
        Ok(())
    } else {
        Err("divergence has nonzero Euler operator".into())
    }
}

pub fn helmholtz_of_euler(space: &JetSpace, density: &str) -> Check {
    let c = FreeJets::new(space.clone());
    let l = parse(density, space).map_err(err)?;
    let psi = euler_all(&c, &l).map_err(err)?;
    if helmholtz(&c, &psi).map_err(err)?.is_zero() {
        Ok(())
    } else {
        Err(format!("Helmholtz operator of δ({density}) is nonzero"))
    }
}

/// d_h² = 0 on a function and on a 1-form over three independents.
pub fn dh_squared(space: &JetSpace, f: &str, one_form: &[String]) -> Check {
    let c = FreeJets::new(space.clone());
    let n = space.n();
    let mut forms = vec![HorizontalForm::function(n, parse(f, space).map_err(err)?)];
    let mut w = HorizontalForm::zero(n, 1);
    for (i, a) in exprs(space, one_form)?.into_iter().enumerate() {
        w.set(vec![i as u8], a);
    }
    forms.push(w);
    for w in &forms {
        let dd = d_h(&c, &d_h(&c, w).map_err(err)?).map_err(err)?;
        if !dd.map(|a| c.normalize(a)).map_err(err)?.is_zero() {
            return Err(format!("d_h² ≠ 0 on a {}-form", w.degree()));
        }
    }
    Ok(())
}

/// Space with the base dependents followed by three generic m-component
/// arguments ψ₁, ψ₂, ψ₃.
fn tripled(base: &JetSpace) -> (JetSpace, Vec<Vec<DiffExpr>>) {
    let m = base.m();
    let mut deps: Vec<String> = base.dependent().iter().map(|f| f.name.clone()).collect();
    for arg in ["a", "b", "c"] {
        for i in 0..m {
            deps.push(format!("{arg}{i}"));
        }
    }
    let names: Vec<&str> = deps.iter().map(String::as_str).collect();
    let space = JetSpace::simple(&["x"], &names, &[]).unwrap();
    let total = space.m();
    let args = (0..3)
        .map(|k| {
            let mut v = vec![DiffExpr::zero(); total];
            for (i, slot) in v.iter_mut().enumerate().take(m) {
                *slot = parse(&deps[m + k * m + i], &space).unwrap();
            }
            v
        })
        .collect();
    (space, args)
}

fn pad(a: &CDiffOp, size: usize) -> CDiffOp {
    let mut out = CDiffOp::zero(size, size);
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            *out.entry_mut(r, c) = a.entry(r, c).clone();
        }
    }
    out
}

/// A skew-adjoint operator K − K*.
pub fn skew(space: &JetSpace, rows: &[Vec<String>]) -> Result<CDiffOp, String> {
    let c = FreeJets::new(space.clone());
    let k = operator(space, rows)?;
    k.sub(&k.adjoint(&c).map_err(err)?).map_err(err)?.normalize(&c).map_err(err)
}

/// The superdensity criterion and the operator formula for [[A, B]] agree.
/// Returns whether the bracket vanishes.
pub fn route_agreement(base: &JetSpace, a: &CDiffOp, b: &CDiffOp) -> Result<bool, String> {
    let by_density = if a == b {
        is_hamiltonian(a, base).map_err(err)?
    } else {
        are_compatible(a, b, base).map_err(err)?
    };
    if !by_density.skew_defect.is_zero() {
        return Err("arguments are not skew-adjoint".into());
    }
    let by_density = by_density.residual.iter().all(DiffExpr::is_zero);
    let (space, args) = tripled(base);
    let calc = FreeJets::new(space.clone());
    let (ea, eb) = (pad(a, space.m()), pad(b, space.m()));
    let by_operator = trivial_on_triple(&calc, &ea, &eb, [&args[0], &args[1], &args[2]]).map_err(err)?;
    if by_density == by_operator {
        Ok(by_density)
    } else {
        Err(format!(
            "superdensity says {by_density}, operator formula says {by_operator} for {:?} / {:?}",
            a.render(base),
            b.render(base)
        ))
    }
}
