use num_traits::One;

use crate::cdiff::CDiffOp;
use crate::error::{Error, Result};
use crate::jetalg::{euler, render, Calculus, DiffExpr, Field, FreeJets, JetSpace, Monomial, MultiIndex, Var, Q};

/// A density on the jet space extended by one odd family p^j per dependent.
#[derive(Clone, Debug)]
pub struct Superdensity {
    space: JetSpace,
    base_m: usize,
    odd: Vec<usize>,
    density: DiffExpr,
}

/// The jet space with odd partners p^j appended to the dependents.
pub fn odd_extension(space: &JetSpace) -> Result<(JetSpace, Vec<usize>)> {
    let m = space.m();
    let mut taken = space.clone();
    let mut fields = Vec::with_capacity(m);
    for j in 0..m {
        let base = if m == 1 {
            "p".to_string()
        } else {
            format!("p_{}", space.dependent()[j].name)
        };
        let name = taken.fresh_name(&base);
        fields.push(Field::odd(&name));
        taken = taken.with_dependents(vec![Field::odd(&name)])?.0;
    }
    space.with_dependents(fields)
}

impl Superdensity {
    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn density(&self) -> &DiffExpr {
        &self.density
    }

    pub fn odd_deps(&self) -> &[usize] {
        &self.odd
    }

    pub fn base_m(&self) -> usize {
        self.base_m
    }

    pub fn render(&self) -> String {
        render(&self.density, &self.space)
    }
}

/// W_A = Σ a_σ^{ji} p_σ^i p^j for a square matrix operator A with
/// A(ψ)^j = Σ a_σ^{ji} D_σ ψ^i, i.e. ⟨p, A(p)⟩ up to divergence and sign.
pub fn to_superdensity(a: &CDiffOp, space: &JetSpace) -> Result<Superdensity> {
    let m = space.m();
    if a.rows() != a.cols() || a.rows() != m {
        return Err(Error::Shape(format!(
            "bivector must be {m}x{m}, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let (ext, odd) = odd_extension(space)?;
    let mut w = DiffExpr::zero();
    for i in 0..m {
        for j in 0..m {
            for (idx, coef) in a.entry(j, i).coeffs() {
                let pi = DiffExpr::jet(odd[i], *idx, true);
                let pj = DiffExpr::jet(odd[j], MultiIndex::zero(), true);
                w += &(coef * &pi) * &pj;
            }
        }
    }
    Ok(Superdensity {
        space: ext,
        base_m: m,
        odd,
        density: w,
    })
}

/// An operator A with W_A equal to the superdensity modulo total divergences.
pub fn from_superdensity(w: &Superdensity) -> Result<CDiffOp> {
    let m = w.base_m;
    let n = w.space.n();
    let calc = FreeJets::new(w.space.clone());
    let mut op = CDiffOp::zero(m, m);
    let slot = |v: &Var| -> Option<(usize, MultiIndex)> {
        let (d, idx) = v.as_jet()?;
        w.odd.iter().position(|o| *o == d).map(|k| (k, idx))
    };
    for (mon, c) in w.density.terms() {
        let odd = mon.odd();
        if odd.len() != 2 {
            return Err(Error::Shape("superdensity is not fiber-quadratic".into()));
        }
        let (Some((i, s)), Some((j, t))) = (slot(&odd[0]), slot(&odd[1])) else {
            return Err(Error::Shape("odd factor outside the fiber family".into()));
        };
        let (coef_mon, _) = Monomial::from_parts(mon.even().to_vec(), Vec::new()).expect("even part");
        let coef = DiffExpr::term(coef_mon, c.clone());
        // c p^i_s p^j_t, moved to the form Σ b p^{i'}_σ p^{j'}.
        let (i, s, j, t, coef) = if t.is_zero() {
            (i, s, j, t, coef)
        } else if s.is_zero() {
            (j, t, i, s, -coef)
        } else {
            (i, s, j, t, coef)
        };
        if t.is_zero() {
            op.entry_mut(j, i).add_term(s, coef);
            continue;
        }
        // c p_s D_t(p) ~ (−D)_t(c p_s) p
        let sign = if t.order() % 2 == 1 { -Q::one() } else { Q::one() };
        for k in t.sub_indices(n) {
            let rest = t.checked_sub(&k).expect("sub-index");
            let dc = calc.derive_multi(&coef, &rest)?;
            if dc.is_zero() {
                continue;
            }
            let b = t.binomial(&k);
            let f = Q::from_integer((b as i64).into()) * &sign;
            op.entry_mut(j, i).add_term(s.add(&k), dc.scale(&f));
        }
    }
    Ok(op)
}

fn all_deps(w: &Superdensity) -> (Vec<usize>, &[usize]) {
    ((0..w.base_m).collect(), &w.odd)
}

/// Σ_i δW₁/δu^i · δW₂/δp^i.
fn cross(calc: &FreeJets, w1: &Superdensity, w2: &Superdensity) -> Result<DiffExpr> {
    let (even, odd) = all_deps(w1);
    let mut acc = DiffExpr::zero();
    for (i, &e) in even.iter().enumerate() {
        let a = euler(calc, &w1.density, e)?;
        if a.is_zero() {
            continue;
        }
        let b = euler(calc, &w2.density, odd[i])?;
        acc += &a * &b;
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct HamiltonianCheck {
    /// A + A*; zero for skew-adjoint operators.
    pub skew_defect: CDiffOp,
    /// The superdensity whose variational derivatives must vanish.
    pub bracket: Superdensity,
    /// Its variational derivatives in all even and odd dependents.
    pub residual: Vec<DiffExpr>,
}

impl HamiltonianCheck {
    pub fn holds(&self) -> bool {
        self.skew_defect.is_zero() && self.residual.iter().all(DiffExpr::is_zero)
    }
}

fn bracket_check(a: &CDiffOp, b: Option<&CDiffOp>, space: &JetSpace) -> Result<HamiltonianCheck> {
    let free = FreeJets::new(space.clone());
    let wa = to_superdensity(a, space)?;
    let calc = FreeJets::new(wa.space.clone());
    let mut skew_defect = a.add(&a.adjoint(&free)?)?;
    let s = match b {
        None => cross(&calc, &wa, &wa)?,
        Some(b) => {
            skew_defect = skew_defect.add(&b.add(&b.adjoint(&free)?)?)?;
            let wb = to_superdensity(b, space)?;
            &cross(&calc, &wa, &wb)? + &cross(&calc, &wb, &wa)?
        }
    };
    let residual = (0..wa.space.m())
        .map(|d| euler(&calc, &s, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(HamiltonianCheck {
        skew_defect,
        bracket: Superdensity {
            density: s,
            ..wa
        },
        residual,
    })
}

/// δ(Σ_i δW_A/δu^i · δW_A/δp^i) = 0.
pub fn is_hamiltonian(a: &CDiffOp, space: &JetSpace) -> Result<HamiltonianCheck> {
    bracket_check(a, None, space)
}

/// δ(Σ_i δW_A/δu^i · δW_B/δp^i + δW_B/δu^i · δW_A/δp^i) = 0.
pub fn are_compatible(a: &CDiffOp, b: &CDiffOp, space: &JetSpace) -> Result<HamiltonianCheck> {
    bracket_check(a, Some(b), space)
}
