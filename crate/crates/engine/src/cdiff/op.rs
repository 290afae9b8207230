use std::collections::BTreeMap;

use num_traits::One;

use crate::error::{Error, Result};
use crate::jetalg::{
    ev_apply, jets_of, q, render_operator, Calculus, DiffExpr, HorizontalForm, JetSpace,
    MultiIndex, Var, Q,
};

/// A scalar operator Σ_I a_I D_I with coefficients to the left.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarOp {
    coeffs: BTreeMap<MultiIndex, DiffExpr>,
}

impl ScalarOp {
    pub fn zero() -> Self {
        ScalarOp::default()
    }

    pub fn mult(a: DiffExpr) -> Self {
        let mut s = Self::zero();
        s.add_term(MultiIndex::zero(), a);
        s
    }

    pub fn d(idx: MultiIndex) -> Self {
        let mut s = Self::zero();
        s.add_term(idx, DiffExpr::one());
        s
    }

    pub fn from_map(mut coeffs: BTreeMap<MultiIndex, DiffExpr>) -> Self {
        coeffs.retain(|_, v| !v.is_zero());
        ScalarOp { coeffs }
    }

    pub fn add_term(&mut self, idx: MultiIndex, a: DiffExpr) {
        if a.is_zero() {
            return;
        }
        let e = self.coeffs.entry(idx).or_default();
        *e += a;
        if e.is_zero() {
            self.coeffs.remove(&idx);
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, DiffExpr> {
        &self.coeffs
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> DiffExpr {
        self.coeffs.get(idx).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn order(&self) -> usize {
        self.coeffs.keys().map(|k| k.order()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &ScalarOp) -> ScalarOp {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            out.add_term(*k, v.clone());
        }
        out
    }

    pub fn scale(&self, c: &Q) -> ScalarOp {
        ScalarOp::from_map(self.coeffs.iter().map(|(k, v)| (*k, v.scale(c))).collect())
    }

    /// Left multiplication by a function.
    pub fn mul_left(&self, f: &DiffExpr) -> ScalarOp {
        ScalarOp::from_map(self.coeffs.iter().map(|(k, v)| (*k, f * v)).collect())
    }

    pub fn map_coeffs<F: FnMut(&DiffExpr) -> Result<DiffExpr>>(&self, mut f: F) -> Result<ScalarOp> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.coeffs {
            out.insert(*k, f(v)?);
        }
        Ok(ScalarOp::from_map(out))
    }

    pub fn apply<C: Calculus + ?Sized>(&self, calc: &C, p: &DiffExpr) -> Result<DiffExpr> {
        let mut memo = BTreeMap::new();
        self.apply_memo(calc, p, &mut memo)
    }

    fn apply_memo<C: Calculus + ?Sized>(
        &self,
        calc: &C,
        p: &DiffExpr,
        memo: &mut BTreeMap<MultiIndex, DiffExpr>,
    ) -> Result<DiffExpr> {
        let mut acc = DiffExpr::zero();
        for (idx, a) in &self.coeffs {
            let d = derive_cached(calc, p, idx, memo)?;
            acc += a * &d;
        }
        Ok(acc)
    }

    /// (Σ a_I D_I) ∘ (Σ b_J D_J) by the Leibniz rule.
    pub fn compose<C: Calculus + ?Sized>(&self, calc: &C, other: &ScalarOp) -> Result<ScalarOp> {
        let n = calc.space().n();
        let mut out = ScalarOp::zero();
        for (j, b) in &other.coeffs {
            let mut memo = BTreeMap::new();
            for (i, a) in &self.coeffs {
                for k in i.sub_indices(n) {
                    let db = derive_cached(calc, b, &k, &mut memo)?;
                    if db.is_zero() {
                        continue;
                    }
                    let c = i.binomial(&k);
                    let rest = i.checked_sub(&k).expect("sub index").add(j);
                    out.add_term(rest, (a * &db).scale(&q(c as i64)));
                }
            }
        }
        Ok(out)
    }

    /// Σ_I (−D)_I ∘ a_I brought to normal form.
    pub fn adjoint<C: Calculus + ?Sized>(&self, calc: &C) -> Result<ScalarOp> {
        let n = calc.space().n();
        let mut out = ScalarOp::zero();
        for (i, a) in &self.coeffs {
            let sign = if i.order() % 2 == 1 { -1 } else { 1 };
            let mut memo = BTreeMap::new();
            for k in i.sub_indices(n) {
                let da = derive_cached(calc, a, &k, &mut memo)?;
                if da.is_zero() {
                    continue;
                }
                let c = i.binomial(&k) as i64 * sign;
                out.add_term(i.checked_sub(&k).expect("sub index"), da.scale(&q(c)));
            }
        }
        Ok(out)
    }
}

fn derive_cached<C: Calculus + ?Sized>(
    calc: &C,
    p: &DiffExpr,
    idx: &MultiIndex,
    memo: &mut BTreeMap<MultiIndex, DiffExpr>,
) -> Result<DiffExpr> {
    if idx.is_zero() {
        return Ok(p.clone());
    }
    if let Some(d) = memo.get(idx) {
        return Ok(d.clone());
    }
    let n = calc.space().n();
    let dir = (0..n).rev().find(|&i| idx.get(i) > 0).expect("nonzero index");
    let lower = idx.minus(dir).expect("positive");
    let base = derive_cached(calc, p, &lower, memo)?;
    let d = calc.derive(&base, dir)?;
    memo.insert(*idx, d.clone());
    Ok(d)
}

/// A matrix of scalar operators acting on column vectors of functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CDiffOp {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<ScalarOp>>,
}

impl CDiffOp {
    pub fn zero(rows: usize, cols: usize) -> Self {
        CDiffOp {
            rows,
            cols,
            entries: vec![vec![ScalarOp::zero(); cols]; rows],
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut op = Self::zero(m, m);
        for i in 0..m {
            op.entries[i][i] = ScalarOp::mult(DiffExpr::one());
        }
        op
    }

    pub fn scalar(s: ScalarOp) -> Self {
        CDiffOp {
            rows: 1,
            cols: 1,
            entries: vec![vec![s]],
        }
    }

    pub fn from_entries(entries: Vec<Vec<ScalarOp>>) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map(|r| r.len()).unwrap_or(0);
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged operator matrix".into()));
        }
        Ok(CDiffOp {
            rows,
            cols,
            entries,
        })
    }

    /// Diagonal multiplication operator.
    pub fn diagonal(fs: &[DiffExpr]) -> Self {
        let mut op = Self::zero(fs.len(), fs.len());
        for (i, f) in fs.iter().enumerate() {
            op.entries[i][i] = ScalarOp::mult(f.clone());
        }
        op
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> &ScalarOp {
        &self.entries[r][c]
    }

    pub fn entry_mut(&mut self, r: usize, c: usize) -> &mut ScalarOp {
        &mut self.entries[r][c]
    }

    pub fn entries(&self) -> &[Vec<ScalarOp>] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> CDiffOp {
        CDiffOp {
            rows: 1,
            cols: self.cols,
            entries: vec![self.entries[r].clone()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.is_zero())
    }

    pub fn order(&self) -> usize {
        self.entries.iter().flatten().map(|e| e.order()).max().unwrap_or(0)
    }

    fn check_same(&self, other: &CDiffOp) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &CDiffOp) -> Result<CDiffOp> {
        self.check_same(other)?;
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.entries[r][c] = self.entries[r][c].add(&other.entries[r][c]);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &CDiffOp) -> Result<CDiffOp> {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> CDiffOp {
        CDiffOp {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(|e| e.scale(c)).collect())
                .collect(),
        }
    }

    pub fn map_coeffs<F: FnMut(&DiffExpr) -> Result<DiffExpr>>(&self, mut f: F) -> Result<CDiffOp> {
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.entries[r][c] = self.entries[r][c].map_coeffs(&mut f)?;
            }
        }
        Ok(out)
    }

    /// Normalizes every coefficient in the calculus (e.g. reduction on ℰ).
    pub fn normalize<C: Calculus + ?Sized>(&self, calc: &C) -> Result<CDiffOp> {
        self.map_coeffs(|a| calc.normalize(a))
    }

    pub fn apply<C: Calculus + ?Sized>(&self, calc: &C, p: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
        if p.len() != self.cols {
            return Err(Error::Shape(format!(
                "operator has {} columns, argument has {} components",
                self.cols,
                p.len()
            )));
        }
        let mut memos: Vec<BTreeMap<MultiIndex, DiffExpr>> = vec![BTreeMap::new(); self.cols];
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc = DiffExpr::zero();
            for c in 0..self.cols {
                acc += self.entries[r][c].apply_memo(calc, &p[c], &mut memos[c])?;
            }
            out.push(calc.normalize(&acc)?);
        }
        Ok(out)
    }

    pub fn compose<C: Calculus + ?Sized>(&self, calc: &C, other: &CDiffOp) -> Result<CDiffOp> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CDiffOp::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = ScalarOp::zero();
                for k in 0..self.cols {
                    if self.entries[r][k].is_zero() || other.entries[k][c].is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.entries[r][k].compose(calc, &other.entries[k][c])?);
                }
                out.entries[r][c] = acc.map_coeffs(|a| calc.normalize(a))?;
            }
        }
        Ok(out)
    }

    pub fn adjoint<C: Calculus + ?Sized>(&self, calc: &C) -> Result<CDiffOp> {
        let mut out = CDiffOp::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.entries[c][r] = self.entries[r][c]
                    .adjoint(calc)?
                    .map_coeffs(|a| calc.normalize(a))?;
            }
        }
        Ok(out)
    }

    /// 𝐄_χ applied to every coefficient.
    pub fn ev<C: Calculus + ?Sized>(&self, calc: &C, chi: &[DiffExpr]) -> Result<CDiffOp> {
        self.map_coeffs(|a| ev_apply(calc, chi, a))
    }

    pub fn render(&self, space: &JetSpace) -> Vec<Vec<String>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|e| render_operator(e.coeffs(), space)).collect())
            .collect()
    }
}

/// ℓ_ψ with entry (r, c) = Σ_I ∂ψ_r/∂u_I^{deps[c]} D_I.
pub fn linearize_on(psi: &[DiffExpr], deps: &[usize]) -> CDiffOp {
    let mut op = CDiffOp::zero(psi.len(), deps.len());
    for (r, f) in psi.iter().enumerate() {
        for (c, &dep) in deps.iter().enumerate() {
            let mut s = ScalarOp::zero();
            for idx in jets_of(f, dep) {
                s.add_term(idx, f.partial(&Var::jet(dep, idx)));
            }
            op.entries[r][c] = s;
        }
    }
    op
}

pub fn linearize(psi: &[DiffExpr], space: &JetSpace) -> CDiffOp {
    let deps: Vec<usize> = (0..space.m()).collect();
    linearize_on(psi, &deps)
}

/// ℓ_ψ − ℓ_ψ*; zero exactly for Euler–Lagrange sections.
pub fn helmholtz<C: Calculus + ?Sized>(calc: &C, psi: &[DiffExpr]) -> Result<CDiffOp> {
    let l = linearize(psi, calc.space());
    l.sub(&l.adjoint(calc)?)
}

/// {φ, ψ} = ℓ_ψ(φ) − ℓ_φ(ψ) = 𝐄_φ(ψ) − 𝐄_ψ(φ).
pub fn jacobi<C: Calculus + ?Sized>(calc: &C, phi: &[DiffExpr], psi: &[DiffExpr]) -> Result<Vec<DiffExpr>> {
    if phi.len() != psi.len() {
        return Err(Error::Shape("sections of different length".into()));
    }
    let mut out = Vec::with_capacity(phi.len());
    for k in 0..phi.len() {
        let a = ev_apply(calc, phi, &psi[k])?;
        let b = ev_apply(calc, psi, &phi[k])?;
        out.push(&a - &b);
    }
    Ok(out)
}

/// ℓ_{Δ,ψ}: the operator χ ↦ 𝐄_χ(Δ)(ψ), with χ ranging over all dependents.
pub fn ell_op<C: Calculus + ?Sized>(calc: &C, delta: &CDiffOp, psi: &[DiffExpr]) -> Result<CDiffOp> {
    let m = calc.space().m();
    let deps: Vec<usize> = (0..m).collect();
    if psi.len() != delta.cols {
        return Err(Error::Shape("argument does not match operator".into()));
    }
    let mut out = CDiffOp::zero(delta.rows, m);
    for r in 0..delta.rows {
        for c in 0..delta.cols {
            for (idx, a) in delta.entries[r][c].coeffs() {
                let d = calc.derive_multi(&psi[c], idx)?;
                if d.is_zero() {
                    continue;
                }
                let la = linearize_on(std::slice::from_ref(a), &deps);
                for (k, s) in la.entries[0].iter().enumerate() {
                    if !s.is_zero() {
                        out.entries[r][k] = out.entries[r][k].add(&s.mul_left(&d));
                    }
                }
            }
        }
    }
    out.normalize(calc)
}

pub fn pairing(a: &[DiffExpr], b: &[DiffExpr]) -> DiffExpr {
    let mut acc = DiffExpr::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// ω with ⟨Δp, q⟩ − ⟨p, Δ*q⟩ = d_h ω, from iterated integration by parts.
pub fn green_form<C: Calculus + ?Sized>(
    calc: &C,
    op: &CDiffOp,
    p: &[DiffExpr],
    qv: &[DiffExpr],
) -> Result<HorizontalForm> {
    let n = calc.space().n();
    if p.len() != op.cols || qv.len() != op.rows {
        return Err(Error::Shape("green form arguments do not match operator".into()));
    }
    let mut flux = vec![DiffExpr::zero(); n];
    for r in 0..op.rows {
        for c in 0..op.cols {
            let mut memo = BTreeMap::new();
            for (idx, a) in op.entries[r][c].coeffs() {
                let mut b = &qv[r] * a;
                let mut rest = *idx;
                for i in idx.directions(n) {
                    rest = rest.minus(i).expect("positive");
                    let dp = derive_cached(calc, &p[c], &rest, &mut memo)?;
                    flux[i] += &b * &dp;
                    b = -calc.derive(&b, i)?;
                }
            }
        }
    }
    let flux = flux
        .iter()
        .map(|f| calc.normalize(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(HorizontalForm::from_flux(&flux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetalg::{d_h, parse, parse_operator, FreeJets};

    fn setup() -> (JetSpace, FreeJets) {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        (s.clone(), FreeJets::new(s))
    }

    fn op(s: &JetSpace, text: &str) -> CDiffOp {
        CDiffOp::scalar(ScalarOp::from_map(parse_operator(text, s).unwrap()))
    }

    #[test]
    fn composition_and_adjoint() {
        let (s, c) = setup();
        let dx = op(&s, "D[1,0]");
        let u = op(&s, "u");
        assert_eq!(dx.compose(&c, &u).unwrap(), op(&s, "u*D[1,0] + u[1,0]"));
        assert_eq!(dx.adjoint(&c).unwrap(), op(&s, "-D[1,0]"));
        assert_eq!(op(&s, "u*D[1,0]").adjoint(&c).unwrap(), op(&s, "-u*D[1,0] - u[1,0]"));
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s).unwrap();
        let l = linearize(&[f], &s);
        assert_eq!(l, op(&s, "D[0,1] - D[3,0] - 6*u*D[1,0] - 6*u[1,0]"));
        assert_eq!(l.adjoint(&c).unwrap(), op(&s, "-D[0,1] + D[3,0] + 6*u*D[1,0]"));
    }

    #[test]
    fn helmholtz_examples() {
        let (s, c) = setup();
        let p = |t: &str| parse(t, &s).unwrap();
        assert!(helmholtz(&c, &[p("3*u^2 + u[2,0]")]).unwrap().is_zero());
        assert_eq!(helmholtz(&c, &[p("u[1,0]")]).unwrap(), op(&s, "2*D[1,0]"));
    }

    #[test]
    fn jacobi_examples() {
        let (s, c) = setup();
        let p = |t: &str| parse(t, &s).unwrap();
        let r = jacobi(&c, &[p("u[1,0]")], &[p("6*t*u[1,0] + 1")]).unwrap();
        assert!(r[0].is_zero());
        let r = jacobi(&c, &[p("u[1,0]")], &[p("6*u*u[1,0] + u[3,0]")]).unwrap();
        assert!(r[0].is_zero());
    }

    #[test]
    fn green_identity() {
        let (s, c) = setup();
        let p = |t: &str| parse(t, &s).unwrap();
        let d2 = op(&s, "D[2,0]");
        let w = green_form(&c, &d2, &[p("u")], &[p("x*u[0,1]")]).unwrap();
        let a = p("u[1,0]*x*u[0,1] - u*(u[0,1] + x*u[1,1])");
        assert_eq!(w.flux()[0], a);
        let delta = op(&s, "u*D[1,1] + x*D[0,2] + u[1,0]");
        let (pp, qq) = (p("u^2*t"), p("u[1,0] + x"));
        let w = green_form(&c, &delta, std::slice::from_ref(&pp), std::slice::from_ref(&qq)).unwrap();
        let lhs = &(&delta.apply(&c, std::slice::from_ref(&pp)).unwrap()[0] * &qq)
            - &(&pp * &delta.adjoint(&c).unwrap().apply(&c, &[qq]).unwrap()[0]);
        assert_eq!(d_h(&c, &w).unwrap().density(), lhs);
    }
}
