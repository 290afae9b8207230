use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jetalg::{parse, DiffExpr, JetSpace, Monomial, Symbol, Var, Q};
use crate::linalg::{canonical_basis, Echelon, SparseRow};

/// Bounded polynomial ansatz for an unknown section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ansatz {
    pub max_order: usize,
    pub max_degree: usize,
    pub whitelist: Option<Vec<String>>,
}

impl Ansatz {
    pub fn new(max_order: usize, max_degree: usize) -> Self {
        Ansatz {
            max_order,
            max_degree,
            whitelist: None,
        }
    }

    pub fn with_whitelist<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.whitelist = Some(names.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }

    fn allows(&self, v: &Var, space: &JetSpace) -> Result<bool> {
        let Some(list) = &self.whitelist else {
            return Ok(true);
        };
        for name in list {
            match space.lookup(name) {
                Some(Symbol::Indep(i)) if *v == Var::Indep(i as u8) => return Ok(true),
                Some(Symbol::Nonlocal(w)) if *v == Var::Nonlocal(w as u8) => return Ok(true),
                Some(Symbol::Dependent(j)) => {
                    if matches!(v, Var::Jet(d, _) if *d as usize == j) {
                        return Ok(true);
                    }
                }
                Some(_) => {}
                None => {
                    let e = parse(name, space)?;
                    let hit = e
                        .single_term()
                        .map(|(m, _)| m.vars().next() == Some(v) && m.degree() == 1)
                        .unwrap_or(false);
                    if hit {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    /// Independents, the given internal jets and all nonlocal variables,
    /// filtered by the whitelist.
    pub fn variables(&self, space: &JetSpace, internal: &[Var]) -> Result<Vec<Var>> {
        let mut all: Vec<Var> = (0..space.n()).map(|i| Var::Indep(i as u8)).collect();
        all.extend(
            internal
                .iter()
                .filter(|v| v.as_jet().map(|(_, idx)| idx.order() <= self.max_order).unwrap_or(true))
                .copied(),
        );
        all.extend((0..space.nonlocal().len()).map(|w| Var::Nonlocal(w as u8)));
        let mut out = Vec::new();
        for v in all {
            if self.allows(&v, space)? && !out.contains(&v) {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// All monomials of total degree ≤ max_degree, lowest degree first.
    pub fn monomials(&self, space: &JetSpace, vars: &[Var]) -> Vec<Monomial> {
        monomials_upto(space, vars, self.max_degree)
    }
}

pub fn monomials_upto(space: &JetSpace, vars: &[Var], degree: usize) -> Vec<Monomial> {
    fn rec(
        space: &JetSpace,
        vars: &[Var],
        pos: usize,
        left: usize,
        even: &mut Vec<(Var, i32)>,
        odd: &mut Vec<Var>,
        out: &mut Vec<Monomial>,
    ) {
        if pos == vars.len() {
            if let Some((m, _)) = Monomial::from_parts(even.clone(), odd.clone()) {
                out.push(m);
            }
            return;
        }
        let v = vars[pos];
        rec(space, vars, pos + 1, left, even, odd, out);
        if space.is_odd(&v) {
            if left >= 1 {
                odd.push(v);
                rec(space, vars, pos + 1, left - 1, even, odd, out);
                odd.pop();
            }
            return;
        }
        for e in 1..=left {
            even.push((v, e as i32));
            rec(space, vars, pos + 1, left - e, even, odd, out);
            even.pop();
        }
    }
    let mut out = Vec::new();
    rec(space, vars, 0, degree, &mut Vec::new(), &mut Vec::new(), &mut out);
    out.sort_by(|a, b| (a.degree(), a.odd_degree(), a).cmp(&(b.degree(), b.odd_degree(), b)));
    out.dedup();
    out
}

/// Solves residual(φ) = 0 for φ = Σ c_{j,k} e_j·mon_k (φ has `components`
/// entries, each drawing from `monomials[j]`). The residual map must be ℚ-linear.
pub fn solve_linear<F>(monomials: &[Vec<Monomial>], residual: F) -> Result<Vec<Vec<DiffExpr>>>
where
    F: Fn(&[DiffExpr]) -> Result<Vec<DiffExpr>> + Sync,
{
    let components = monomials.len();
    let unknowns: Vec<(usize, &Monomial)> = monomials
        .iter()
        .enumerate()
        .flat_map(|(j, ms)| ms.iter().map(move |m| (j, m)))
        .collect();
    if unknowns.is_empty() {
        return Err(Error::EmptyAnsatz);
    }
    let columns: Vec<Vec<DiffExpr>> = unknowns
        .par_iter()
        .map(|(j, m)| {
            let mut phi = vec![DiffExpr::zero(); components];
            phi[*j] = DiffExpr::term((*m).clone(), Q::one());
            residual(&phi)
        })
        .collect::<Result<_>>()?;
    let mut rows: BTreeMap<(usize, Monomial), SparseRow> = BTreeMap::new();
    for (col, res) in columns.iter().enumerate() {
        for (r, e) in res.iter().enumerate() {
            for (m, c) in e.terms() {
                rows.entry((r, m.clone())).or_default().insert(col, c.clone());
            }
        }
    }
    let ncols = unknowns.len();
    let mut ech = Echelon::new(ncols);
    for (_, row) in rows {
        ech.insert(row);
    }
    let basis = canonical_basis(&ech.nullspace(), ncols);
    Ok(basis
        .into_iter()
        .map(|v| {
            let mut phi = vec![DiffExpr::zero(); components];
            for (col, c) in v.iter().enumerate() {
                if !c.is_zero() {
                    let (j, m) = unknowns[col];
                    phi[j].add_term(m.clone(), c.clone());
                }
            }
            normalize_sign(phi)
        })
        .collect())
}

/// Whether `target` lies in the ℚ-span of `basis`.
pub fn span_contains(basis: &[Vec<DiffExpr>], target: &[DiffExpr]) -> bool {
    let mut keys: BTreeMap<(usize, Monomial), usize> = BTreeMap::new();
    let dense = |v: &[DiffExpr], keys: &mut BTreeMap<(usize, Monomial), usize>| -> SparseRow {
        let mut row = SparseRow::new();
        for (j, e) in v.iter().enumerate() {
            for (m, c) in e.terms() {
                let n = keys.len();
                let k = *keys.entry((j, m.clone())).or_insert(n);
                row.insert(k, c.clone());
            }
        }
        row
    };
    let rows: Vec<SparseRow> = basis.iter().map(|b| dense(b, &mut keys)).collect();
    let t = dense(target, &mut keys);
    let ncols = keys.len();
    let mut ech = Echelon::new(ncols);
    for r in rows {
        ech.insert(r);
    }
    !ech.insert(t)
}

/// Flips the section so that its first nonzero component has a positive
/// leading coefficient.
pub fn normalize_sign(phi: Vec<DiffExpr>) -> Vec<DiffExpr> {
    let neg = phi
        .iter()
        .find(|e| !e.is_zero())
        .and_then(|e| e.leading_coefficient())
        .map(|c| c < Q::zero())
        .unwrap_or(false);
    if neg {
        phi.into_iter().map(|e| -e).collect()
    } else {
        phi
    }
}
