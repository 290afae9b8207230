//! Sparse exact linear algebra over ℚ.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::jetalg::Q;

pub type SparseRow = BTreeMap<usize, Q>;

/// Incrementally maintained reduced row echelon form.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    ncols: usize,
    pivots: BTreeMap<usize, SparseRow>,
}

fn axpy(target: &mut SparseRow, row: &SparseRow, c: &Q) {
    for (k, v) in row {
        let e = target.entry(*k).or_insert_with(Q::zero);
        *e -= v * c;
        if e.is_zero() {
            target.remove(k);
        }
    }
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            pivots: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    fn reduce(&self, row: &mut SparseRow) {
        let cols: Vec<usize> = row
            .keys()
            .copied()
            .filter(|k| self.pivots.contains_key(k))
            .collect();
        for k in cols {
            let Some(c) = row.get(&k).cloned() else { continue };
            axpy(row, &self.pivots[&k], &c);
        }
    }

    /// Adds a row; returns whether the rank grew.
    pub fn insert(&mut self, mut row: SparseRow) -> bool {
        row.retain(|_, v| !v.is_zero());
        self.reduce(&mut row);
        let Some((&p, c)) = row.iter().next() else {
            return false;
        };
        let inv = c.recip();
        for v in row.values_mut() {
            *v *= &inv;
        }
        for other in self.pivots.values_mut() {
            if let Some(c) = other.get(&p).cloned() {
                axpy(other, &row, &c);
            }
        }
        self.pivots.insert(p, row);
        true
    }

    /// Basis of {x : A x = 0}, one vector per free column in increasing order.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let mut out = Vec::new();
        for f in 0..self.ncols {
            if self.pivots.contains_key(&f) {
                continue;
            }
            let mut v = vec![Q::zero(); self.ncols];
            v[f] = Q::one();
            for (p, row) in &self.pivots {
                if let Some(c) = row.get(&f) {
                    v[*p] = -c.clone();
                }
            }
            out.push(v);
        }
        out
    }

    pub fn rows(&self) -> impl Iterator<Item = &SparseRow> {
        self.pivots.values()
    }
}

pub fn nullspace(rows: impl IntoIterator<Item = SparseRow>, ncols: usize) -> Vec<Vec<Q>> {
    let mut e = Echelon::new(ncols);
    for r in rows {
        e.insert(r);
    }
    e.nullspace()
}

/// Solves A x = b (rows paired with right-hand sides); returns a particular
/// solution with free variables set to zero and the homogeneous basis.
pub fn solve_affine(
    rows: impl IntoIterator<Item = (SparseRow, Q)>,
    ncols: usize,
) -> Option<(Vec<Q>, Vec<Vec<Q>>)> {
    let mut e = Echelon::new(ncols + 1);
    for (mut r, b) in rows {
        if !b.is_zero() {
            r.insert(ncols, b);
        }
        e.insert(r);
    }
    if e.pivots.contains_key(&ncols) {
        return None;
    }
    let mut particular = vec![Q::zero(); ncols];
    for (p, row) in &e.pivots {
        if let Some(c) = row.get(&ncols) {
            particular[*p] = c.clone();
        }
    }
    let homogeneous = e
        .nullspace()
        .into_iter()
        .filter(|v| v[ncols].is_zero())
        .map(|mut v| {
            v.truncate(ncols);
            v
        })
        .collect();
    Some((particular, homogeneous))
}

/// Scales a vector to coprime integers with a positive first nonzero entry.
pub fn primitive(v: &[Q]) -> Vec<Q> {
    let mut lcm = BigInt::one();
    for c in v {
        lcm = lcm.lcm(c.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|c| (c * Q::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for i in &ints {
        g = g.gcd(i);
    }
    if g.is_zero() {
        return v.to_vec();
    }
    let lead_neg = ints.iter().find(|i| !i.is_zero()).map(|i| i.is_negative()).unwrap_or(false);
    ints.into_iter()
        .map(|i| {
            let x = Q::from_integer(i / &g);
            if lead_neg {
                -x
            } else {
                x
            }
        })
        .collect()
}

/// Deterministic basis of the span: reduced echelon rows, each scaled to
/// primitive integers with positive leading entry.
pub fn canonical_basis(vectors: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let mut e = Echelon::new(ncols);
    for v in vectors {
        let row: SparseRow = v
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k, c.clone()))
            .collect();
        e.insert(row);
    }
    e.rows()
        .map(|r| {
            let mut dense = vec![Q::zero(); ncols];
            for (k, c) in r {
                dense[*k] = c.clone();
            }
            primitive(&dense)
        })
        .collect()
}

/// Rank of a list of dense vectors.
pub fn rank(vectors: &[Vec<Q>], ncols: usize) -> usize {
    canonical_basis(vectors, ncols).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetalg::q;

    fn row(entries: &[(usize, i64)]) -> SparseRow {
        entries.iter().map(|(k, v)| (*k, q(*v))).collect()
    }

    #[test]
    fn kernel_of_small_system() {
        let ns = nullspace(vec![row(&[(0, 1), (1, 1)]), row(&[(1, 1), (2, -1)])], 3);
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0], vec![q(-1), q(1), q(1)]);
    }

    #[test]
    fn affine_solution() {
        let (p, h) = solve_affine(vec![(row(&[(0, 2)]), q(4)), (row(&[(1, 1), (2, 1)]), q(1))], 3).unwrap();
        assert_eq!(p[0], q(2));
        assert_eq!(h.len(), 1);
        assert!(solve_affine(vec![(row(&[(0, 1)]), q(1)), (row(&[(0, 2)]), q(3))], 1).is_none());
    }

    #[test]
    fn primitive_scaling() {
        let v = vec![crate::jetalg::q_frac(-1, 2), crate::jetalg::q_frac(1, 3)];
        assert_eq!(primitive(&v), vec![q(3), q(-2)]);
    }
}
