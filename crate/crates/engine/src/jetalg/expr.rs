use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::space::{MultiIndex, Var};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// A power product of even variables (integer exponents, possibly negative)
/// times an ordered product of distinct odd variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    even: Vec<(Var, i32)>,
    odd: Vec<Var>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn even_var(v: Var, e: i32) -> Self {
        if e == 0 {
            return Self::one();
        }
        Monomial {
            even: vec![(v, e)],
            odd: Vec::new(),
        }
    }

    pub fn odd_var(v: Var) -> Self {
        Monomial {
            even: Vec::new(),
            odd: vec![v],
        }
    }

    pub fn from_parts(mut even: Vec<(Var, i32)>, odd: Vec<Var>) -> Option<(Self, bool)> {
        even.sort();
        let mut merged: Vec<(Var, i32)> = Vec::with_capacity(even.len());
        for (v, e) in even {
            match merged.last_mut() {
                Some((w, f)) if *w == v => *f += e,
                _ => merged.push((v, e)),
            }
        }
        merged.retain(|(_, e)| *e != 0);
        let mut m = Monomial {
            even: merged,
            odd: Vec::new(),
        };
        let mut neg = false;
        for v in odd {
            let (next, s) = m.mul(&Monomial::odd_var(v))?;
            m = next;
            neg ^= s;
        }
        Some((m, neg))
    }

    pub fn even(&self) -> &[(Var, i32)] {
        &self.even
    }

    pub fn odd(&self) -> &[Var] {
        &self.odd
    }

    pub fn is_one(&self) -> bool {
        self.even.is_empty() && self.odd.is_empty()
    }

    pub fn odd_degree(&self) -> usize {
        self.odd.len()
    }

    /// Total degree counting each odd factor once; negative exponents subtract.
    pub fn degree(&self) -> i32 {
        self.even.iter().map(|(_, e)| *e).sum::<i32>() + self.odd.len() as i32
    }

    /// Sum of jet orders weighted by exponent.
    pub fn weight(&self) -> i64 {
        let mut w = 0i64;
        for (v, e) in &self.even {
            if let Var::Jet(_, i) = v {
                w += i.order() as i64 * *e as i64;
            }
        }
        for v in &self.odd {
            if let Var::Jet(_, i) = v {
                w += i.order() as i64;
            }
        }
        w
    }

    pub fn exponent(&self, v: &Var) -> i32 {
        if let Ok(k) = self.even.binary_search_by(|(w, _)| w.cmp(v)) {
            return self.even[k].1;
        }
        if self.odd.contains(v) {
            1
        } else {
            0
        }
    }

    pub fn has_negative(&self) -> bool {
        self.even.iter().any(|(_, e)| *e < 0)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.even.iter().map(|(v, _)| v).chain(self.odd.iter())
    }

    /// Product with sign: returns `None` when an odd variable repeats, otherwise
    /// the product and whether the sign flipped.
    pub fn mul(&self, other: &Monomial) -> Option<(Monomial, bool)> {
        let mut even = Vec::with_capacity(self.even.len() + other.even.len());
        let (mut i, mut j) = (0, 0);
        while i < self.even.len() && j < other.even.len() {
            let (a, ea) = self.even[i];
            let (b, eb) = other.even[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    even.push((a, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    even.push((b, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if ea + eb != 0 {
                        even.push((a, ea + eb));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        even.extend_from_slice(&self.even[i..]);
        even.extend_from_slice(&other.even[j..]);

        let mut odd = Vec::with_capacity(self.odd.len() + other.odd.len());
        let mut neg = false;
        let (mut i, mut j) = (0, 0);
        while i < self.odd.len() && j < other.odd.len() {
            let a = self.odd[i];
            let b = other.odd[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    odd.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    // b passes the remaining factors of self
                    if (self.odd.len() - i) % 2 == 1 {
                        neg = !neg;
                    }
                    odd.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => return None,
            }
        }
        odd.extend_from_slice(&self.odd[i..]);
        odd.extend_from_slice(&other.odd[j..]);
        Some((Monomial { even, odd }, neg))
    }

    /// Removes one power of an even variable (exponent may go negative).
    fn lower_even(&self, v: &Var, by: i32) -> Monomial {
        let mut m = self.clone();
        match m.even.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(k) => {
                m.even[k].1 -= by;
                if m.even[k].1 == 0 {
                    m.even.remove(k);
                }
            }
            Err(k) => m.even.insert(k, (*v, -by)),
        }
        m
    }

    fn split_odd(&self, k: usize) -> (Monomial, Monomial) {
        let left = Monomial {
            even: self.even.clone(),
            odd: self.odd[..k].to_vec(),
        };
        let right = Monomial {
            even: Vec::new(),
            odd: self.odd[k + 1..].to_vec(),
        };
        (left, right)
    }

    /// Keeps only the factors selected by `keep`; the rest is returned as the
    /// second component.  Odd factors keep their relative order; the returned
    /// sign accounts for pulling the selected odd factors to the left.
    pub fn split<F: Fn(&Var) -> bool>(&self, keep: F) -> (Monomial, Monomial, bool) {
        let mut a = Monomial::one();
        let mut b = Monomial::one();
        for (v, e) in &self.even {
            if keep(v) {
                a.even.push((*v, *e));
            } else {
                b.even.push((*v, *e));
            }
        }
        let mut neg = false;
        let mut passed = 0usize;
        for v in &self.odd {
            if keep(v) {
                if passed % 2 == 1 {
                    neg = !neg;
                }
                a.odd.push(*v);
            } else {
                b.odd.push(*v);
                passed += 1;
            }
        }
        (a, b, neg)
    }
}

/// A finite sum of rational multiples of monomials; the normal form keeps
/// no zero coefficients.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiffExpr {
    terms: BTreeMap<Monomial, Q>,
}

impl DiffExpr {
    pub fn zero() -> Self {
        DiffExpr::default()
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(q(n))
    }

    pub fn term(m: Monomial, c: Q) -> Self {
        let mut e = Self::zero();
        e.add_term(m, c);
        e
    }

    pub fn even(v: Var) -> Self {
        Self::term(Monomial::even_var(v, 1), Q::one())
    }

    pub fn odd(v: Var) -> Self {
        Self::term(Monomial::odd_var(v), Q::one())
    }

    pub fn var(v: Var, odd: bool) -> Self {
        if odd {
            Self::odd(v)
        } else {
            Self::even(v)
        }
    }

    pub fn jet(dep: usize, idx: MultiIndex, odd: bool) -> Self {
        Self::var(Var::jet(dep, idx), odd)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, Q)> {
        self.terms.into_iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn single_term(&self) -> Option<(&Monomial, &Q)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &DiffExpr, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (m, k) in &other.terms {
            self.add_term(m.clone(), k * c);
        }
    }

    pub fn scale(&self, c: &Q) -> DiffExpr {
        if c.is_zero() {
            return Self::zero();
        }
        DiffExpr {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Q) -> DiffExpr {
        let mut out = Self::zero();
        for (n, k) in &self.terms {
            if let Some((p, neg)) = n.mul(m) {
                let v = k * c;
                out.add_term(p, if neg { -v } else { v });
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> DiffExpr {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Integer power allowing negative exponents on a single even monomial.
    pub fn pow_i(&self, k: i32) -> Option<DiffExpr> {
        if k >= 0 {
            return Some(self.pow(k as u32));
        }
        let (m, c) = self.single_term()?;
        if m.odd_degree() > 0 {
            return None;
        }
        let inv_even: Vec<(Var, i32)> = m.even.iter().map(|(v, e)| (*v, -e * -k)).collect();
        let inv_c = c.recip();
        let mut cc = Q::one();
        for _ in 0..(-k) {
            cc *= &inv_c;
        }
        Some(Self::term(
            Monomial {
                even: inv_even,
                odd: Vec::new(),
            },
            cc,
        ))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            s.extend(m.vars().copied());
        }
        s
    }

    pub fn contains_var<F: Fn(&Var) -> bool>(&self, f: F) -> bool {
        self.terms.keys().any(|m| m.vars().any(&f))
    }

    pub fn has_negative_powers(&self) -> bool {
        self.terms.keys().any(|m| m.has_negative())
    }

    pub fn max_jet_order(&self) -> usize {
        self.vars()
            .iter()
            .filter_map(|v| v.as_jet().map(|(_, i)| i.order()))
            .max()
            .unwrap_or(0)
    }

    /// Partial derivative; for odd variables this is the left derivative.
    pub fn partial(&self, v: &Var) -> DiffExpr {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if let Some(k) = m.odd.iter().position(|w| w == v) {
                let mut n = m.clone();
                n.odd.remove(k);
                out.add_term(n, if k % 2 == 1 { -c.clone() } else { c.clone() });
            } else {
                let e = m.exponent(v);
                if e != 0 {
                    out.add_term(m.lower_even(v, 1), c * q(e as i64));
                }
            }
        }
        out
    }

    /// Replaces every variable `v` by `dv(v)` in the chain rule:
    /// Σ ∂e/∂v · dv(v), with odd factors replaced in place.
    pub fn derivation<F, E>(&self, mut dv: F) -> std::result::Result<DiffExpr, E>
    where
        F: FnMut(&Var) -> std::result::Result<Option<DiffExpr>, E>,
    {
        let mut cache: BTreeMap<Var, Option<DiffExpr>> = BTreeMap::new();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (v, e) in &m.even {
                if !cache.contains_key(v) {
                    cache.insert(*v, dv(v)?);
                }
                let Some(d) = &cache[v] else { continue };
                let rest = m.lower_even(v, 1);
                let cc = c * q(*e as i64);
                for (dm, dc) in &d.terms {
                    if let Some((p, neg)) = rest.mul(dm) {
                        let val = &cc * dc;
                        out.add_term(p, if neg { -val } else { val });
                    }
                }
            }
            for (k, v) in m.odd.iter().enumerate() {
                if !cache.contains_key(v) {
                    cache.insert(*v, dv(v)?);
                }
                let Some(d) = &cache[v] else { continue };
                let (left, right) = m.split_odd(k);
                for (dm, dc) in &d.terms {
                    let Some((p, n1)) = left.mul(dm) else { continue };
                    let Some((p, n2)) = p.mul(&right) else { continue };
                    let val = c * dc;
                    out.add_term(p, if n1 ^ n2 { -val } else { val });
                }
            }
        }
        Ok(out)
    }

    /// Substitutes expressions for variables; unmapped variables stay.
    pub fn substitute<F, E>(&self, mut f: F) -> std::result::Result<DiffExpr, E>
    where
        F: FnMut(&Var) -> std::result::Result<Option<DiffExpr>, E>,
        E: From<String>,
    {
        let mut cache: BTreeMap<Var, Option<DiffExpr>> = BTreeMap::new();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut acc = Self::constant(c.clone());
            for (v, e) in &m.even {
                if !cache.contains_key(v) {
                    cache.insert(*v, f(v)?);
                }
                let factor = match &cache[v] {
                    None => Self::term(Monomial::even_var(*v, *e), Q::one()),
                    Some(s) => s.pow_i(*e).ok_or_else(|| {
                        E::from("negative power of a non-monomial substitution".to_string())
                    })?,
                };
                acc = &acc * &factor;
                if acc.is_zero() {
                    break;
                }
            }
            for v in &m.odd {
                if acc.is_zero() {
                    break;
                }
                if !cache.contains_key(v) {
                    cache.insert(*v, f(v)?);
                }
                let factor = match &cache[v] {
                    None => Self::odd(*v),
                    Some(s) => s.clone(),
                };
                acc = &acc * &factor;
            }
            out += &acc;
        }
        Ok(out)
    }

    /// Groups terms by the part of each monomial selected by `keep`,
    /// yielding `e = Σ key · coeff` with `key` to the left.
    pub fn collect<F: Fn(&Var) -> bool>(&self, keep: F) -> BTreeMap<Monomial, DiffExpr> {
        let mut out: BTreeMap<Monomial, DiffExpr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (a, b, neg) = m.split(&keep);
            out.entry(a)
                .or_default()
                .add_term(b, if neg { -c.clone() } else { c.clone() });
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    /// Keeps the terms for which `pred` holds.
    pub fn filter_terms<F: Fn(&Monomial) -> bool>(&self, pred: F) -> DiffExpr {
        DiffExpr {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| pred(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn map_coefficients<F: Fn(&Q) -> Q>(&self, f: F) -> DiffExpr {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    /// Terms in display order: highest jet weight first, then degree, then the
    /// structural order of monomials.
    pub fn ordered_terms(&self) -> Vec<(&Monomial, &Q)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, _), (b, _)| {
            b.weight()
                .cmp(&a.weight())
                .then(b.degree().cmp(&a.degree()))
                .then(a.cmp(b))
        });
        v
    }

    /// Leading coefficient in display order.
    pub fn leading_coefficient(&self) -> Option<Q> {
        self.ordered_terms().first().map(|(_, c)| (*c).clone())
    }

    /// Scales so that the display-leading coefficient is positive.
    pub fn sign_normalized(&self) -> DiffExpr {
        match self.leading_coefficient() {
            Some(c) if c.is_negative() => -self,
            _ => self.clone(),
        }
    }
}

impl fmt::Debug for DiffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffExpr(")?;
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m:?}")?;
        }
        write!(f, ")")
    }
}

impl AddAssign<&DiffExpr> for DiffExpr {
    fn add_assign(&mut self, rhs: &DiffExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl AddAssign<DiffExpr> for DiffExpr {
    fn add_assign(&mut self, rhs: DiffExpr) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl SubAssign<&DiffExpr> for DiffExpr {
    fn sub_assign(&mut self, rhs: &DiffExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl SubAssign<DiffExpr> for DiffExpr {
    fn sub_assign(&mut self, rhs: DiffExpr) {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
    }
}

impl Add for &DiffExpr {
    type Output = DiffExpr;
    fn add(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for DiffExpr {
    type Output = DiffExpr;
    fn add(mut self, rhs: DiffExpr) -> DiffExpr {
        self += rhs;
        self
    }
}

impl Sub for &DiffExpr {
    type Output = DiffExpr;
    fn sub(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for DiffExpr {
    type Output = DiffExpr;
    fn sub(mut self, rhs: DiffExpr) -> DiffExpr {
        self -= rhs;
        self
    }
}

impl Neg for &DiffExpr {
    type Output = DiffExpr;
    fn neg(self) -> DiffExpr {
        DiffExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Neg for DiffExpr {
    type Output = DiffExpr;
    fn neg(self) -> DiffExpr {
        -&self
    }
}

impl Mul for &DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = DiffExpr::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                if let Some((p, neg)) = a.mul(b) {
                    let v = ca * cb;
                    out.add_term(p, if neg { -v } else { v });
                }
            }
        }
        out
    }
}

impl Mul for DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: DiffExpr) -> DiffExpr {
        &self * &rhs
    }
}

impl From<i64> for DiffExpr {
    fn from(n: i64) -> Self {
        DiffExpr::int(n)
    }
}

impl From<Q> for DiffExpr {
    fn from(c: Q) -> Self {
        DiffExpr::constant(c)
    }
}
