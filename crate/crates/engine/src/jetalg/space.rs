use std::fmt;

use crate::error::{Error, Result};

/// Largest number of independent variables a jet space may declare.
pub const MAX_INDEP: usize = 6;

/// Exponent vector of a partial derivative; total derivatives commute, so the
/// order of differentiation is irrelevant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex([u8; MAX_INDEP]);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex([0; MAX_INDEP])
    }

    pub fn unit(i: usize) -> Self {
        let mut m = Self::zero();
        m.0[i] = 1;
        m
    }

    pub fn from_slice(exps: &[u8]) -> Self {
        let mut m = Self::zero();
        m.0[..exps.len()].copy_from_slice(exps);
        m
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn plus(&self, i: usize) -> Self {
        let mut m = *self;
        m.0[i] += 1;
        m
    }

    pub fn minus(&self, i: usize) -> Option<Self> {
        let mut m = *self;
        m.0[i] = m.0[i].checked_sub(1)?;
        Some(m)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = *self;
        for (a, b) in m.0.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
        m
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut m = *self;
        for (a, b) in m.0.iter_mut().zip(other.0.iter()) {
            *a = a.checked_sub(*b)?;
        }
        Some(m)
    }

    /// Componentwise `self ≤ other`.
    pub fn divides(&self, other: &Self) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn lcm(&self, other: &Self) -> Self {
        let mut m = *self;
        for (a, b) in m.0.iter_mut().zip(other.0.iter()) {
            *a = (*a).max(*b);
        }
        m
    }

    pub fn exponents(&self, n: usize) -> &[u8] {
        &self.0[..n]
    }

    /// All `K ≤ self`, in lexicographic order of exponent vectors.
    pub fn sub_indices(&self, n: usize) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero()];
        for i in 0..n {
            let mut next = Vec::new();
            for k in &out {
                for e in 0..=self.0[i] {
                    let mut m = *k;
                    m.0[i] = e;
                    next.push(m);
                }
            }
            out = next;
        }
        out
    }

    /// Product of componentwise binomial coefficients `C(self_i, k_i)`.
    pub fn binomial(&self, k: &MultiIndex) -> u64 {
        self.0
            .iter()
            .zip(k.0.iter())
            .map(|(&a, &b)| binom(a as u64, b as u64))
            .product()
    }

    /// All multi-indices of order exactly `order` in `n` variables.
    pub fn of_order(n: usize, order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = [0u8; MAX_INDEP];
        fn rec(i: usize, n: usize, left: usize, cur: &mut [u8; MAX_INDEP], out: &mut Vec<MultiIndex>) {
            if i + 1 == n {
                cur[i] = left as u8;
                out.push(MultiIndex(*cur));
                cur[i] = 0;
                return;
            }
            for e in (0..=left).rev() {
                cur[i] = e as u8;
                rec(i + 1, n, left - e, cur, out);
            }
            cur[i] = 0;
        }
        if n > 0 {
            rec(0, n, order, &mut cur, &mut out);
        }
        out
    }

    /// Directions as a sorted sequence, e.g. `[1,2]` becomes `0,1,1`.
    pub fn directions(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 0..n {
            for _ in 0..self.0[i] {
                out.push(i);
            }
        }
        out
    }
}

pub fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// A coordinate of the jet space.  The derived order puts independents first,
/// then parameters, jets (by dependent, then multi-index) and nonlocals; the
/// canonical order of odd factors is this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Indep(u8),
    Param(u8),
    Jet(u8, MultiIndex),
    Nonlocal(u8),
}

impl Var {
    pub fn jet(dep: usize, idx: MultiIndex) -> Var {
        Var::Jet(dep as u8, idx)
    }

    pub fn as_jet(&self) -> Option<(usize, MultiIndex)> {
        match self {
            Var::Jet(j, i) => Some((*j as usize, *i)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub odd: bool,
}

impl Field {
    pub fn even(name: &str) -> Self {
        Field {
            name: name.to_string(),
            odd: false,
        }
    }

    pub fn odd(name: &str) -> Self {
        Field {
            name: name.to_string(),
            odd: true,
        }
    }
}

/// What a bare identifier refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Indep(usize),
    Param(usize),
    Dependent(usize),
    Nonlocal(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JetSpace {
    independent: Vec<String>,
    dependent: Vec<Field>,
    parameters: Vec<String>,
    nonlocal: Vec<Field>,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl JetSpace {
    pub fn new(
        independent: Vec<String>,
        dependent: Vec<Field>,
        parameters: Vec<String>,
        nonlocal: Vec<Field>,
    ) -> Result<Self> {
        if independent.is_empty() {
            return Err(Error::Space("at least one independent variable required".into()));
        }
        if independent.len() > MAX_INDEP {
            return Err(Error::Space(format!(
                "at most {MAX_INDEP} independent variables supported"
            )));
        }
        if dependent.is_empty() {
            return Err(Error::Space("at least one dependent variable required".into()));
        }
        if dependent.len() > 255 || parameters.len() > 255 || nonlocal.len() > 255 {
            return Err(Error::Space("too many variables".into()));
        }
        let space = JetSpace {
            independent,
            dependent,
            parameters,
            nonlocal,
        };
        let mut seen = std::collections::HashSet::new();
        for name in space.all_names() {
            if !valid_name(name) {
                return Err(Error::Space(format!("invalid name `{name}`")));
            }
            if name == "D" {
                return Err(Error::Space("`D` is reserved for total derivatives".into()));
            }
            if !seen.insert(name.to_string()) {
                return Err(Error::Space(format!("duplicate name `{name}`")));
            }
        }
        Ok(space)
    }

    /// Convenience constructor with even dependents and no nonlocals.
    pub fn simple(independent: &[&str], dependent: &[&str], parameters: &[&str]) -> Result<Self> {
        Self::new(
            independent.iter().map(|s| s.to_string()).collect(),
            dependent.iter().map(|s| Field::even(s)).collect(),
            parameters.iter().map(|s| s.to_string()).collect(),
            Vec::new(),
        )
    }

    fn all_names(&self) -> impl Iterator<Item = &str> {
        self.independent
            .iter()
            .map(|s| s.as_str())
            .chain(self.dependent.iter().map(|f| f.name.as_str()))
            .chain(self.parameters.iter().map(|s| s.as_str()))
            .chain(self.nonlocal.iter().map(|f| f.name.as_str()))
    }

    pub fn n(&self) -> usize {
        self.independent.len()
    }

    pub fn m(&self) -> usize {
        self.dependent.len()
    }

    pub fn independent(&self) -> &[String] {
        &self.independent
    }

    pub fn dependent(&self) -> &[Field] {
        &self.dependent
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn nonlocal(&self) -> &[Field] {
        &self.nonlocal
    }

    pub fn even_dependents(&self) -> Vec<usize> {
        (0..self.m()).filter(|&j| !self.dependent[j].odd).collect()
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        if let Some(i) = self.independent.iter().position(|s| s == name) {
            return Some(Symbol::Indep(i));
        }
        if let Some(i) = self.parameters.iter().position(|s| s == name) {
            return Some(Symbol::Param(i));
        }
        if let Some(i) = self.dependent.iter().position(|f| f.name == name) {
            return Some(Symbol::Dependent(i));
        }
        if let Some(i) = self.nonlocal.iter().position(|f| f.name == name) {
            return Some(Symbol::Nonlocal(i));
        }
        None
    }

    pub fn indep_index(&self, name: &str) -> Option<usize> {
        self.independent.iter().position(|s| s == name)
    }

    pub fn dep_index(&self, name: &str) -> Option<usize> {
        self.dependent.iter().position(|f| f.name == name)
    }

    pub fn nonlocal_index(&self, name: &str) -> Option<usize> {
        self.nonlocal.iter().position(|f| f.name == name)
    }

    pub fn is_odd(&self, v: &Var) -> bool {
        match v {
            Var::Jet(j, _) => self.dependent[*j as usize].odd,
            Var::Nonlocal(w) => self.nonlocal[*w as usize].odd,
            _ => false,
        }
    }

    pub fn var_name(&self, v: &Var) -> String {
        match v {
            Var::Indep(i) => self.independent[*i as usize].clone(),
            Var::Param(i) => self.parameters[*i as usize].clone(),
            Var::Nonlocal(i) => self.nonlocal[*i as usize].name.clone(),
            Var::Jet(j, idx) => {
                let exps: Vec<String> = idx
                    .exponents(self.n())
                    .iter()
                    .map(|e| e.to_string())
                    .collect();
                format!("{}[{}]", self.dependent[*j as usize].name, exps.join(","))
            }
        }
    }

    /// A fresh name based on `base` that does not clash with existing names.
    pub fn fresh_name(&self, base: &str) -> String {
        if self.lookup(base).is_none() {
            return base.to_string();
        }
        let mut k = 1;
        loop {
            let cand = format!("{base}{k}");
            if self.lookup(&cand).is_none() {
                return cand;
            }
            k += 1;
        }
    }

    pub fn with_dependents(&self, extra: Vec<Field>) -> Result<(JetSpace, Vec<usize>)> {
        let start = self.dependent.len();
        let mut dependent = self.dependent.clone();
        let count = extra.len();
        dependent.extend(extra);
        let space = JetSpace::new(
            self.independent.clone(),
            dependent,
            self.parameters.clone(),
            self.nonlocal.clone(),
        )?;
        Ok((space, (start..start + count).collect()))
    }

    pub fn with_nonlocals(&self, extra: Vec<Field>) -> Result<(JetSpace, Vec<usize>)> {
        let start = self.nonlocal.len();
        let mut nonlocal = self.nonlocal.clone();
        let count = extra.len();
        nonlocal.extend(extra);
        let space = JetSpace::new(
            self.independent.clone(),
            self.dependent.clone(),
            self.parameters.clone(),
            nonlocal,
        )?;
        Ok((space, (start..start + count).collect()))
    }
}

impl fmt::Display for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deps: Vec<String> = self
            .dependent
            .iter()
            .map(|d| if d.odd { format!("{}(odd)", d.name) } else { d.name.clone() })
            .collect();
        write!(f, "({}; {})", self.independent.join(","), deps.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_indices_and_binomials() {
        let k = MultiIndex::from_slice(&[2, 1]);
        let subs = k.sub_indices(2);
        assert_eq!(subs.len(), 6);
        assert_eq!(k.binomial(&MultiIndex::from_slice(&[1, 1])), 2);
        assert_eq!(MultiIndex::of_order(2, 2).len(), 3);
        assert_eq!(MultiIndex::of_order(3, 2).len(), 6);
    }

    #[test]
    fn names_must_be_unique() {
        assert!(JetSpace::simple(&["x"], &["x"], &[]).is_err());
        assert!(JetSpace::simple(&["x", "t"], &["u"], &["lambda"]).is_ok());
        assert!(JetSpace::simple(&["x"], &["D"], &[]).is_err());
    }

    #[test]
    fn odd_order_is_declaration_order() {
        let a = Var::jet(0, MultiIndex::from_slice(&[3]));
        let b = Var::jet(1, MultiIndex::zero());
        assert!(a < b);
    }
}
