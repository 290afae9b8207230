use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::One;

use crate::cdiff::{CDiffOp, ScalarOp};
use crate::error::{Error, Result};
use crate::jetalg::{
    render, total_derivative, Calculus, DiffExpr, FreeJets, JetSpace, Monomial, MultiIndex, Var,
    Q,
};

pub const DEFAULT_MAX_PROLONG: usize = 32;

/// u_lead^dep → rhs, obtained from component `comp` = c·u_lead + G with
/// rhs = −c⁻¹G (unreduced).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub dep: usize,
    pub lead: MultiIndex,
    pub comp: usize,
    pub coef_inv: DiffExpr,
    pub rhs: DiffExpr,
}

/// Normal form plus cofactors: input = normal_form + Σ_s cofactors[s](F_s).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub normal_form: DiffExpr,
    pub cofactors: Vec<ScalarOp>,
}

type CofEntry = Arc<(DiffExpr, Vec<ScalarOp>)>;

/// An equation F = 0 as an orthonomic rewrite system with lazily prolonged rules.
pub struct Presentation {
    space: JetSpace,
    free: FreeJets,
    components: Vec<DiffExpr>,
    rules: Vec<Rule>,
    normal: bool,
    max_prolong: usize,
    nf_cache: Mutex<HashMap<Var, DiffExpr>>,
    cof_cache: Mutex<HashMap<Var, CofEntry>>,
}

impl Clone for Presentation {
    fn clone(&self) -> Self {
        Presentation {
            space: self.space.clone(),
            free: self.free.clone(),
            components: self.components.clone(),
            rules: self.rules.clone(),
            normal: self.normal,
            max_prolong: self.max_prolong,
            nf_cache: Mutex::new(self.nf_cache.lock().map(|c| c.clone()).unwrap_or_default()),
            cof_cache: Mutex::new(self.cof_cache.lock().map(|c| c.clone()).unwrap_or_default()),
        }
    }
}

impl fmt::Debug for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Presentation")
            .field("space", &self.space)
            .field("rules", &self.rules)
            .finish()
    }
}

impl Presentation {
    /// Builds the rule set, then checks that each component reduces to zero
    /// and that critical pairs up to order 4 are confluent.
    pub fn new(
        space: JetSpace,
        components: Vec<DiffExpr>,
        leads: Vec<(usize, MultiIndex)>,
        normal: bool,
    ) -> Result<Self> {
        let p = Self::unchecked(space, components, leads, normal, DEFAULT_MAX_PROLONG)?;
        p.verify()?;
        Ok(p)
    }

    pub fn with_max_prolong(mut self, limit: usize) -> Self {
        self.max_prolong = limit;
        self.clear_cache();
        self
    }

    fn clear_cache(&self) {
        if let Ok(mut c) = self.nf_cache.lock() {
            c.clear();
        }
        if let Ok(mut c) = self.cof_cache.lock() {
            c.clear();
        }
    }

    /// Builds rules without the confluence check.
    pub fn unchecked(
        space: JetSpace,
        components: Vec<DiffExpr>,
        leads: Vec<(usize, MultiIndex)>,
        normal: bool,
        max_prolong: usize,
    ) -> Result<Self> {
        if components.len() != leads.len() {
            return Err(Error::Presentation(format!(
                "{} components but {} leading jets",
                components.len(),
                leads.len()
            )));
        }
        let mut rules = Vec::new();
        for (s, (f, (dep, lead))) in components.iter().zip(leads.iter()).enumerate() {
            if *dep >= space.m() {
                return Err(Error::Presentation(format!("leading jet of component {s} is not a jet")));
            }
            let odd = space.dependent()[*dep].odd;
            let v = Var::jet(*dep, *lead);
            let c = f.partial(&v);
            let lead_expr = DiffExpr::var(v, odd);
            let g = f - &(&c * &lead_expr);
            let name = space.var_name(&v);
            if c.is_zero() {
                return Err(Error::Presentation(format!(
                    "component {s} does not contain its leading jet {name}"
                )));
            }
            if g.contains_var(|w| *w == v) || c.contains_var(|w| *w == v) {
                return Err(Error::Presentation(format!(
                    "component {s} is not linear in its leading jet {name}"
                )));
            }
            let coef_inv = match c.single_term() {
                Some((m, _)) if m.odd_degree() == 0 => c.pow_i(-1).expect("monomial"),
                _ => {
                    return Err(Error::Presentation(format!(
                        "leading coefficient of {name} is not a monomial: {}",
                        render(&c, &space)
                    )))
                }
            };
            let rhs = -(&coef_inv * &g);
            rules.push(Rule {
                dep: *dep,
                lead: *lead,
                comp: s,
                coef_inv,
                rhs,
            });
        }
        for (a, ra) in rules.iter().enumerate() {
            for (b, rb) in rules.iter().enumerate() {
                if a != b && ra.dep == rb.dep && ra.lead.divides(&rb.lead) {
                    return Err(Error::Presentation(format!(
                        "leading jets {} and {} are not orthonomic",
                        space.var_name(&Var::jet(ra.dep, ra.lead)),
                        space.var_name(&Var::jet(rb.dep, rb.lead))
                    )));
                }
            }
        }
        Ok(Presentation {
            free: FreeJets::new(space.clone()),
            space,
            components,
            rules,
            normal,
            max_prolong,
            nf_cache: Mutex::new(HashMap::new()),
            cof_cache: Mutex::new(HashMap::new()),
        })
    }

    fn verify(&self) -> Result<()> {
        for r in &self.rules {
            let c = &r.coef_inv;
            if &self.reduce(c)? != c {
                return Err(Error::Presentation(
                    "leading coefficient contains reducible jets".into(),
                ));
            }
        }
        for (s, f) in self.components.iter().enumerate() {
            let nf = self.reduce(f)?;
            if !nf.is_zero() {
                return Err(Error::Presentation(format!(
                    "component {s} does not reduce to zero: {}",
                    render(&nf, &self.space)
                )));
            }
        }
        self.check_confluence()
    }

    /// The same rules over a larger space (dependents and nonlocals appended).
    pub fn over_space(&self, space: JetSpace) -> Result<Presentation> {
        if space.n() != self.space.n() || space.m() < self.space.m() {
            return Err(Error::Space("incompatible extension of the jet space".into()));
        }
        Ok(Presentation {
            free: FreeJets::new(space.clone()),
            space,
            components: self.components.clone(),
            rules: self.rules.clone(),
            normal: self.normal,
            max_prolong: self.max_prolong,
            nf_cache: Mutex::new(HashMap::new()),
            cof_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn components(&self) -> &[DiffExpr] {
        &self.components
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_normal(&self) -> bool {
        self.normal
    }

    pub fn max_prolong(&self) -> usize {
        self.max_prolong
    }

    pub fn free(&self) -> &FreeJets {
        &self.free
    }

    fn rule_for(&self, v: &Var) -> Option<&Rule> {
        let Var::Jet(j, idx) = v else { return None };
        self.rules
            .iter()
            .find(|r| r.dep == *j as usize && r.lead.divides(idx))
    }

    pub fn is_reducible(&self, v: &Var) -> bool {
        self.rule_for(v).is_some()
    }

    fn depth_limit(&self) -> usize {
        4 * self.max_prolong + 64
    }

    fn limit_error(&self, v: &Var) -> Error {
        Error::ProlongationLimit {
            jet: self.space.var_name(v),
            limit: self.max_prolong,
        }
    }

    fn nf(&self, v: &Var, depth: usize) -> Result<DiffExpr> {
        if let Some(e) = self.nf_cache.lock().ok().and_then(|c| c.get(v).cloned()) {
            return Ok(e);
        }
        if depth > self.depth_limit() {
            return Err(self.limit_error(v));
        }
        let rule = self.rule_for(v).expect("reducible");
        let Var::Jet(j, m) = *v else { unreachable!() };
        let val = if m == rule.lead {
            self.reduce_inner(&rule.rhs, depth + 1)?
        } else {
            if m.order() - rule.lead.order() > self.max_prolong {
                return Err(self.limit_error(v));
            }
            let i = (0..self.space.n())
                .find(|&i| m.get(i) > rule.lead.get(i))
                .expect("strictly larger");
            let prev = self.nf(&Var::Jet(j, m.minus(i).expect("positive")), depth + 1)?;
            let d = total_derivative(&prev, i, &self.space)?;
            self.reduce_inner(&d, depth + 1)?
        };
        if let Ok(mut c) = self.nf_cache.lock() {
            c.insert(*v, val.clone());
        }
        Ok(val)
    }

    fn reduce_inner(&self, e: &DiffExpr, depth: usize) -> Result<DiffExpr> {
        if depth > self.depth_limit() {
            return Err(Error::ProlongationLimit {
                jet: render(e, &self.space),
                limit: self.max_prolong,
            });
        }
        e.substitute(|v| -> Result<Option<DiffExpr>> {
            if self.is_reducible(v) {
                Ok(Some(self.nf(v, depth + 1)?))
            } else {
                Ok(None)
            }
        })
        .map_err(|e| match e {
            Error::Unsupported(m) => Error::Presentation(m),
            other => other,
        })
    }

    /// Normal form in internal coordinates.
    pub fn reduce(&self, e: &DiffExpr) -> Result<DiffExpr> {
        self.reduce_inner(e, 0)
    }

    fn nf_cof(&self, v: &Var, depth: usize) -> Result<CofEntry> {
        if let Some(e) = self.cof_cache.lock().ok().and_then(|c| c.get(v).cloned()) {
            return Ok(e);
        }
        if depth > self.depth_limit() {
            return Err(self.limit_error(v));
        }
        let rule = self.rule_for(v).expect("reducible");
        let Var::Jet(j, m) = *v else { unreachable!() };
        let k = self.components.len();
        let entry = if m == rule.lead {
            let (nf, mut cof) = self.reduce_cof_inner(&rule.rhs, depth + 1)?;
            cof[rule.comp] = cof[rule.comp].add(&ScalarOp::mult(rule.coef_inv.clone()));
            (nf, cof)
        } else {
            if m.order() - rule.lead.order() > self.max_prolong {
                return Err(self.limit_error(v));
            }
            let i = (0..self.space.n())
                .find(|&i| m.get(i) > rule.lead.get(i))
                .expect("strictly larger");
            let prev = self.nf_cof(&Var::Jet(j, m.minus(i).expect("positive")), depth + 1)?;
            let d = total_derivative(&prev.0, i, &self.space)?;
            let (nf, mut cof) = self.reduce_cof_inner(&d, depth + 1)?;
            let di = ScalarOp::d(MultiIndex::zero().plus(i));
            for s in 0..k {
                if !prev.1[s].is_zero() {
                    cof[s] = cof[s].add(&di.compose(&self.free, &prev.1[s])?);
                }
            }
            (nf, cof)
        };
        let entry = Arc::new(entry);
        if let Ok(mut c) = self.cof_cache.lock() {
            c.insert(*v, entry.clone());
        }
        Ok(entry)
    }

    fn reduce_cof_inner(&self, e: &DiffExpr, depth: usize) -> Result<(DiffExpr, Vec<ScalarOp>)> {
        let k = self.components.len();
        let mut cof = vec![ScalarOp::zero(); k];
        let mut nf = DiffExpr::zero();
        for (mon, c) in e.terms() {
            let mut p = DiffExpr::constant(c.clone());
            let even = mon.even();
            let odd = mon.odd();
            for (pos, (v, ex)) in even.iter().enumerate() {
                if !self.is_reducible(v) {
                    p = &p * &DiffExpr::term(Monomial::even_var(*v, *ex), Q::one());
                    continue;
                }
                if *ex < 0 {
                    return Err(Error::Presentation(format!(
                        "negative power of reducible jet {}",
                        self.space.var_name(v)
                    )));
                }
                let entry = self.nf_cof(v, depth + 1)?;
                let n = &entry.0;
                let vv = DiffExpr::even(*v);
                let mut g = DiffExpr::zero();
                for i in 0..*ex {
                    g += &vv.pow(i as u32) * &n.pow((*ex - 1 - i) as u32);
                }
                let (rest, _) = Monomial::from_parts(even[pos + 1..].to_vec(), odd.to_vec())
                    .expect("distinct odd factors");
                let h = (&p * &g).mul_monomial(&rest, &Q::one());
                for s in 0..k {
                    if !entry.1[s].is_zero() {
                        cof[s] = cof[s].add(&entry.1[s].mul_left(&h));
                    }
                }
                p = &p * &n.pow(*ex as u32);
            }
            for (pos, v) in odd.iter().enumerate() {
                let odd_v = DiffExpr::odd(*v);
                if !self.is_reducible(v) {
                    p = &p * &odd_v;
                    continue;
                }
                let entry = self.nf_cof(v, depth + 1)?;
                let right_vars = &odd[pos + 1..];
                let (right, _) = Monomial::from_parts(Vec::new(), right_vars.to_vec())
                    .expect("distinct odd factors");
                let mut h = p.mul_monomial(&right, &Q::one());
                if right_vars.len() % 2 == 1 {
                    h = -h;
                }
                for s in 0..k {
                    if !entry.1[s].is_zero() {
                        cof[s] = cof[s].add(&entry.1[s].mul_left(&h));
                    }
                }
                p = &p * &entry.0;
            }
            nf += p;
        }
        Ok((nf, cof))
    }

    /// Reduction with cofactors: e = nf + Σ_s Δ_s(F_s) on free jets.
    pub fn reduce_full(&self, e: &DiffExpr) -> Result<Reduction> {
        let (normal_form, cofactors) = self.reduce_cof_inner(e, 0)?;
        Ok(Reduction {
            normal_form,
            cofactors,
        })
    }

    /// Cofactors as a 1 × k operator row.
    pub fn cofactor_row(&self, e: &DiffExpr) -> Result<(DiffExpr, CDiffOp)> {
        let r = self.reduce_full(e)?;
        Ok((r.normal_form, CDiffOp::from_entries(vec![r.cofactors])?))
    }

    /// Reduced coefficients; applying the result equals applying then reducing.
    pub fn restrict_operator(&self, op: &CDiffOp) -> Result<CDiffOp> {
        op.normalize(self)
    }

    /// The time direction when every dependent has exactly one rule u_t → f.
    pub fn evolution_time(&self) -> Option<usize> {
        let first = self.rules.first()?;
        if first.lead.order() != 1 {
            return None;
        }
        let t = (0..self.space.n()).find(|&i| first.lead.get(i) == 1)?;
        let evens = self.space.even_dependents();
        if self.rules.len() != evens.len() {
            return None;
        }
        for dep in evens {
            let ok = self
                .rules
                .iter()
                .any(|r| r.dep == dep && r.lead == MultiIndex::unit(t));
            if !ok {
                return None;
            }
        }
        Some(t)
    }

    /// Non-reducible jets of the given dependents up to `order`.
    pub fn internal_jets(&self, deps: &[usize], order: usize) -> Vec<Var> {
        let n = self.space.n();
        let mut out = Vec::new();
        for &dep in deps {
            for k in 0..=order {
                for idx in MultiIndex::of_order(n, k) {
                    let v = Var::jet(dep, idx);
                    if !self.is_reducible(&v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    fn option_nf(&self, v: &Var, rule: &Rule, dir: Option<usize>) -> Result<DiffExpr> {
        let Var::Jet(j, m) = *v else { unreachable!() };
        match dir {
            None => self.reduce(&rule.rhs),
            Some(i) => {
                let prev = self.nf(&Var::Jet(j, m.minus(i).expect("positive")), 0)?;
                self.reduce(&total_derivative(&prev, i, &self.space)?)
            }
        }
    }

    /// Compares every derivation path for jets near the leading jets.
    pub fn check_confluence(&self) -> Result<()> {
        let n = self.space.n();
        let mut jets: Vec<Var> = Vec::new();
        for r in &self.rules {
            let bound = 4usize.max(r.lead.order() + 2);
            for k in 1..=2 {
                for extra in MultiIndex::of_order(n, k) {
                    let m = r.lead.add(&extra);
                    if m.order() <= bound {
                        jets.push(Var::jet(r.dep, m));
                    }
                }
            }
            for s in &self.rules {
                if s.dep == r.dep && s.lead != r.lead {
                    let m = r.lead.lcm(&s.lead);
                    if m.order() <= 4 {
                        jets.push(Var::jet(r.dep, m));
                    }
                }
            }
        }
        jets.sort();
        jets.dedup();
        for v in jets {
            let Var::Jet(j, m) = v else { continue };
            let mut results: Vec<DiffExpr> = Vec::new();
            for r in self.rules.iter().filter(|r| r.dep == j as usize && r.lead.divides(&m)) {
                if m == r.lead {
                    results.push(self.option_nf(&v, r, None)?);
                } else {
                    for i in 0..n {
                        if m.get(i) > r.lead.get(i) {
                            results.push(self.option_nf(&v, r, Some(i))?);
                        }
                    }
                }
            }
            for w in results.windows(2) {
                if w[0] != w[1] {
                    return Err(Error::Confluence {
                        jet: self.space.var_name(&v),
                        left: render(&w[0], &self.space),
                        right: render(&w[1], &self.space),
                    });
                }
            }
        }
        Ok(())
    }
}

impl Calculus for Presentation {
    fn space(&self) -> &JetSpace {
        &self.space
    }

    fn derive(&self, e: &DiffExpr, i: usize) -> Result<DiffExpr> {
        self.reduce(&total_derivative(e, i, &self.space)?)
    }

    fn normalize(&self, e: &DiffExpr) -> Result<DiffExpr> {
        self.reduce(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetalg::{parse, FreeJets};

    fn kdv() -> Presentation {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s).unwrap();
        Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap()
    }

    #[test]
    fn kdv_rules() {
        let e = kdv();
        let s = e.space().clone();
        let p = |t: &str| parse(t, &s).unwrap();
        assert_eq!(e.reduce(&p("u[0,1]")).unwrap(), p("6*u*u[1,0] + u[3,0]"));
        assert_eq!(
            e.reduce(&p("u[1,1]")).unwrap(),
            p("6*u[1,0]^2 + 6*u*u[2,0] + u[4,0]")
        );
        assert_eq!(e.reduce(&p("u")).unwrap(), p("u"));
        assert_eq!(e.evolution_time(), Some(1));
    }

    #[test]
    fn cofactors_are_sound() {
        let e = kdv();
        let s = e.space().clone();
        let free = FreeJets::new(s.clone());
        let p = |t: &str| parse(t, &s).unwrap();
        for text in ["u[0,1]", "u[1,1]", "u[0,2]*u + x*u[2,1]^2", "u"] {
            let input = p(text);
            let r = e.reduce_full(&input).unwrap();
            let applied = r.cofactors[0].apply(&free, &e.components()[0]).unwrap();
            assert_eq!(&r.normal_form + &applied, input, "{text}");
        }
        let r = e.reduce_full(&p("u[1,1]")).unwrap();
        assert_eq!(r.cofactors[0], ScalarOp::d(MultiIndex::from_slice(&[1, 0])));
    }

    #[test]
    fn weingarten_laurent_rule() {
        let s = JetSpace::simple(&["x", "y"], &["z"], &[]).unwrap();
        let f = parse("z^3*z[0,2] + 2*z[1,0]^2 - z*z[2,0] + 2*z^3", &s).unwrap();
        let e = Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[0, 2]))], true)
            .unwrap();
        assert_eq!(
            e.reduce(&parse("z[0,2]", &s).unwrap()).unwrap(),
            parse("-2*z^-3*z[1,0]^2 + z^-2*z[2,0] - 2", &s).unwrap()
        );
    }

    #[test]
    fn rejects_bad_leads() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1]^2 - u", &s).unwrap();
        assert!(Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).is_err());
        let f = parse("(u+1)*u[0,1] - u", &s).unwrap();
        assert!(Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).is_err());
    }
}
