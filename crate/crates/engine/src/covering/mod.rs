//! Differential coverings over equations: lifted total derivatives, flatness,
//! linear coverings, shadows and Bäcklund-type constructions.

pub mod backlund;
pub mod shadows;

use rayon::prelude::*;

use crate::analysis::ConservedCurrent;
use crate::cdiff::{CDiffOp, ScalarOp};
use crate::equation::{adjoint_system, leads, tangent_system, Presentation};
use crate::error::{Error, Result};
use crate::jetalg::{invert_x, total_derivative_with, Calculus, DiffExpr, Field, JetSpace, MultiIndex, Var};

pub use backlund::{recursion_as_backlund, verify_finite_symmetry, BacklundImage, FiniteSymmetryReport};
pub use shadows::{fiber_linear_nonlocals, lifted_linearization, reconstruct_step, solve_fiberlinear, verify_shadow};

/// ρ = (p, 0) and Ω = [[0, 1], [−1, 0]] on the cotangent covering.
#[derive(Clone, Debug)]
pub struct CanonicalStructures {
    pub rho: (Vec<DiffExpr>, Vec<DiffExpr>),
    pub omega: CDiffOp,
}

/// ℰ̃ → ℰ: the system (ℰ with any fiber dependents adjoined) together with
/// nonlocal variables w^j and D̃_i(w^j) = X_i^j.
#[derive(Clone, Debug)]
pub struct Covering {
    system: Presentation,
    base_m: usize,
    base_k: usize,
    fibers: Vec<usize>,
    x: Vec<Vec<DiffExpr>>,
    canonical: Option<CanonicalStructures>,
}

#[derive(Clone, Debug)]
pub struct FlatnessReport {
    /// Nonzero [D̃_i, D̃_j](w) residuals, one vector over the nonlocals per pair.
    pub residuals: Vec<(usize, usize, Vec<DiffExpr>)>,
}

impl FlatnessReport {
    pub fn is_flat(&self) -> bool {
        self.residuals.is_empty()
    }
}

impl Covering {
    /// The identity covering of ℰ.
    pub fn trivial(pres: &Presentation) -> Self {
        Covering {
            system: pres.clone(),
            base_m: pres.space().m(),
            base_k: pres.components().len(),
            fibers: Vec::new(),
            x: vec![Vec::new(); pres.space().nonlocal().len()],
            canonical: None,
        }
    }

    pub fn system(&self) -> &Presentation {
        &self.system
    }

    pub fn base_m(&self) -> usize {
        self.base_m
    }

    /// The components of the base equation F (a prefix of the system's).
    pub fn base_components(&self) -> &[DiffExpr] {
        &self.system.components()[..self.base_k]
    }

    /// Fiber dependents; for tangent and cotangent coverings entry j
    /// belongs to base dependent (resp. component) j.
    pub fn fibers(&self) -> &[usize] {
        &self.fibers
    }

    pub fn fields(&self) -> &[Vec<DiffExpr>] {
        &self.x
    }

    pub fn canonical(&self) -> Option<&CanonicalStructures> {
        self.canonical.as_ref()
    }

    /// The space obtained by appending `fields` as nonlocals; expressions for
    /// `extend` are written over it.
    pub fn extended_space(&self, fields: &[Field]) -> Result<JetSpace> {
        Ok(self.space().with_nonlocals(fields.to_vec())?.0)
    }

    /// Adjoins nonlocals with D̃_i(w^j) = x[j][i]. Flatness is not checked here.
    pub fn extend(&self, fields: Vec<Field>, x: Vec<Vec<DiffExpr>>) -> Result<Covering> {
        let n = self.space().n();
        if fields.len() != x.len() || x.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "covering needs {n} fields for each of {} nonlocals",
                fields.len()
            )));
        }
        let (space, _) = self.space().with_nonlocals(fields)?;
        let system = self.system.over_space(space)?;
        let mut all = self.x.clone();
        for row in x {
            all.push(row.iter().map(|e| system.reduce(e)).collect::<Result<_>>()?);
        }
        Ok(Covering {
            system,
            base_m: self.base_m,
            base_k: self.base_k,
            fibers: self.fibers.clone(),
            x: all,
            canonical: self.canonical.clone(),
        })
    }

    pub fn is_abelian(&self) -> bool {
        self.x
            .iter()
            .flatten()
            .all(|e| !e.contains_var(|v| matches!(v, Var::Nonlocal(_))))
    }

    /// D̃_i D̃_j(w) − D̃_j D̃_i(w) for every pair i < j.
    pub fn verify_flat(&self) -> Result<FlatnessReport> {
        let n = self.space().n();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let results: Vec<(usize, usize, Vec<DiffExpr>)> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let r = self
                    .x
                    .iter()
                    .map(|row| Ok(&self.derive(&row[j], i)? - &self.derive(&row[i], j)?))
                    .collect::<Result<Vec<_>>>()?;
                Ok((i, j, r))
            })
            .collect::<Result<_>>()?;
        Ok(FlatnessReport {
            residuals: results
                .into_iter()
                .filter(|(_, _, r)| r.iter().any(|e| !e.is_zero()))
                .collect(),
        })
    }

    fn from_system(pres: &Presentation, system: Presentation, fibers: Vec<usize>) -> Covering {
        Covering {
            x: vec![Vec::new(); system.space().nonlocal().len()],
            system,
            base_m: pres.space().m(),
            base_k: pres.components().len(),
            fibers,
            canonical: None,
        }
    }
}

impl Calculus for Covering {
    fn space(&self) -> &JetSpace {
        self.system.space()
    }

    fn derive(&self, e: &DiffExpr, i: usize) -> Result<DiffExpr> {
        let d = total_derivative_with(e, i, self.space(), |w| {
            self.x
                .get(w)
                .and_then(|row| row.get(i))
                .cloned()
                .ok_or_else(|| Error::NonlocalPresent(self.space().nonlocal()[w].name.clone()))
        })?;
        self.system.reduce(&d)
    }

    fn normalize(&self, e: &DiffExpr) -> Result<DiffExpr> {
        self.system.reduce(e)
    }
}

/// The one-dimensional Abelian covering w_{x^i} = ω_i of a closed 1-form.
#[derive(Clone, Debug)]
pub struct CurrentCovering {
    pub covering: Covering,
    /// η with d̄_h η = ω when the current is exact (the covering is then trivial).
    pub potential: Option<DiffExpr>,
}

impl CurrentCovering {
    pub fn is_trivial(&self) -> bool {
        self.potential.is_some()
    }
}

fn find_potential(pres: &Presentation, comps: &[DiffExpr]) -> Result<Option<DiffExpr>> {
    let space = pres.space();
    let n = space.n();
    let mut eta = match invert_x(&comps[0], 0, space) {
        Ok(e) => e,
        Err(Error::NonlocalObstruction(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    for i in 1..n {
        let r = pres.reduce(&(&comps[i] - &pres.derive(&eta, i)?))?;
        if r.is_zero() {
            continue;
        }
        let explicit = !r.contains_var(|v| matches!(v, Var::Jet(..)))
            && (0..i).all(|k| !r.contains_var(|v| *v == Var::Indep(k as u8)));
        if !explicit {
            return Ok(None);
        }
        eta += invert_x(&r, i, space)?;
    }
    for (i, c) in comps.iter().enumerate() {
        if !pres.reduce(&(c - &pres.derive(&eta, i)?))?.is_zero() {
            return Ok(None);
        }
    }
    Ok(Some(eta))
}

/// w_{x^i} = ω_i for a closed horizontal 1-form ω on ℰ.
pub fn abelian_from_current(pres: &Presentation, current: &ConservedCurrent, name: &str) -> Result<CurrentCovering> {
    let form = &current.form;
    let n = pres.space().n();
    if form.degree() != 1 || form.n() != n {
        return Err(Error::Covering("an Abelian covering needs a horizontal 1-form".into()));
    }
    if !crate::analysis::verify_current(pres, form)?.is_zero() {
        return Err(Error::Covering("current is not closed on the equation".into()));
    }
    let comps: Vec<DiffExpr> = (0..n)
        .map(|i| pres.reduce(&form.get(&[i as u8])))
        .collect::<Result<_>>()?;
    let potential = find_potential(pres, &comps)?;
    let name = pres.space().fresh_name(name);
    let covering = Covering::trivial(pres).extend(vec![Field::even(&name)], vec![comps])?;
    if !covering.verify_flat()?.is_flat() {
        return Err(Error::Covering("covering from a closed current is not flat".into()));
    }
    Ok(CurrentCovering { covering, potential })
}

/// T(ℰ): even v^j with ℓ_F(v) = 0.
pub fn tangent_covering(pres: &Presentation) -> Result<Covering> {
    let (system, ids) = tangent_system(pres, &[("v".into(), false)])?;
    Ok(Covering::from_system(pres, system, ids[0].clone()))
}

/// T*(ℰ): odd p_s with ℓ_F*(p) = 0, carrying ρ and Ω.
pub fn cotangent_covering(pres: &Presentation) -> Result<Covering> {
    let (system, ids) = adjoint_system(pres, &[("p".into(), true)])?;
    let m = pres.space().m();
    let k = pres.components().len();
    let p: Vec<DiffExpr> = ids[0].iter().map(|&d| DiffExpr::jet(d, MultiIndex::zero(), true)).collect();
    let mut omega = CDiffOp::zero(m + k, m + k);
    for s in 0..k.min(m) {
        *omega.entry_mut(s, m + s) = ScalarOp::mult(DiffExpr::one());
        *omega.entry_mut(m + s, s) = ScalarOp::mult(DiffExpr::int(-1));
    }
    let mut c = Covering::from_system(pres, system, ids[0].clone());
    c.canonical = Some(CanonicalStructures {
        rho: (p, vec![DiffExpr::zero(); m]),
        omega,
    });
    Ok(c)
}

fn choose_lead(row: &[ScalarOp], base_leads: &[MultiIndex]) -> Option<(usize, MultiIndex)> {
    let mut best: Option<(usize, MultiIndex)> = None;
    for (c, op) in row.iter().enumerate() {
        for idx in op.coeffs().keys() {
            if base_leads.contains(idx) {
                return Some((c, *idx));
            }
            let better = match &best {
                None => true,
                Some((_, b)) => (idx.order(), idx) > (b.order(), b),
            };
            if better {
                best = Some((c, *idx));
            }
        }
    }
    best
}

/// The Δ-covering: fiber variables v^l with Δ(v) = 0, oriented along the
/// base's leading jets where possible and otherwise along the top jet.
pub fn delta_covering(pres: &Presentation, delta: &CDiffOp, name: &str, odd: bool) -> Result<Covering> {
    let space = pres.space();
    let mut ext = space.clone();
    let fields: Vec<Field> = (0..delta.cols())
        .map(|l| {
            let base = if delta.cols() == 1 { name.to_string() } else { format!("{name}{}", l + 1) };
            let f = Field { name: ext.fresh_name(&base), odd };
            ext = ext.with_dependents(vec![f.clone()]).expect("fresh name").0;
            f
        })
        .collect();
    let (ext, ids) = space.with_dependents(fields)?;
    let free = crate::jetalg::FreeJets::new(ext.clone());
    let v: Vec<DiffExpr> = ids.iter().map(|&d| DiffExpr::jet(d, MultiIndex::zero(), odd)).collect();
    let mut comps = pres.components().to_vec();
    comps.extend(delta.apply(&free, &v)?);
    let base_leads: Vec<MultiIndex> = leads(pres).into_iter().map(|(_, l)| l).collect();
    let mut lds = leads(pres);
    for r in 0..delta.rows() {
        let (c, idx) = choose_lead(&delta.entries()[r], &base_leads)
            .ok_or_else(|| Error::Covering(format!("row {r} of the operator is zero")))?;
        lds.push((ids[c], idx));
    }
    let system = Presentation::new(ext, comps, lds, pres.is_normal())
        .map_err(|e| Error::Covering(format!("fiber rules are not orthonomic: {e}")))?
        .with_max_prolong(pres.max_prolong());
    Ok(Covering::from_system(pres, system, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::linearization;
    use crate::jetalg::{parse, parse_operator, JetSpace};

    pub(crate) fn kdv() -> Presentation {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s).unwrap();
        Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap()
    }

    #[test]
    fn potential_kdv_is_flat() {
        let e = kdv();
        let c = Covering::trivial(&e);
        let s = c.extended_space(&[Field::even("w")]).unwrap();
        let x = vec![vec![parse("u", &s).unwrap(), parse("3*u^2 + u[2,0]", &s).unwrap()]];
        let c = c.extend(vec![Field::even("w")], x).unwrap();
        assert!(c.verify_flat().unwrap().is_flat());
        assert!(c.is_abelian());
        let broken = Covering::trivial(&e)
            .extend(vec![Field::even("w")], vec![vec![parse("u", &s).unwrap(), parse("3*u^2", &s).unwrap()]])
            .unwrap();
        assert!(!broken.verify_flat().unwrap().is_flat());
    }

    #[test]
    fn miura_family_is_flat() {
        let s0 = JetSpace::simple(&["x", "t"], &["u"], &["lambda"]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s0).unwrap();
        let e = Presentation::new(s0, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let c = Covering::trivial(&e);
        let s = c.extended_space(&[Field::even("w")]).unwrap();
        let x = parse("u + w^2 + lambda", &s).unwrap();
        let t = parse(
            "u[2,0] + 2*w*u[1,0] + 2*u^2 + 2*(w^2 - lambda)*u - 4*lambda*(w^2 + lambda)",
            &s,
        )
        .unwrap();
        let c = c.extend(vec![Field::even("w")], vec![vec![x, t]]).unwrap();
        assert!(c.verify_flat().unwrap().is_flat());
        assert!(!c.is_abelian());
    }

    #[test]
    fn miura_constant_term_must_be_lambda() {
        let s0 = JetSpace::simple(&["x", "t"], &["u"], &["lambda"]).unwrap();
        let f = parse("u[0,1] - 6*u*u[1,0] - u[3,0]", &s0).unwrap();
        let e = Presentation::new(s0, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let c = Covering::trivial(&e);
        let s = c.extended_space(&[Field::even("w")]).unwrap();
        let x = parse("u + w^2 + lambda", &s).unwrap();
        let t = parse("u[2,0] + 2*w*u[1,0] + 2*u^2 + 2*(w^2 - lambda)*u - 4*lambda*(w^2 + 1)", &s).unwrap();
        let c = c.extend(vec![Field::even("w")], vec![vec![x, t]]).unwrap();
        assert!(!c.verify_flat().unwrap().is_flat());
    }

    #[test]
    fn wahlquist_estabrook_line() {
        let s0 = JetSpace::simple(&["x", "t"], &["u"], &["gamma"]).unwrap();
        let f = parse("u[0,1] - 3*u[1,0]^2 - u[3,0]", &s0).unwrap();
        let e = Presentation::new(s0, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let c = Covering::trivial(&e);
        let s = c.extended_space(&[Field::even("w")]).unwrap();
        let x = parse("u^2 + 2*w*u + w^2 + gamma", &s).unwrap();
        let t = parse(
            "2*u*u[2,0] - u[1,0]^2 + 2*u^2*u[1,0] + 2*w*(u[2,0] + 2*u*u[1,0]) + u[1,0]*(2*w^2 - 2*gamma) \
             - 4*gamma*u^2 - 8*gamma*w*u - 4*gamma*(w^2 + gamma)",
            &s,
        )
        .unwrap();
        let c = c.extend(vec![Field::even("w")], vec![vec![x, t]]).unwrap();
        let r = c.verify_flat().unwrap();
        assert!(r.is_flat(), "{:?}", r.residuals);
    }

    #[test]
    fn camassa_holm_current_covering() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - u[2,1] - u*u[3,0] - 2*u[1,0]*u[2,0] + 3*u*u[1,0]", &s).unwrap();
        let e = Presentation::new(s.clone(), vec![f], vec![(0, MultiIndex::from_slice(&[2, 1]))], true).unwrap();
        let form = crate::jetalg::HorizontalForm::current(
            parse("u - u[2,0]", &s).unwrap(),
            parse("1/2*(u[1,0]^2 - 3*u^2 + 2*u*u[2,0])", &s).unwrap(),
        );
        let cc = abelian_from_current(&e, &ConservedCurrent { form, section: None }, "w").unwrap();
        assert!(!cc.is_trivial());
        assert!(cc.covering.verify_flat().unwrap().is_flat());
    }

    #[test]
    fn kdv_currents() {
        let e = kdv();
        let s = e.space().clone();
        let mass = crate::jetalg::HorizontalForm::current(
            parse("u", &s).unwrap(),
            parse("3*u^2 + u[2,0]", &s).unwrap(),
        );
        let cc = abelian_from_current(&e, &ConservedCurrent { form: mass, section: None }, "w").unwrap();
        assert!(!cc.is_trivial());
        let w = cc.covering.space().nonlocal_index("w").unwrap();
        assert_eq!(cc.covering.fields()[w][0], parse("u", &s).unwrap());
        let eta = parse("u^2 + x*u[1,0]", &s).unwrap();
        let exact = crate::jetalg::HorizontalForm::current(e.derive(&eta, 0).unwrap(), e.derive(&eta, 1).unwrap());
        let cc = abelian_from_current(&e, &ConservedCurrent { form: exact, section: None }, "w").unwrap();
        assert!(cc.is_trivial());
        let open = crate::jetalg::HorizontalForm::current(parse("u", &s).unwrap(), parse("u", &s).unwrap());
        assert!(abelian_from_current(&e, &ConservedCurrent { form: open, section: None }, "w").is_err());
    }

    #[test]
    fn tangent_and_cotangent_rules() {
        let e = kdv();
        let t = tangent_covering(&e).unwrap();
        let v = t.fibers()[0];
        let s = t.space().clone();
        let vt = DiffExpr::jet(v, MultiIndex::from_slice(&[0, 1]), false);
        assert_eq!(
            t.normalize(&vt).unwrap(),
            parse("6*u[1,0]*v + 6*u*v[1,0] + v[3,0]", &s).unwrap()
        );
        let c = cotangent_covering(&e).unwrap();
        let p = c.fibers()[0];
        let s = c.space().clone();
        let pt = DiffExpr::jet(p, MultiIndex::from_slice(&[0, 1]), true);
        assert_eq!(c.normalize(&pt).unwrap(), parse("p[3,0] + 6*u*p[1,0]", &s).unwrap());
        let can = c.canonical().unwrap();
        assert_eq!(can.rho.0, vec![DiffExpr::jet(p, MultiIndex::zero(), true)]);
        assert!(can.rho.1[0].is_zero());
    }

    #[test]
    fn heat_tangent_rule() {
        let s = JetSpace::simple(&["x", "t"], &["u"], &[]).unwrap();
        let f = parse("u[0,1] - u[2,0]", &s).unwrap();
        let e = Presentation::new(s, vec![f], vec![(0, MultiIndex::from_slice(&[0, 1]))], true).unwrap();
        let t = tangent_covering(&e).unwrap();
        let vt = DiffExpr::jet(t.fibers()[0], MultiIndex::from_slice(&[0, 1]), false);
        assert_eq!(t.normalize(&vt).unwrap(), parse("v[2,0]", t.space()).unwrap());
    }

    #[test]
    fn delta_coverings_match_linear_ones() {
        let e = kdv();
        let l = linearization(&e).unwrap();
        let d = delta_covering(&e, &l, "v", false).unwrap();
        let t = tangent_covering(&e).unwrap();
        let vt = |c: &Covering| {
            let v = DiffExpr::jet(c.fibers()[0], MultiIndex::from_slice(&[0, 1]), false);
            c.normalize(&v).unwrap()
        };
        assert_eq!(vt(&d), vt(&t));
        let la = l.adjoint(&e).unwrap();
        let d = delta_covering(&e, &la, "p", true).unwrap();
        let c = cotangent_covering(&e).unwrap();
        let pt = |c: &Covering| {
            let p = DiffExpr::jet(c.fibers()[0], MultiIndex::from_slice(&[0, 1]), true);
            c.normalize(&p).unwrap()
        };
        assert_eq!(pt(&d), pt(&c));
        let dx = CDiffOp::scalar(ScalarOp::from_map(parse_operator("D[1,0]", e.space()).unwrap()));
        let d = delta_covering(&e, &dx, "v", false).unwrap();
        let vx = DiffExpr::jet(d.fibers()[0], MultiIndex::from_slice(&[1, 0]), false);
        assert!(d.normalize(&vx).unwrap().is_zero());
    }
}
