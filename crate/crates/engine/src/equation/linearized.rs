use crate::cdiff::linearize_on;
use crate::error::{Error, Result};
use crate::jetalg::{DiffExpr, Field, FreeJets, MultiIndex};

use super::presentation::Presentation;

/// The leading jet of every component, in component order.
pub fn leads(pres: &Presentation) -> Vec<(usize, MultiIndex)> {
    let mut out = vec![(0, MultiIndex::zero()); pres.components().len()];
    for r in pres.rules() {
        out[r.comp] = (r.dep, r.lead);
    }
    out
}

fn base_linearization(pres: &Presentation) -> crate::cdiff::CDiffOp {
    let deps: Vec<usize> = (0..pres.space().m()).collect();
    linearize_on(pres.components(), &deps)
}

/// ℰ extended by families v with ℓ_F(v) = 0, one per entry of `families`;
/// each family has one field per dependent of ℰ. Returns the presentation and
/// the dependent indices of every family.
pub fn tangent_system(pres: &Presentation, families: &[(String, bool)]) -> Result<(Presentation, Vec<Vec<usize>>)> {
    let space = pres.space();
    let m = space.m();
    let mut ext = space.clone();
    let mut idx = Vec::new();
    for (base, odd) in families {
        let fields: Vec<Field> = space
            .dependent()
            .iter()
            .map(|f| {
                let name = if m == 1 { base.clone() } else { format!("{base}_{}", f.name) };
                Field { name: ext.fresh_name(&name), odd: *odd }
            })
            .collect();
        let (e, ids) = ext.with_dependents(fields)?;
        ext = e;
        idx.push(ids);
    }
    let l = base_linearization(pres);
    let free = FreeJets::new(ext.clone());
    let mut comps = pres.components().to_vec();
    let mut lds = leads(pres);
    let base_leads = leads(pres);
    for ids in &idx {
        let v: Vec<DiffExpr> = ids.iter().map(|&d| DiffExpr::jet(d, MultiIndex::zero(), ext.dependent()[d].odd)).collect();
        comps.extend(l.apply(&free, &v)?);
        lds.extend(base_leads.iter().map(|(dep, lead)| (ids[*dep], *lead)));
    }
    let p = Presentation::new(ext, comps, lds, pres.is_normal())?.with_max_prolong(pres.max_prolong());
    Ok((p, idx))
}

/// ℰ extended by families p with ℓ_F*(p) = 0; each family has one field per
/// component of F.
pub fn adjoint_system(pres: &Presentation, families: &[(String, bool)]) -> Result<(Presentation, Vec<Vec<usize>>)> {
    let space = pres.space();
    let k = pres.components().len();
    let base_leads = leads(pres);
    let m = space.m();
    let mut by_dep: Vec<Option<usize>> = vec![None; m];
    for (s, (dep, _)) in base_leads.iter().enumerate() {
        if by_dep[*dep].replace(s).is_some() {
            return Err(Error::Presentation(
                "adjoint system needs one leading jet per dependent".into(),
            ));
        }
    }
    if by_dep.iter().any(Option::is_none) {
        return Err(Error::Presentation(
            "adjoint system needs one leading jet per dependent".into(),
        ));
    }
    let mut ext = space.clone();
    let mut idx = Vec::new();
    for (base, odd) in families {
        let fields: Vec<Field> = (0..k)
            .map(|s| {
                let name = if k == 1 { base.clone() } else { format!("{base}{}", s + 1) };
                Field { name: ext.fresh_name(&name), odd: *odd }
            })
            .collect();
        let (e, ids) = ext.with_dependents(fields)?;
        ext = e;
        idx.push(ids);
    }
    let free = FreeJets::new(ext.clone());
    let lstar = base_linearization(pres).adjoint(&free)?;
    let mut comps = pres.components().to_vec();
    let mut lds = base_leads.clone();
    for ids in &idx {
        let p: Vec<DiffExpr> = ids.iter().map(|&d| DiffExpr::jet(d, MultiIndex::zero(), ext.dependent()[d].odd)).collect();
        comps.extend(lstar.apply(&free, &p)?);
        for j in 0..m {
            let s = by_dep[j].expect("checked");
            lds.push((ids[s], base_leads[s].1));
        }
    }
    let p = Presentation::new(ext, comps, lds, pres.is_normal())
        .map_err(|e| Error::Presentation(format!("adjoint rules are not orthonomic: {e}")))?
        .with_max_prolong(pres.max_prolong());
    Ok((p, idx))
}
