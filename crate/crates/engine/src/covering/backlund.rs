use std::collections::BTreeMap;

use crate::cdiff::PseudoOp;
use crate::equation::Presentation;
use crate::error::{Error, Result};
use crate::jetalg::{invert_x, render, Calculus, DiffExpr, MultiIndex, Var};

use super::shadows::verify_shadow;
use super::Covering;

#[derive(Clone, Debug)]
pub struct FiniteSymmetryReport {
    /// Nonzero residuals, labelled by the identity that failed.
    pub residuals: Vec<(String, DiffExpr)>,
    pub warnings: Vec<String>,
}

impl FiniteSymmetryReport {
    pub fn holds(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// σ applied to an expression: mapped dependents are prolonged by lifted
/// derivatives, mapped nonlocals are replaced, everything else is fixed.
fn apply_map(c: &Covering, sigma: &BTreeMap<Var, DiffExpr>, e: &DiffExpr) -> Result<DiffExpr> {
    let mut memo: BTreeMap<Var, DiffExpr> = BTreeMap::new();
    let r = e.substitute(|v| -> Result<Option<DiffExpr>> {
        match v {
            Var::Nonlocal(_) => Ok(sigma.get(v).cloned()),
            Var::Jet(j, idx) => {
                let Some(img) = sigma.get(&Var::jet(*j as usize, MultiIndex::zero())) else {
                    return Ok(None);
                };
                if let Some(x) = memo.get(v) {
                    return Ok(Some(x.clone()));
                }
                let d = c.derive_multi(img, idx)?;
                memo.insert(*v, d.clone());
                Ok(Some(d))
            }
            _ => Ok(None),
        }
    })?;
    c.normalize(&r)
}

/// Whether σ preserves the covering equation: D̃_i(σ(w)) = σ(X_i^w) for every
/// nonlocal and σ(F) = 0 on ℰ̃. Keys are dependents (as jets of order zero)
/// and nonlocals; independents cannot be mapped.
pub fn verify_finite_symmetry(c: &Covering, sigma: &BTreeMap<Var, DiffExpr>) -> Result<FiniteSymmetryReport> {
    let space = c.space();
    let mut warnings = Vec::new();
    for (v, img) in sigma {
        match v {
            Var::Indep(_) | Var::Param(_) => {
                return Err(Error::Unsupported(format!(
                    "finite symmetries may not move `{}`",
                    space.var_name(v)
                )))
            }
            Var::Jet(_, idx) if *idx != MultiIndex::zero() => {
                return Err(Error::Unsupported(format!(
                    "map `{}` through its dependent instead",
                    space.var_name(v)
                )))
            }
            _ => {}
        }
        if img.partial(v).is_zero() {
            warnings.push(format!("`{}` is not invertible under the map", space.var_name(v)));
        }
    }
    let mut residuals = Vec::new();
    let sigma: BTreeMap<Var, DiffExpr> = sigma
        .iter()
        .map(|(k, e)| Ok((*k, c.normalize(e)?)))
        .collect::<Result<_>>()?;
    for (w, row) in c.fields().iter().enumerate() {
        let wv = Var::Nonlocal(w as u8);
        let img = sigma.get(&wv).cloned().unwrap_or_else(|| DiffExpr::var(wv, space.is_odd(&wv)));
        for (i, xi) in row.iter().enumerate() {
            let r = &c.derive(&img, i)? - &apply_map(c, &sigma, xi)?;
            if !r.is_zero() {
                residuals.push((format!("D_{}({})", space.independent()[i], space.var_name(&wv)), r));
            }
        }
    }
    for (s, f) in c.system().components().iter().enumerate() {
        let r = apply_map(c, &sigma, f)?;
        if !r.is_zero() {
            residuals.push((format!("equation {}", s + 1), r));
        }
    }
    Ok(FiniteSymmetryReport { residuals, warnings })
}

/// The image of one symmetry under τ″ ∘ (τ′)⁻¹.
#[derive(Clone, Debug)]
pub struct BacklundImage {
    pub input: Vec<DiffExpr>,
    /// Values assigned to the nonlocal layers, or the obstruction met.
    pub nonlocals: std::result::Result<Vec<DiffExpr>, String>,
    pub image: Option<Vec<DiffExpr>>,
    /// The same symmetry under the pseudo-differential operator, when given.
    pub reference: Option<std::result::Result<Vec<DiffExpr>, String>>,
}

impl BacklundImage {
    pub fn agrees(&self) -> bool {
        match (&self.image, &self.reference) {
            (Some(a), Some(Ok(b))) => a == b,
            (None, Some(Err(_))) => true,
            (_, None) => self.image.is_some(),
            _ => false,
        }
    }
}

/// Realizes the Bäcklund pair T(ℰ) ← ℰ̃ → T(ℰ) where τ′ forgets the
/// nonlocal layers and τ″ sends v to `shadow`. Each symmetry φ is lifted by
/// v ↦ φ and the layers by integration in direction `dir`.
pub fn recursion_as_backlund(
    pres: &Presentation,
    c: &Covering,
    shadow: &[DiffExpr],
    dir: usize,
    symmetries: &[Vec<DiffExpr>],
    reference: Option<&PseudoOp>,
) -> Result<Vec<BacklundImage>> {
    let m = pres.space().m();
    if c.fibers().len() != m || shadow.len() != m {
        return Err(Error::Shape("shadow must live on a tangent covering".into()));
    }
    if !verify_shadow(c, shadow)?.iter().all(DiffExpr::is_zero) {
        return Err(Error::Covering("the map v ↦ shadow does not preserve the tangent covering".into()));
    }
    let mut out = Vec::with_capacity(symmetries.len());
    for phi in symmetries {
        let phi: Vec<DiffExpr> = phi.iter().map(|e| pres.reduce(e)).collect::<Result<_>>()?;
        let nonlocals = lift_layers(pres, c, &phi, dir)?;
        let image = match &nonlocals {
            Ok(vals) => Some(
                shadow
                    .iter()
                    .map(|s| pres.reduce(&substitute_section(pres, c, &phi, vals, s)?))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Err(_) => None,
        };
        let reference = reference.map(|r| r.apply(pres, &phi).map_err(|e| e.to_string()));
        out.push(BacklundImage {
            input: phi,
            nonlocals,
            image,
            reference,
        });
    }
    Ok(out)
}

fn substitute_section(
    pres: &Presentation,
    c: &Covering,
    phi: &[DiffExpr],
    vals: &[DiffExpr],
    e: &DiffExpr,
) -> Result<DiffExpr> {
    e.substitute(|v| -> Result<Option<DiffExpr>> {
        match v {
            Var::Jet(j, idx) => match c.fibers().iter().position(|f| *f == *j as usize) {
                Some(k) => Ok(Some(pres.derive_multi(&phi[k], idx)?)),
                None => Ok(None),
            },
            Var::Nonlocal(w) => Ok(vals.get(*w as usize).cloned()),
            _ => Ok(None),
        }
    })
}

fn lift_layers(
    pres: &Presentation,
    c: &Covering,
    phi: &[DiffExpr],
    dir: usize,
) -> Result<std::result::Result<Vec<DiffExpr>, String>> {
    let space = pres.space();
    let n = space.n();
    let mut vals: Vec<DiffExpr> = Vec::new();
    for (w, row) in c.fields().iter().enumerate() {
        let rhs: Vec<DiffExpr> = row
            .iter()
            .map(|x| pres.reduce(&substitute_section(pres, c, phi, &vals, x)?))
            .collect::<Result<_>>()?;
        let mut val = match invert_x(&rhs[dir], dir, space) {
            Ok(v) => v,
            Err(Error::NonlocalObstruction(e)) => return Ok(Err(e)),
            Err(e) => return Err(e),
        };
        for i in (0..n).filter(|&i| i != dir) {
            let r = pres.reduce(&(&rhs[i] - &pres.derive(&val, i)?))?;
            if r.is_zero() {
                continue;
            }
            if r.contains_var(|v| matches!(v, Var::Jet(..)) || *v == Var::Indep(dir as u8)) {
                return Ok(Err(format!(
                    "{} has no local primitive: residual {}",
                    space.var_name(&Var::Nonlocal(w as u8)),
                    render(&r, space)
                )));
            }
            val += invert_x(&r, i, space)?;
        }
        vals.push(val);
    }
    Ok(Ok(vals))
}
