//! Turns schema objects into engine objects. Everything here runs before any
//! task is executed, so failures are input errors.

use std::collections::BTreeMap;

use jetcalc_engine::cdiff::{CDiffOp, PseudoOp, ScalarOp, TailTerm};
use jetcalc_engine::covering::{cotangent_covering, tangent_covering, Covering};
use jetcalc_engine::equation::Presentation;
use jetcalc_engine::jetalg::{parse, parse_operator, render, DiffExpr, Field, JetSpace, MultiIndex, Var};

use crate::error::CliError;
use crate::schema::{CoveringBase, CoveringSpec, EntrySpec, FieldSpec, OperatorSpec, PresentationSpec, PseudoSpec, Section, TermSpec};

fn fields(specs: &[FieldSpec]) -> Vec<Field> {
    specs
        .iter()
        .map(|f| Field {
            name: f.name().to_string(),
            odd: f.odd(),
        })
        .collect()
}

pub fn space_of(spec: &PresentationSpec) -> Result<JetSpace, CliError> {
    JetSpace::new(
        spec.independent.clone(),
        fields(&spec.dependent),
        spec.parameters.clone(),
        Vec::new(),
    )
    .map_err(CliError::engine("jet space"))
}

pub fn expr(text: &str, space: &JetSpace, ctx: &str) -> Result<DiffExpr, CliError> {
    parse(text, space).map_err(|e| CliError::Engine {
        context: format!("{ctx}: `{text}`"),
        source: e.into(),
    })
}

pub fn leading(text: &str, space: &JetSpace) -> Result<(usize, MultiIndex), CliError> {
    let e = expr(text, space, "leading jet")?;
    let jet = e.single_term().and_then(|(m, c)| {
        let mut vars = m.vars();
        match (vars.next(), vars.next(), m.degree(), c == &jetcalc_engine::jetalg::q(1)) {
            (Some(Var::Jet(d, idx)), None, 1, true) => Some((*d as usize, *idx)),
            _ => None,
        }
    });
    jet.ok_or_else(|| CliError::Invalid(format!("leading jet `{text}` is not a single jet coordinate")))
}

pub fn presentation(spec: &PresentationSpec, max_prolong: Option<usize>) -> Result<Presentation, CliError> {
    let space = space_of(spec)?;
    let mut comps = Vec::with_capacity(spec.equations.len());
    let mut leads = Vec::with_capacity(spec.equations.len());
    for (k, eq) in spec.equations.iter().enumerate() {
        comps.push(expr(&eq.expr, &space, &format!("equation {}", k + 1))?);
        leads.push(leading(&eq.leading, &space)?);
    }
    let pres = Presentation::new(space, comps, leads, spec.normal).map_err(CliError::engine("presentation"))?;
    Ok(match max_prolong.or(spec.max_prolong) {
        Some(limit) => pres.with_max_prolong(limit),
        None => pres,
    })
}

/// The space of the spatial variables: the evolution time is dropped when
/// the presentation is an evolution system.
pub fn spatial_space(pres: &Presentation) -> Result<JetSpace, CliError> {
    let space = pres.space();
    let Some(t) = pres.evolution_time() else {
        return Ok(space.clone());
    };
    let indep: Vec<String> = space
        .independent()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != t)
        .map(|(_, s)| s.clone())
        .collect();
    JetSpace::new(indep, space.dependent().to_vec(), space.parameters().to_vec(), Vec::new())
        .map_err(CliError::engine("spatial space"))
}

pub fn section(sec: &Section, space: &JetSpace, len: usize, ctx: &str) -> Result<Vec<DiffExpr>, CliError> {
    let parts = sec.parts();
    if parts.len() != len {
        return Err(CliError::Invalid(format!(
            "{ctx}: expected {len} components, got {}",
            parts.len()
        )));
    }
    parts.iter().map(|p| expr(p, space, ctx)).collect()
}

pub fn render_section(v: &[DiffExpr], space: &JetSpace) -> Section {
    Section::from_parts(v.iter().map(|e| render(e, space)).collect())
}

fn scalar_op(text: &str, space: &JetSpace, ctx: &str) -> Result<ScalarOp, CliError> {
    let map = parse_operator(text, space).map_err(|e| CliError::Engine {
        context: format!("{ctx}: `{text}`"),
        source: e.into(),
    })?;
    Ok(ScalarOp::from_map(map))
}

/// Builds a rows×cols operator; the entry list may omit zero entries.
pub fn operator(spec: &OperatorSpec, space: &JetSpace, rows: usize, cols: usize, ctx: &str) -> Result<CDiffOp, CliError> {
    let shape_err = |r: usize, c: usize| CliError::Invalid(format!("{ctx}: expected a {rows}x{cols} operator, got {r}x{c}"));
    match spec {
        OperatorSpec::Text(t) => {
            if (rows, cols) != (1, 1) {
                return Err(shape_err(1, 1));
            }
            Ok(CDiffOp::scalar(scalar_op(t, space, ctx)?))
        }
        OperatorSpec::Matrix(m) => {
            let c = m.first().map(Vec::len).unwrap_or(0);
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(shape_err(m.len(), c));
            }
            let entries = m
                .iter()
                .map(|r| r.iter().map(|t| scalar_op(t, space, ctx)).collect())
                .collect::<Result<Vec<Vec<_>>, _>>()?;
            CDiffOp::from_entries(entries).map_err(CliError::engine(ctx.to_string()))
        }
        OperatorSpec::Entries(list) => {
            let mut op = CDiffOp::zero(rows, cols);
            for e in list {
                if e.row >= rows || e.col >= cols {
                    return Err(CliError::Invalid(format!(
                        "{ctx}: entry ({}, {}) outside a {rows}x{cols} operator",
                        e.row, e.col
                    )));
                }
                let mut s = op.entry(e.row, e.col).clone();
                for t in &e.terms {
                    if t.d.len() != space.n() {
                        return Err(CliError::Invalid(format!(
                            "{ctx}: multi-index {:?} needs {} entries",
                            t.d,
                            space.n()
                        )));
                    }
                    s.add_term(MultiIndex::from_slice(&t.d), expr(&t.coef, space, ctx)?);
                }
                *op.entry_mut(e.row, e.col) = s;
            }
            Ok(op)
        }
    }
}

/// The canonical entry-list form: nonzero entries in row-major order.
pub fn operator_to_spec(op: &CDiffOp, space: &JetSpace) -> OperatorSpec {
    let n = space.n();
    let mut out = Vec::new();
    for r in 0..op.rows() {
        for c in 0..op.cols() {
            let e = op.entry(r, c);
            if e.is_zero() {
                continue;
            }
            let terms = e
                .coeffs()
                .iter()
                .map(|(idx, a)| TermSpec {
                    d: idx.exponents(n).to_vec(),
                    coef: render(a, space),
                })
                .collect();
            out.push(EntrySpec { row: r, col: c, terms });
        }
    }
    OperatorSpec::Entries(out)
}

fn direction(name: Option<&str>, space: &JetSpace) -> Result<usize, CliError> {
    match name {
        None => Ok(0),
        Some(n) => space
            .indep_index(n)
            .ok_or_else(|| CliError::Invalid(format!("unknown independent `{n}`"))),
    }
}

pub fn pseudo(spec: &PseudoSpec, space: &JetSpace, rows: usize, cols: usize, ctx: &str) -> Result<PseudoOp, CliError> {
    let local = operator(&spec.local, space, rows, cols, ctx)?;
    let tail = spec
        .tail
        .iter()
        .map(|t| {
            Ok(TailTerm {
                a: section(&t.a, space, rows, ctx)?,
                b: operator(&t.b, space, 1, cols, ctx)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let dir = direction(spec.dir.as_deref(), space)?;
    PseudoOp::new(local, tail, dir).map_err(CliError::engine(ctx.to_string()))
}

pub fn covering(spec: &CoveringSpec, pres: &Presentation) -> Result<Covering, CliError> {
    let base = match spec.base {
        CoveringBase::Equation => Covering::trivial(pres),
        CoveringBase::Tangent => tangent_covering(pres).map_err(CliError::engine("tangent covering"))?,
        CoveringBase::Cotangent => cotangent_covering(pres).map_err(CliError::engine("cotangent covering"))?,
    };
    if spec.nonlocal.is_empty() {
        if !spec.x.is_empty() {
            return Err(CliError::Invalid("covering fields given without nonlocal variables".into()));
        }
        return Ok(base);
    }
    let fs = fields(&spec.nonlocal);
    let space = base.extended_space(&fs).map_err(CliError::engine("covering space"))?;
    for key in spec.x.keys() {
        if space.indep_index(key).is_none() {
            return Err(CliError::Invalid(format!("covering field for unknown independent `{key}`")));
        }
    }
    let mut rows = vec![Vec::with_capacity(space.n()); fs.len()];
    for name in space.independent() {
        let col = spec
            .x
            .get(name)
            .ok_or_else(|| CliError::Invalid(format!("covering has no fields for `{name}`")))?;
        if col.len() != fs.len() {
            return Err(CliError::Invalid(format!(
                "covering fields for `{name}`: expected {} expressions, got {}",
                fs.len(),
                col.len()
            )));
        }
        for (w, text) in col.iter().enumerate() {
            rows[w].push(expr(text, &space, "covering field")?);
        }
    }
    base.extend(fs, rows).map_err(CliError::engine("covering"))
}

/// σ for a finite symmetry: keys name dependents or nonlocals.
pub fn finite_map(
    map: &BTreeMap<String, String>,
    space: &JetSpace,
) -> Result<BTreeMap<Var, DiffExpr>, CliError> {
    use jetcalc_engine::jetalg::Symbol;
    let mut out = BTreeMap::new();
    for (k, v) in map {
        let var = match space.lookup(k) {
            Some(Symbol::Dependent(j)) => Var::jet(j, MultiIndex::zero()),
            Some(Symbol::Nonlocal(w)) => Var::Nonlocal(w as u8),
            _ => return Err(CliError::Invalid(format!("`{k}` is not a dependent or nonlocal variable"))),
        };
        out.insert(var, expr(v, space, "finite symmetry")?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kdv() -> PresentationSpec {
        serde_json::from_str(
            r#"{"independent":["x","t"],"dependent":["u"],
                "equations":[{"expr":"u[0,1] - 6*u*u[1,0] - u[3,0]","leading":"u[0,1]"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn leading_must_be_a_jet() {
        let s = space_of(&kdv()).unwrap();
        assert_eq!(leading("u[0,1]", &s).unwrap(), (0, MultiIndex::from_slice(&[0, 1])));
        assert!(leading("2*u[0,1]", &s).is_err());
        assert!(leading("u*u[1,0]", &s).is_err());
        assert!(leading("x", &s).is_err());
    }

    #[test]
    fn spatial_space_drops_time() {
        let p = presentation(&kdv(), None).unwrap();
        assert_eq!(spatial_space(&p).unwrap().independent(), &["x".to_string()]);
    }

    #[test]
    fn operator_forms_agree() {
        let s = JetSpace::simple(&["x"], &["u", "v"], &[]).unwrap();
        let m = OperatorSpec::Matrix(vec![
            vec!["0".into(), "D[1]".into()],
            vec!["D[1]".into(), "u*D[3] + 1/2*u[1]".into()],
        ]);
        let a = operator(&m, &s, 2, 2, "A").unwrap();
        let e = operator_to_spec(&a, &s);
        assert_eq!(operator(&e, &s, 2, 2, "A").unwrap(), a);
        assert!(operator(&m, &s, 1, 2, "A").is_err());
        assert!(operator(&e, &s, 1, 1, "A").is_err());
    }

    #[test]
    fn covering_needs_every_direction() {
        let p = presentation(&kdv(), None).unwrap();
        let mut c: CoveringSpec =
            serde_json::from_str(r#"{"nonlocal":[{"name":"w","odd":false}],"X":{"x":["u"]}}"#).unwrap();
        assert!(covering(&c, &p).is_err());
        c.x.insert("t".into(), vec!["3*u^2 + u[2,0]".into()]);
        assert!(covering(&c, &p).unwrap().verify_flat().unwrap().is_flat());
    }
}
