//! Problem-file schema. Every expression is a string in the jetalg grammar.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub independent: Vec<String>,
    pub dependent: Vec<FieldSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<String>,
    #[serde(default)]
    pub equations: Vec<EquationSpec>,
    #[serde(default = "yes")]
    pub normal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_prolong: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering: Option<CoveringSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub coverings: BTreeMap<String, CoveringSpec>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn presentation(&self) -> PresentationSpec {
        PresentationSpec {
            independent: self.independent.clone(),
            dependent: self.dependent.clone(),
            parameters: self.parameters.clone(),
            equations: self.equations.clone(),
            normal: self.normal,
            max_prolong: self.max_prolong,
        }
    }
}

fn yes() -> bool {
    true
}

/// Jet space plus equations with their leading jets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationSpec {
    pub independent: Vec<String>,
    pub dependent: Vec<FieldSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<String>,
    #[serde(default)]
    pub equations: Vec<EquationSpec>,
    #[serde(default = "yes")]
    pub normal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_prolong: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Name(String),
    Full {
        name: String,
        #[serde(default)]
        odd: bool,
    },
}

impl FieldSpec {
    pub fn name(&self) -> &str {
        match self {
            FieldSpec::Name(n) | FieldSpec::Full { name: n, .. } => n,
        }
    }

    pub fn odd(&self) -> bool {
        matches!(self, FieldSpec::Full { odd: true, .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub expr: String,
    pub leading: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoveringBase {
    #[default]
    Equation,
    Tangent,
    Cotangent,
}

/// Nonlocal variables w with D̃_x(w) = X["x"][k], one list entry per nonlocal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringSpec {
    #[serde(default)]
    pub base: CoveringBase,
    #[serde(default)]
    pub nonlocal: Vec<FieldSpec>,
    #[serde(rename = "X", default)]
    pub x: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoveringRef {
    Named(String),
    Inline(CoveringSpec),
}

/// A section: one expression for a single component, a list otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Section {
    One(String),
    Many(Vec<String>),
}

impl Section {
    pub fn parts(&self) -> Vec<&str> {
        match self {
            Section::One(s) => vec![s.as_str()],
            Section::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }

    pub fn from_parts(mut parts: Vec<String>) -> Self {
        if parts.len() == 1 {
            Section::One(parts.remove(0))
        } else {
            Section::Many(parts)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(rename = "D")]
    pub d: Vec<u8>,
    pub coef: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<TermSpec>,
}

/// A matrix operator: the canonical entry list, a matrix of operator
/// strings such as `"u*D[1] + u[1]"`, or one string for a scalar operator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Text(String),
    Entries(Vec<EntrySpec>),
    Matrix(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub a: Section,
    pub b: OperatorSpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoSpec {
    pub local: OperatorSpec,
    #[serde(default)]
    pub tail: Vec<TailSpec>,
    /// Direction of D⁻¹; the first independent when absent.
    #[serde(default)]
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionCase {
    pub section: Section,
    #[serde(default)]
    pub equals: Option<Section>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Fail,
    Obstruction,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Fail => "fail",
            Status::Obstruction => "obstruction",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub id: Option<String>,
    /// Outcome that counts as success; `ok` when absent.
    pub expect: Option<Status>,
    pub kind: TaskKind,
}

impl<'de> Deserialize<'de> for TaskSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut map = Map::<String, Value>::deserialize(d)?;
        let id = match map.remove("id") {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(D::Error::custom("task id must be a string")),
        };
        let expect = map
            .remove("expect")
            .map(serde_json::from_value::<Status>)
            .transpose()
            .map_err(D::Error::custom)?;
        let kind = serde_json::from_value(Value::Object(map)).map_err(D::Error::custom)?;
        Ok(TaskSpec { id, expect, kind })
    }
}

impl Serialize for TaskSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        let mut v = serde_json::to_value(&self.kind).map_err(S::Error::custom)?;
        if let Value::Object(map) = &mut v {
            if let Some(id) = &self.id {
                map.insert("id".into(), Value::String(id.clone()));
            }
            if let Some(e) = self.expect {
                map.insert("expect".into(), Value::String(e.as_str().into()));
            }
        }
        v.serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum TaskKind {
    Symmetries {
        order: usize,
        degree: usize,
        #[serde(default)]
        whitelist: Option<Vec<String>>,
        #[serde(default)]
        contains: Vec<Section>,
        #[serde(default)]
        dimension: Option<usize>,
    },
    Cosymmetries {
        order: usize,
        degree: usize,
        #[serde(default)]
        whitelist: Option<Vec<String>>,
        #[serde(default)]
        contains: Vec<Section>,
        #[serde(default)]
        dimension: Option<usize>,
    },
    VerifySymmetry {
        section: Section,
    },
    VerifyCosymmetry {
        section: Section,
    },
    /// Conservation laws from cosymmetries given inline or by an earlier task id.
    Currents {
        #[serde(default)]
        sections: Vec<Section>,
        #[serde(default)]
        from: Option<String>,
    },
    VerifyCurrent {
        form: BTreeMap<String, String>,
    },
    Hamiltonian {
        operator: OperatorSpec,
    },
    Compatible {
        operators: Vec<OperatorSpec>,
    },
    Magri {
        a: OperatorSpec,
        b: OperatorSpec,
        start: String,
        steps: usize,
        order: usize,
        degree: usize,
    },
    Recursion {
        operator: PseudoSpec,
        apply: Vec<RecursionCase>,
    },
    Fiberlinear {
        #[serde(default)]
        covering: Option<CoveringRef>,
        order: usize,
        degree: usize,
        #[serde(default)]
        whitelist: Option<Vec<String>>,
        #[serde(default)]
        contains: Vec<Section>,
        #[serde(default)]
        dimension: Option<usize>,
    },
    Shadow {
        #[serde(default)]
        covering: Option<CoveringRef>,
        section: Section,
    },
    VerifyFlat {
        #[serde(default)]
        covering: Option<CoveringRef>,
    },
    FiniteSymmetry {
        #[serde(default)]
        covering: Option<CoveringRef>,
        map: BTreeMap<String, String>,
    },
    Bivector {
        operator: OperatorSpec,
    },
    SchoutenOnEquation {
        operators: Vec<OperatorSpec>,
    },
    Symplectic {
        operator: OperatorSpec,
        order: usize,
        degree: usize,
    },
    Equivalence {
        target: PresentationSpec,
        sigma: Section,
        alpha: OperatorSpec,
        beta: OperatorSpec,
        alpha_prime: OperatorSpec,
        beta_prime: OperatorSpec,
        s1: OperatorSpec,
        s2: OperatorSpec,
    },
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Symmetries { .. } => "symmetries",
            TaskKind::Cosymmetries { .. } => "cosymmetries",
            TaskKind::VerifySymmetry { .. } => "verify-symmetry",
            TaskKind::VerifyCosymmetry { .. } => "verify-cosymmetry",
            TaskKind::Currents { .. } => "currents",
            TaskKind::VerifyCurrent { .. } => "verify-current",
            TaskKind::Hamiltonian { .. } => "hamiltonian",
            TaskKind::Compatible { .. } => "compatible",
            TaskKind::Magri { .. } => "magri",
            TaskKind::Recursion { .. } => "recursion",
            TaskKind::Fiberlinear { .. } => "fiberlinear",
            TaskKind::Shadow { .. } => "shadow",
            TaskKind::VerifyFlat { .. } => "verify-flat",
            TaskKind::FiniteSymmetry { .. } => "finite-symmetry",
            TaskKind::Bivector { .. } => "bivector",
            TaskKind::SchoutenOnEquation { .. } => "schouten-on-equation",
            TaskKind::Symplectic { .. } => "symplectic",
            TaskKind::Equivalence { .. } => "equivalence",
        }
    }
}
