use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::schema::{OperatorSpec, Section, Status};

pub const ENGINE: &str = "jetcalc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A labelled payload value; exactly one of the value fields is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
}

impl Item {
    fn empty(label: String) -> Self {
        Item {
            label,
            text: None,
            section: None,
            operator: None,
        }
    }

    pub fn text(label: impl Into<String>, value: impl Into<String>) -> Self {
        Item {
            text: Some(value.into()),
            ..Item::empty(label.into())
        }
    }

    pub fn section(label: impl Into<String>, value: Section) -> Self {
        Item {
            section: Some(value),
            ..Item::empty(label.into())
        }
    }

    pub fn operator(label: impl Into<String>, value: OperatorSpec) -> Self {
        Item {
            operator: Some(value),
            ..Item::empty(label.into())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskReport {
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Effective status: `ok` when the outcome matches the declared expectation.
    pub status: Status,
    pub outcome: Status,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub basis: Vec<Section>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<Item>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub payload: Vec<Item>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl TaskReport {
    pub fn new(task: &str, id: Option<String>) -> Self {
        TaskReport {
            task: task.to_string(),
            id,
            status: Status::Ok,
            outcome: Status::Ok,
            basis: Vec::new(),
            residuals: Vec::new(),
            payload: Vec::new(),
            message: None,
            elapsed_ms: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub engine: String,
    pub version: String,
    pub input_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    pub status: Status,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.status == Status::Ok {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}  input sha256 {}", self.engine, self.version, self.input_sha256);
        if let Some(p) = &self.problem {
            let _ = writeln!(out, "problem: {p}");
        }
        for (i, t) in self.tasks.iter().enumerate() {
            let id = t.id.as_ref().map(|s| format!(" ({s})")).unwrap_or_default();
            let outcome = if t.outcome != t.status {
                format!(" [outcome {}]", t.outcome.as_str())
            } else {
                String::new()
            };
            let _ = writeln!(out, "[{}] {}{id}: {}{outcome}", i + 1, t.task, t.status.as_str());
            if let Some(ms) = t.elapsed_ms {
                let _ = writeln!(out, "    elapsed: {ms} ms");
            }
            if let Some(m) = &t.message {
                let _ = writeln!(out, "    message: {m}");
            }
            if !t.basis.is_empty() {
                let _ = writeln!(out, "    basis ({}):", t.basis.len());
                for b in &t.basis {
                    let _ = writeln!(out, "      {}", section_line(b));
                }
            }
            if !t.residuals.is_empty() {
                let _ = writeln!(out, "    residuals:");
                for r in &t.residuals {
                    item_lines(&mut out, r, "      ");
                }
            }
            for p in &t.payload {
                item_lines(&mut out, p, "    ");
            }
        }
        let count = |s: Status| self.tasks.iter().filter(|t| t.status == s).count();
        let _ = writeln!(
            out,
            "summary: {} ok, {} fail, {} obstruction, {} error",
            count(Status::Ok),
            count(Status::Fail),
            count(Status::Obstruction),
            count(Status::Error)
        );
        out
    }
}

fn section_line(s: &Section) -> String {
    match s {
        Section::One(e) => e.clone(),
        Section::Many(v) => format!("({})", v.join(", ")),
    }
}

fn item_lines(out: &mut String, item: &Item, indent: &str) {
    let value = if let Some(t) = &item.text {
        t.clone()
    } else if let Some(sec) = &item.section {
        section_line(sec)
    } else if let Some(op) = &item.operator {
        serde_json::to_string(op).expect("operator serializes")
    } else {
        String::new()
    };
    let _ = writeln!(out, "{indent}{}: {value}", item.label);
}

pub fn digest(input: &[u8]) -> String {
    Sha256::digest(input).iter().map(|b| format!("{b:02x}")).collect()
}
