//! The JSON result document and the plain-text rendering.

use std::time::Instant;

use causa::{CausalModel, CauseWitness, Rational, VarId};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub struct Format {
    pub json: bool,
    pub decimal: Option<usize>,
}

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Boolean,
    Rational,
    Integer,
    Text,
}

#[derive(Serialize, Debug)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Serialize, Debug)]
pub struct ResultDocument {
    pub command: String,
    pub query: Map<String, Value>,
    pub kind: Kind,
    /// `null` when the answer is inconclusive.
    pub value: Value,
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    pub diagnostics: Vec<String>,
    pub timing: Timing,
}

impl ResultDocument {
    pub fn new(command: &str, kind: Kind) -> Self {
        ResultDocument {
            command: command.to_string(),
            query: Map::new(),
            kind,
            value: Value::Null,
            witness: None,
            details: None,
            diagnostics: Vec::new(),
            timing: Timing { elapsed_ms: 0.0 },
        }
    }

    pub fn echo(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.query.insert(key.to_string(), value.into());
        self
    }

    pub fn value(mut self, value: impl Into<Value>) -> Self {
        self.value = value.into();
        self
    }

    pub fn witness(mut self, witness: Option<Value>) -> Self {
        self.witness = witness;
        self
    }

    pub fn details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn diagnostics(mut self, diagnostics: Vec<String>) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    /// Stamps the elapsed time since `started` and serializes.
    pub fn render(mut self, started: Instant) -> String {
        self.timing.elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
        let mut s = serde_json::to_string_pretty(&self).expect("document serializes");
        s.push('\n');
        s
    }
}

pub fn rational_json(r: &Rational, format: &Format) -> Value {
    let mut v = json!({ "num": r.numer().to_string(), "den": r.denom().to_string() });
    if let Some(d) = format.decimal {
        v["decimal"] = Value::String(r.to_decimal(d));
    }
    v
}

pub fn rational_text(r: &Rational, format: &Format) -> String {
    match format.decimal {
        Some(d) => format!("{r} ({})", r.to_decimal(d)),
        None => r.to_string(),
    }
}

fn pairs_json(model: &CausalModel, pairs: impl Iterator<Item = (VarId, i64)>) -> Value {
    pairs
        .map(|(v, x)| json!({ "var": model.name(v), "value": x }))
        .collect()
}

pub fn witness_json(model: &CausalModel, cause: VarId, w: &CauseWitness) -> Value {
    json!({
        "cause": model.name(cause),
        "x_prime": w.x_prime,
        "changed": pairs_json(model, w.changed_pairs()),
        "frozen": pairs_json(model, w.frozen_pairs()),
        "k": w.k(),
    })
}

pub fn witness_text(model: &CausalModel, cause: VarId, w: &CauseWitness) -> String {
    format!("witness: {}\n", w.display(model, cause))
}
