use std::io::Write;

use gibbs_factor::linalg::rational_to_f64;
use gibbs_factor::system::SCHEMA_VERSION;
use num_rational::BigRational;
use serde_json::{json, Map, Value as Json};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// One command's output. Maps are key-sorted, so rendering is deterministic.
pub struct Report {
    pub command: &'static str,
    pub inputs: Map<String, Json>,
    pub results: Map<String, Json>,
    pub diagnostics: Map<String, Json>,
    /// Set when a checked property fails; the process then exits with 1.
    pub violation: Option<String>,
    system_text: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, system_text: Option<String>) -> Self {
        Report {
            command,
            inputs: Map::new(),
            results: Map::new(),
            diagnostics: Map::new(),
            violation: None,
            system_text,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Json>) {
        self.inputs.insert(key.into(), value.into());
    }

    pub fn result(&mut self, key: &str, value: impl Into<Json>) {
        self.results.insert(key.into(), value.into());
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Into<Json>) {
        self.diagnostics.insert(key.into(), value.into());
    }

    pub fn violate(&mut self, why: impl Into<String>) {
        self.violation.get_or_insert(why.into());
    }

    /// SHA-256 over the canonical system text, the command and its inputs.
    pub fn inputs_digest(&self) -> String {
        let mut hasher = Sha256::new();
        if let Some(text) = &self.system_text {
            hasher.update(text.as_bytes());
        }
        hasher.update([0u8]);
        hasher.update(self.command.as_bytes());
        hasher.update([0u8]);
        hasher.update(Json::Object(self.inputs.clone()).to_string().as_bytes());
        hex::encode(hasher.finalize())
    }

    pub fn to_json(&self) -> Json {
        let mut diagnostics = self.diagnostics.clone();
        if let Some(v) = &self.violation {
            diagnostics.insert("violation".into(), v.clone().into());
        }
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "inputs_digest": self.inputs_digest(),
            "results": self.results,
            "diagnostics": diagnostics,
        })
    }

    pub fn write(&self, format: Format, out: &mut impl Write) -> std::io::Result<()> {
        let doc = self.to_json();
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &doc)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut rows = Vec::new();
                flatten("", &doc, &mut rows);
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["key", "value"])?;
                for (k, v) in rows {
                    w.write_record([k, v])?;
                }
                w.flush()
            }
        }
    }
}

/// Leaves of a JSON document as `(dotted.path, text)` rows; array items are indexed.
pub fn flatten(prefix: &str, value: &Json, rows: &mut Vec<(String, String)>) {
    let child = |k: &str| if prefix.is_empty() { k.to_owned() } else { format!("{prefix}.{k}") };
    match value {
        Json::Object(map) => map.iter().for_each(|(k, v)| flatten(&child(k), v, rows)),
        Json::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&child(&i.to_string()), v, rows)),
        Json::String(s) => rows.push((prefix.to_owned(), s.clone())),
        Json::Null => rows.push((prefix.to_owned(), String::new())),
        other => rows.push((prefix.to_owned(), other.to_string())),
    }
}

/// Non-finite floats have no JSON representation; they are written as strings.
pub fn num(x: f64) -> Json {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Json {
    Json::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn rational(q: &BigRational) -> Json {
    Json::String(q.to_string())
}

pub fn rationals(qs: &[BigRational]) -> Json {
    Json::Array(qs.iter().map(rational).collect())
}

/// A measure as its natural log, a decimal rendering and, in exact mode, `p/q`.
pub fn measure(log_value: f64, exact: Option<&BigRational>) -> Json {
    let mut m = Map::new();
    m.insert("ln".into(), num(log_value));
    let value = exact.map_or(log_value.exp(), rational_to_f64);
    m.insert("value".into(), num(value));
    if let Some(q) = exact {
        m.insert("exact".into(), rational(q));
    }
    Json::Object(m)
}
