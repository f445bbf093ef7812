//! JSON system descriptions: a shift, a potential table and an optional factor map.
//!
//! ```json
//! {
//!   "version": 1,
//!   "alphabet": ["0", "1", "2", "3"],
//!   "adjacency": [[1,1,1,0], [0,1,1,1], [1,1,1,0], [0,1,1,1]],
//!   "potential": { "depth": 1, "mode": "weight", "table": { "0,0": "1", ... } },
//!   "factor": { "image": ["0", "1"], "map": { "0": "0", "1": "0", "2": "1", "3": "1" } }
//! }
//! ```
//!
//! Table keys are words (comma-separated, or concatenated when every symbol
//! name is one character). Values are JSON numbers or strings; integers and
//! `"p/q"` / decimal strings are read exactly. `"constant": v` may replace the table.

use std::collections::BTreeMap;
use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value as Json};

use crate::error::{Error, Result};
use crate::factor::{Factor, FactorMap};
use crate::gibbs::{Gibbs, GibbsOptions};
use crate::potential::{Potential, PotentialMode, PotentialSpec, Value};
use crate::sft::{Alphabet, Sft};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    version: u32,
    alphabet: Vec<String>,
    adjacency: Vec<Vec<i64>>,
    potential: RawPotential,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<RawFactor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    depth: usize,
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<BTreeMap<String, Json>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constant: Option<Json>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    image: Vec<String>,
    map: BTreeMap<String, String>,
}

/// A validated system: every table key and factor key names a declared symbol,
/// and the table covers the admissible words.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemDescription {
    pub sft: Sft,
    pub potential: PotentialSpec,
    pub factor: Option<FactorMap>,
    /// Non-fatal findings, e.g. table entries for inadmissible words.
    pub warnings: Vec<String>,
}

fn invalid(key: impl Into<String>, message: impl ToString) -> Error {
    Error::Validation { key: key.into(), message: message.to_string() }
}

fn json_to_value(key: &str, v: &Json) -> Result<Value> {
    match v {
        Json::Number(n) if n.is_i64() || n.is_u64() => {
            Value::parse(&n.to_string()).ok_or_else(|| invalid(key, "unreadable number"))
        }
        Json::Number(n) => n.as_f64().filter(|x| x.is_finite()).map(Value::Float).ok_or_else(|| invalid(key, "not finite")),
        Json::String(s) => Value::parse(s).ok_or_else(|| invalid(key, format!("cannot read {s:?} as a number"))),
        _ => Err(invalid(key, "expected a number or a \"p/q\" string")),
    }
}

fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Rational(_) => Json::String(v.to_string()),
        Value::Float(x) => Number::from_f64(*x).map(Json::Number).unwrap_or(Json::Null),
    }
}

impl SystemDescription {
    /// Builds and validates a description from parts.
    pub fn new(sft: Sft, potential: PotentialSpec, factor: Option<FactorMap>) -> Result<Self> {
        let (_, warnings) = Potential::new(&sft, &potential).map_err(potential_error)?;
        if let Some(f) = &factor {
            if f.symbol_map().len() != sft.size() {
                return Err(invalid("factor.map", "does not cover the alphabet"));
            }
        }
        let mut potential = potential;
        potential.entries.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(SystemDescription { sft, potential, factor, warnings })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSystem = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        if raw.version != SCHEMA_VERSION {
            return Err(invalid("version", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", raw.version)));
        }
        let alphabet = Alphabet::new(raw.alphabet).map_err(|e| invalid("alphabet", e))?;
        let sft = Sft::new(alphabet.clone(), &raw.adjacency).map_err(|e| invalid("adjacency", e))?;

        let p = raw.potential;
        let mode = match p.mode.as_str() {
            "phi" => PotentialMode::Phi,
            "weight" => PotentialMode::Weight,
            other => return Err(invalid("potential.mode", format!("expected \"phi\" or \"weight\", got {other:?}"))),
        };
        let spec = match (p.table, p.constant) {
            (Some(_), Some(_)) => return Err(invalid("potential", "give either \"table\" or \"constant\", not both")),
            (None, None) => return Err(invalid("potential", "missing \"table\" or \"constant\"")),
            (None, Some(c)) => {
                let value = json_to_value("potential.constant", &c)?;
                PotentialSpec::constant(&sft, p.depth, mode, value)?
            }
            (Some(table), None) => {
                let mut entries = Vec::with_capacity(table.len());
                for (k, v) in &table {
                    let key = format!("potential.table[{k}]");
                    let word = alphabet.parse_word(k).map_err(|e| invalid(&key, e))?;
                    entries.push((word, json_to_value(&key, v)?));
                }
                PotentialSpec { depth: p.depth, mode, entries }
            }
        };

        let factor = match raw.factor {
            None => None,
            Some(f) => {
                let image = Alphabet::new(f.image).map_err(|e| invalid("factor.image", e))?;
                let pairs: Vec<(String, String)> = f.map.into_iter().collect();
                Some(FactorMap::new(&alphabet, image, &pairs).map_err(|e| invalid("factor.map", e))?)
            }
        };
        Self::new(sft, spec, factor)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("path", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical JSON; rationals as strings, floats as numbers.
    pub fn to_json(&self) -> Json {
        let ab = self.sft.alphabet();
        let key = |w: &[usize]| w.iter().map(|&a| ab.name(a)).collect::<Vec<_>>().join(",");
        let table = self.potential.entries.iter().map(|(w, v)| (key(w), value_to_json(v))).collect();
        let raw = RawSystem {
            version: SCHEMA_VERSION,
            alphabet: ab.names().to_vec(),
            adjacency: self.sft.adjacency_rows(),
            potential: RawPotential {
                depth: self.potential.depth,
                mode: match self.potential.mode {
                    PotentialMode::Phi => "phi".into(),
                    PotentialMode::Weight => "weight".into(),
                },
                table: Some(table),
                constant: None,
            },
            factor: self.factor.as_ref().map(|f| RawFactor {
                image: f.image().names().to_vec(),
                map: (0..ab.size()).map(|a| (ab.name(a).to_owned(), f.image().name(f.apply_symbol(a)).to_owned())).collect(),
            }),
        };
        serde_json::to_value(raw).expect("serializable")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }

    pub fn build_potential(&self) -> Result<Potential> {
        Potential::new(&self.sft, &self.potential).map(|(p, _)| p)
    }

    pub fn gibbs(&self, options: &GibbsOptions) -> Result<Gibbs> {
        Gibbs::new(self.build_potential()?, options)
    }

    pub fn factor_map(&self) -> Result<&FactorMap> {
        self.factor.as_ref().ok_or_else(|| invalid("factor", "the system has no factor map"))
    }

    pub fn build_factor(&self, options: &GibbsOptions) -> Result<Factor> {
        let map = self.factor_map()?.clone();
        Factor::new(self.gibbs(options)?, map)
    }
}

fn potential_error(e: Error) -> Error {
    match e {
        Error::NonPositiveWeight(w) => invalid(format!("potential.table[{w}]"), "non-positive weight"),
        Error::MissingEntry(w) => invalid(format!("potential.table[{w}]"), "missing entry for admissible word"),
        Error::UnknownSymbol(s) => invalid("potential.table", format!("unknown symbol {s:?}")),
        Error::Validation { key, message } => invalid(format!("potential.table[{key}]"), message),
        other => other,
    }
}

/// The two-fiber example over the 4-symbol shift with φ = 0 and 0, 1 ↦ 0; 2, 3 ↦ 1.
pub fn fixture_example2() -> SystemDescription {
    let sft = Sft::new(
        Alphabet::numbered(4),
        &[vec![1, 1, 1, 0], vec![0, 1, 1, 1], vec![1, 1, 1, 0], vec![0, 1, 1, 1]],
    )
    .expect("valid adjacency");
    let one = Value::Rational(BigRational::from_integer(1.into()));
    let potential = PotentialSpec::constant(&sft, 1, PotentialMode::Weight, one).expect("small shift");
    let map = FactorMap::from_indices(Alphabet::numbered(2), vec![0, 0, 1, 1]).expect("surjective");
    SystemDescription::new(sft, potential, Some(map)).expect("valid fixture")
}

/// Full 3-shift onto {a, b} with 0, 1 ↦ a, 2 ↦ b and a depth-1 potential with `var_1 φ = 0.4`.
pub fn fixture_three_shift() -> SystemDescription {
    let sft = Sft::full_shift(3);
    let table = [[0.0, 0.4, 0.1], [0.3, 0.0, 0.2], [0.1, 0.25, 0.0]];
    let entries = (0..3).flat_map(|i| (0..3).map(move |j| (vec![i, j], Value::Float(table[i][j])))).collect();
    let potential = PotentialSpec { depth: 1, mode: PotentialMode::Phi, entries };
    let image = Alphabet::new(["a", "b"]).expect("valid names");
    let map = FactorMap::from_indices(image, vec![0, 0, 1]).expect("surjective");
    SystemDescription::new(sft, potential, Some(map)).expect("valid fixture")
}

/// Full `n`-shift, φ = 0, identity factor.
pub fn fixture_full_shift(n: usize) -> SystemDescription {
    let sft = Sft::full_shift(n);
    let potential = PotentialSpec::zero(&sft, 1).expect("small shift");
    let map = FactorMap::identity(sft.alphabet());
    SystemDescription::new(sft, potential, Some(map)).expect("valid fixture")
}
