//! Locally constant potentials and their transfer matrices.
//!
//! A depth-`k` potential depends on coordinates `0..=k` and is stored as a
//! table over admissible `(k+1)`-words, either as values of φ or directly as
//! weights `e^φ`. Weight tables made of rationals (and φ ≡ 0) support exact
//! arithmetic downstream.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{rational_to_f64, Matrix};
use crate::sft::{Recoding, Sft, Word};

/// A table entry: exact rational or binary float.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Rational(BigRational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Rational(q) => rational_to_f64(q),
            Value::Float(x) => *x,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Value::Rational(q) => q.is_positive(),
            Value::Float(x) => *x > 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Rational(q) => q.is_zero(),
            Value::Float(x) => *x == 0.0,
        }
    }

    /// Parses `"p/q"`, an integer, or a decimal literal (exactly, as a rational).
    pub fn parse(text: &str) -> Option<Value> {
        let t = text.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            return Some(Value::Rational(BigRational::new(p, q)));
        }
        if let Ok(i) = t.parse::<BigInt>() {
            return Some(Value::Rational(BigRational::from_integer(i)));
        }
        parse_decimal(t).map(Value::Rational).or_else(|| t.parse::<f64>().ok().filter(|x| x.is_finite()).map(Value::Float))
    }
}

fn parse_decimal(t: &str) -> Option<BigRational> {
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.')?;
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let denom = BigInt::from(10).pow(frac.len() as u32);
    Some(BigRational::new(digits * sign, denom))
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Rational(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Value::Rational(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Value::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialMode {
    /// Table holds φ.
    Phi,
    /// Table holds `e^φ`.
    Weight,
}

/// Unvalidated potential description.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub depth: usize,
    pub mode: PotentialMode,
    pub entries: Vec<(Word, Value)>,
}

impl PotentialSpec {
    /// φ ≡ 0 with the given depth.
    pub fn zero(sft: &Sft, depth: usize) -> Result<Self> {
        Self::constant(sft, depth, PotentialMode::Phi, Value::Rational(BigRational::zero()))
    }

    pub fn constant(sft: &Sft, depth: usize, mode: PotentialMode, value: Value) -> Result<Self> {
        let entries = sft
            .enumerate_words(depth + 1, crate::sft::DEFAULT_ENUMERATION_LIMIT)?
            .into_iter()
            .map(|w| (w, value.clone()))
            .collect();
        Ok(PotentialSpec { depth, mode, entries })
    }
}

#[derive(Clone, Debug)]
pub struct Potential {
    sft: Sft,
    depth: usize,
    mode: PotentialMode,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
    phi: Vec<f64>,
    exact_weights: Option<Vec<BigRational>>,
}

/// Hölder data of a potential for a chosen θ.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderEnvelope {
    pub theta: f64,
    pub holder_constant: f64,
    pub sup_norm: f64,
    pub variations: Vec<f64>,
}

impl Potential {
    /// Validates a table against the shift. Entries for inadmissible words are
    /// ignored and reported in the returned warnings.
    pub fn new(sft: &Sft, spec: &PotentialSpec) -> Result<(Self, Vec<String>)> {
        let ab = sft.alphabet();
        let words = sft.enumerate_words(spec.depth + 1, crate::sft::DEFAULT_ENUMERATION_LIMIT)?;
        let index: HashMap<Word, usize> = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut values: Vec<Option<Value>> = vec![None; words.len()];
        let mut warnings = Vec::new();
        for (word, value) in &spec.entries {
            ab.check_word(word)?;
            if word.len() != spec.depth + 1 {
                return Err(Error::Validation {
                    key: ab.render(word),
                    message: format!("expected a word of length {}", spec.depth + 1),
                });
            }
            match index.get(word) {
                Some(&i) => values[i] = Some(value.clone()),
                None => warnings.push(format!("ignoring entry for inadmissible word {}", ab.render(word))),
            }
        }
        let mut table = Vec::with_capacity(words.len());
        for (w, v) in words.iter().zip(values) {
            let v = v.ok_or_else(|| Error::MissingEntry(ab.render(w)))?;
            if spec.mode == PotentialMode::Weight && !v.is_positive() {
                return Err(Error::NonPositiveWeight(ab.render(w)));
            }
            if !v.to_f64().is_finite() {
                return Err(Error::Validation { key: ab.render(w), message: "value is not finite".into() });
            }
            table.push(v);
        }
        let phi = match spec.mode {
            PotentialMode::Phi => table.iter().map(Value::to_f64).collect(),
            PotentialMode::Weight => table.iter().map(|v| v.to_f64().ln()).collect(),
        };
        let exact_weights = match spec.mode {
            PotentialMode::Weight => table
                .iter()
                .map(|v| match v {
                    Value::Rational(q) => Some(q.clone()),
                    Value::Float(_) => None,
                })
                .collect(),
            PotentialMode::Phi if table.iter().all(Value::is_zero) => Some(vec![BigRational::one(); table.len()]),
            PotentialMode::Phi => None,
        };
        let potential = Potential { sft: sft.clone(), depth: spec.depth, mode: spec.mode, words, index, phi, exact_weights };
        Ok((potential, warnings))
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn mode(&self) -> PotentialMode {
        self.mode
    }

    pub fn supports_exact(&self) -> bool {
        self.exact_weights.is_some()
    }

    /// φ on an admissible `(k+1)`-word.
    pub fn phi(&self, word: &[usize]) -> Option<f64> {
        self.index.get(word).map(|&i| self.phi[i])
    }

    pub fn weight(&self, word: &[usize]) -> Option<f64> {
        self.phi(word).map(f64::exp)
    }

    pub fn exact_weight(&self, word: &[usize]) -> Option<BigRational> {
        let i = *self.index.get(word)?;
        self.exact_weights.as_ref().map(|w| w[i].clone())
    }

    /// `var_1, …, var_k`: the largest spread of φ among table words sharing a prefix of length n.
    pub fn variations(&self) -> Vec<f64> {
        (1..=self.depth)
            .map(|n| {
                let mut ranges: HashMap<&[usize], (f64, f64)> = HashMap::new();
                for (w, &v) in self.words.iter().zip(&self.phi) {
                    let r = ranges.entry(&w[..n]).or_insert((v, v));
                    r.0 = r.0.min(v);
                    r.1 = r.1.max(v);
                }
                ranges.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.phi.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn holder_envelope(&self, theta: f64) -> Result<HolderEnvelope> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
        }
        let variations = self.variations();
        let holder_constant = variations
            .iter()
            .enumerate()
            .map(|(i, v)| v / theta.powi(i as i32 + 1))
            .fold(0.0, f64::max);
        Ok(HolderEnvelope { theta, holder_constant, sup_norm: self.sup_norm(), variations })
    }

    /// `S_{len−k} φ`: the sum of φ over every `(k+1)`-window of the word.
    pub fn birkhoff_sum(&self, word: &[usize]) -> Result<f64> {
        if word.len() < self.depth + 1 {
            return Err(Error::WordTooShort { len: word.len(), min: self.depth + 1 });
        }
        if !self.sft.is_admissible(word)? {
            return Err(Error::Inadmissible(self.sft.alphabet().render(word)));
        }
        Ok(word.windows(self.depth + 1).map(|w| self.phi(w).expect("admissible window")).sum())
    }
}

/// Non-negative matrix of the transfer operator on the block presentation.
///
/// Orientation is source-row: `T[i][j]` is the weight of the block transition
/// `i → j`, i.e. `e^φ` of the `(L+1)`-word `block(i)·last(block(j))`. The
/// transfer operator acting on functions locally constant on blocks is `Tᵀ`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    recoding: Recoding,
    depth: usize,
    float: Matrix<f64>,
    log_weights: Matrix<f64>,
    exact: Option<Matrix<BigRational>>,
}

impl TransferMatrix {
    /// Recodes to blocks of length `max(k, 1)`.
    pub fn new(potential: &Potential, limit: usize) -> Result<Self> {
        let depth = potential.depth();
        let recoding = potential.sft().higher_block_recode(depth.max(1), limit)?;
        let m = recoding.num_blocks();
        let block_sft = recoding.block_sft().clone();
        let table_word = |i: usize, j: usize| -> Word {
            let mut w = recoding.block(i).to_vec();
            w.push(*recoding.block(j).last().expect("nonempty block"));
            w.truncate(depth + 1);
            w
        };
        let log_weights = Matrix::from_fn(m, m, |i, j| {
            if block_sft.allowed(i, j) {
                potential.phi(&table_word(i, j)).expect("table covers admissible words")
            } else {
                f64::NEG_INFINITY
            }
        });
        let float = log_weights.map(|&l| l.exp());
        let exact = potential.supports_exact().then(|| {
            Matrix::from_fn(m, m, |i, j| {
                if block_sft.allowed(i, j) {
                    potential.exact_weight(&table_word(i, j)).expect("exact table")
                } else {
                    BigRational::zero()
                }
            })
        });
        Ok(TransferMatrix { recoding, depth, float, log_weights, exact })
    }

    pub fn recoding(&self) -> &Recoding {
        &self.recoding
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn block_length(&self) -> usize {
        self.recoding.block_length()
    }

    pub fn dimension(&self) -> usize {
        self.float.rows()
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.float
    }

    pub fn exact_matrix(&self) -> Option<&Matrix<BigRational>> {
        self.exact.as_ref()
    }

    /// `ln T[i][j]`, `-∞` on forbidden transitions.
    #[inline]
    pub fn log_weight(&self, i: usize, j: usize) -> f64 {
        *self.log_weights.get(i, j)
    }

    /// `‖L^N 1‖_∞` for the operator `L = Tᵀ`.
    pub fn operator_power_sup(&self, n: usize) -> f64 {
        let mut v = vec![1.0; self.dimension()];
        for _ in 0..n {
            v = self.float.vec_mul(&v);
        }
        v.into_iter().fold(0.0, f64::max)
    }
}
