//! One-sided shifts of finite type given by a 0/1 transition matrix.
//!
//! Symbols are dense indices `0..n`; names only matter at I/O boundaries.
//! A transition `i → j` is allowed iff `A[i][j] = 1`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default cap on the number of words any enumeration may produce.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 5_000_000;

/// A word over some alphabet, as symbol indices.
pub type Word = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidAlphabet(format!("symbol {i} has an empty name")));
            }
            if name.contains(',') || name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidAlphabet(format!("symbol name {name:?} contains a separator")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {name:?}")));
            }
        }
        Ok(Alphabet { names, index })
    }

    /// Symbols named `"0"`, `"1"`, ….
    pub fn numbered(size: usize) -> Self {
        Alphabet::new((0..size).map(|i| i.to_string())).expect("numbered names are valid")
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownSymbol(name.to_owned()))
    }

    fn single_char(&self) -> bool {
        self.names.iter().all(|n| n.chars().count() == 1)
    }

    /// Comma-separated names, or bare concatenation when every name is one character.
    pub fn render(&self, word: &[usize]) -> String {
        let sep = if self.single_char() { "" } else { "," };
        word.iter().map(|&i| self.names[i].as_str()).collect::<Vec<_>>().join(sep)
    }

    /// Inverse of [`Alphabet::render`]; commas are always accepted.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        if text.contains(',') || !self.single_char() {
            text.split(',').map(|s| self.index_of(s.trim())).collect()
        } else {
            text.chars().map(|c| self.index_of(&c.to_string())).collect()
        }
    }

    pub fn check_word(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&i| i >= self.size()) {
            Some(&index) => Err(Error::IndexOutOfBounds { index, size: self.size() }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixingIndex {
    /// Smallest `p` with `A^p > 0`.
    Mixing(usize),
    NotMixing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sft {
    alphabet: Alphabet,
    adjacency: Matrix<bool>,
}

impl Sft {
    /// Validates an integer adjacency matrix. Mixing is not required here.
    pub fn new(alphabet: Alphabet, adjacency: &[Vec<i64>]) -> Result<Self> {
        let n = alphabet.size();
        let cols = adjacency.first().map_or(0, Vec::len);
        if adjacency.len() != n || adjacency.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { rows: adjacency.len(), cols, size: n });
        }
        for (i, row) in adjacency.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0 && v != 1 {
                    return Err(Error::NonBinaryEntry { row: i, col: j, value: v });
                }
            }
        }
        let adjacency = Matrix::from_fn(n, n, |i, j| adjacency[i][j] == 1);
        Self::from_bool(alphabet, adjacency)
    }

    pub fn from_bool(alphabet: Alphabet, adjacency: Matrix<bool>) -> Result<Self> {
        let n = alphabet.size();
        if adjacency.rows() != n || adjacency.cols() != n {
            return Err(Error::DimensionMismatch { rows: adjacency.rows(), cols: adjacency.cols(), size: n });
        }
        if let Some(i) = (0..n).find(|&i| !(0..n).any(|j| *adjacency.get(i, j))) {
            return Err(Error::EmptyRow(i));
        }
        if let Some(j) = (0..n).find(|&j| !(0..n).any(|i| *adjacency.get(i, j))) {
            return Err(Error::EmptyColumn(j));
        }
        Ok(Sft { alphabet, adjacency })
    }

    pub fn full_shift(size: usize) -> Self {
        Sft::from_bool(Alphabet::numbered(size), Matrix::filled(size, size, true)).expect("full shift is valid")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn adjacency(&self) -> &Matrix<bool> {
        &self.adjacency
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<i64>> {
        self.adjacency.map(|&b| i64::from(b)).to_rows()
    }

    #[inline]
    pub fn allowed(&self, from: usize, to: usize) -> bool {
        *self.adjacency.get(from, to)
    }

    pub fn is_full_shift(&self) -> bool {
        self.adjacency.all_true()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size()).filter(move |&j| self.allowed(i, j))
    }

    /// Smallest `p ≤ cap` with `A^p` entrywise positive, using boolean arithmetic.
    pub fn mixing_index(&self, cap: usize) -> MixingIndex {
        let mut power = self.adjacency.clone();
        for p in 1..=cap {
            if power.all_true() {
                return MixingIndex::Mixing(p);
            }
            if p < cap {
                power = power.bool_mul(&self.adjacency);
            }
        }
        MixingIndex::NotMixing
    }

    /// Wielandt's bound `(n−1)² + 1` makes this cap conclusive.
    pub fn is_mixing(&self) -> bool {
        let n = self.size();
        matches!(self.mixing_index((n - 1) * (n - 1) + 1), MixingIndex::Mixing(_))
    }

    pub fn is_admissible(&self, word: &[usize]) -> Result<bool> {
        self.alphabet.check_word(word)?;
        Ok(word.windows(2).all(|w| self.allowed(w[0], w[1])))
    }

    /// Number of admissible words of length `n`, saturating.
    pub fn count_words(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let size = self.size();
        let mut counts = vec![1u128; size];
        for _ in 1..n {
            let mut next = vec![0u128; size];
            for (i, &c) in counts.iter().enumerate() {
                for j in self.successors(i) {
                    next[j] = next[j].saturating_add(c);
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |a, &b| a.saturating_add(b))
    }

    /// All admissible words of length `n` in lexicographic order.
    pub fn enumerate_words(&self, n: usize, limit: usize) -> Result<Vec<Word>> {
        if self.count_words(n) > limit as u128 {
            return Err(Error::EnumerationLimit { limit });
        }
        let mut out = Vec::new();
        if n == 0 {
            out.push(Vec::new());
            return Ok(out);
        }
        let mut word = Vec::with_capacity(n);
        self.extend_words(&mut word, n, &mut out);
        Ok(out)
    }

    fn extend_words(&self, word: &mut Word, n: usize, out: &mut Vec<Word>) {
        if word.len() == n {
            out.push(word.clone());
            return;
        }
        let next: Vec<usize> = match word.last() {
            None => (0..self.size()).collect(),
            Some(&last) => self.successors(last).collect(),
        };
        for s in next {
            word.push(s);
            self.extend_words(word, n, out);
            word.pop();
        }
    }

    /// Higher-block presentation on admissible `k`-words.
    pub fn higher_block_recode(&self, k: usize, limit: usize) -> Result<Recoding> {
        if k == 0 {
            return Err(Error::InvalidParameter("block length must be at least 1".into()));
        }
        let blocks = self.enumerate_words(k, limit)?;
        let index: HashMap<Word, usize> = blocks.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
        let names: Vec<String> = blocks.iter().map(|b| self.alphabet.render(b)).collect();
        let alphabet = Alphabet::new(names)?;
        let m = blocks.len();
        let adjacency = Matrix::from_fn(m, m, |u, v| {
            let (bu, bv) = (&blocks[u], &blocks[v]);
            bu[1..] == bv[..k - 1] && self.allowed(bu[k - 1], bv[k - 1])
        });
        let block_sft = Sft::from_bool(alphabet, adjacency)?;
        Ok(Recoding { block_length: k, blocks, index, block_sft })
    }
}

/// The `k`-block presentation of an [`Sft`].
#[derive(Clone, Debug)]
pub struct Recoding {
    block_length: usize,
    blocks: Vec<Word>,
    index: HashMap<Word, usize>,
    block_sft: Sft,
}

impl Recoding {
    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn block_sft(&self) -> &Sft {
        &self.block_sft
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// The base word spelled by block symbol `b`.
    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Word] {
        &self.blocks
    }

    pub fn block_of(&self, base: &[usize]) -> Option<usize> {
        self.index.get(base).copied()
    }

    /// Sliding-window translation of a base word of length ≥ k; `None` if a window is inadmissible.
    pub fn to_block_word(&self, base: &[usize]) -> Option<Word> {
        if base.len() < self.block_length {
            return None;
        }
        base.windows(self.block_length).map(|w| self.block_of(w)).collect()
    }

    /// Inverse of [`Recoding::to_block_word`].
    pub fn to_base_word(&self, blocks: &[usize]) -> Word {
        let Some((&first, rest)) = blocks.split_first() else {
            return Vec::new();
        };
        let mut out = self.blocks[first].clone();
        out.extend(rest.iter().map(|&b| *self.blocks[b].last().expect("blocks are nonempty")));
        out
    }
}
