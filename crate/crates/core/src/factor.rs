//! 1-block factor maps and the measures they push forward.
//!
//! The transfer matrix is cut into blocks `ℒ_{uv}` indexed by image symbols:
//! rows are the fiber over `u`, columns the fiber over `v`. For an image word
//! `b_0 … b_n`,
//!
//! ```text
//! π_*μ[b_0 … b_n] = λ^{-n} · ν_{b_0}ᵀ ℒ_{b_0 b_1} ⋯ ℒ_{b_{n-1} b_n} h_{b_n}
//! ```
//!
//! where `h_b`, `ν_b` are the Perron vectors restricted to the fiber over `b`.
//! Potentials of depth `k ≥ 2` live on a `k`-block presentation; the image is
//! then recoded letterwise, so "image symbols" below are image `k`-blocks.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::gibbs::Gibbs;
use crate::linalg::{log_sum_exp, Matrix, ScaledVector};
use crate::sft::{Alphabet, Word};

/// Witness lists are cut off after this many entries.
pub const MAX_WITNESSES: usize = 100;

/// A letter-to-letter map `𝒜 → ℬ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorMap {
    image: Alphabet,
    symbol_map: Vec<usize>,
}

impl FactorMap {
    /// Builds the map from `(domain name, image name)` pairs; every domain
    /// symbol must be mapped and every image symbol must be hit.
    pub fn new(domain: &Alphabet, image: Alphabet, pairs: &[(String, String)]) -> Result<Self> {
        let mut symbol_map: Vec<Option<usize>> = vec![None; domain.size()];
        for (from, to) in pairs {
            let i = domain.index_of(from)?;
            let j = image.index_of(to)?;
            match symbol_map[i] {
                Some(prev) if prev != j => {
                    return Err(Error::Validation { key: from.clone(), message: "mapped twice".into() });
                }
                _ => symbol_map[i] = Some(j),
            }
        }
        let symbol_map = symbol_map
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| Error::UnmappedSymbol(domain.name(i).to_owned())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(image, symbol_map)
    }

    pub fn from_indices(image: Alphabet, symbol_map: Vec<usize>) -> Result<Self> {
        for &j in &symbol_map {
            if j >= image.size() {
                return Err(Error::IndexOutOfBounds { index: j, size: image.size() });
            }
        }
        if let Some(b) = (0..image.size()).find(|b| !symbol_map.contains(b)) {
            return Err(Error::EmptyFiber(image.name(b).to_owned()));
        }
        Ok(FactorMap { image, symbol_map })
    }

    pub fn identity(domain: &Alphabet) -> Self {
        FactorMap { image: domain.clone(), symbol_map: (0..domain.size()).collect() }
    }

    pub fn image(&self) -> &Alphabet {
        &self.image
    }

    pub fn symbol_map(&self) -> &[usize] {
        &self.symbol_map
    }

    #[inline]
    pub fn apply_symbol(&self, a: usize) -> usize {
        self.symbol_map[a]
    }

    pub fn apply(&self, word: &[usize]) -> Word {
        word.iter().map(|&a| self.symbol_map[a]).collect()
    }
}

/// One block `ℒ_{uv}`: float entries, optional exact entries, and the support.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub float: Matrix<f64>,
    pub exact: Option<Matrix<BigRational>>,
    pub support: Matrix<bool>,
}

/// Normalized float product with the log of the factored-out scale.
#[derive(Clone, Debug)]
pub struct BlockProduct {
    pub matrix: Matrix<f64>,
    pub log_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FwmWitness {
    /// Image word (base letters).
    pub word: Word,
    /// Domain block symbols at the two ends with no connecting lift.
    pub first: usize,
    pub last: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FwmReport {
    pub n: usize,
    pub holds: bool,
    pub words_checked: usize,
    pub witnesses: Vec<FwmWitness>,
    pub witnesses_truncated: bool,
    /// N is counted in this block presentation (1 unless the potential has depth ≥ 2).
    pub block_length: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FwmSearch {
    pub found: Option<usize>,
    pub reports: Vec<FwmReport>,
}

/// A Gibbs state together with a factor map: fibers, block operators and fiber vectors.
#[derive(Clone, Debug)]
pub struct Factor {
    gibbs: Gibbs,
    map: FactorMap,
    image_blocks: Vec<Word>,
    image_block_index: HashMap<Word, usize>,
    fibers: Vec<Vec<usize>>,
    operators: BTreeMap<(usize, usize), BlockOperator>,
    successors: Vec<Vec<usize>>,
    fiber_h: Vec<Vec<f64>>,
    fiber_nu: Vec<Vec<f64>>,
}

impl Factor {
    pub fn new(gibbs: Gibbs, map: FactorMap) -> Result<Self> {
        let sft = gibbs.potential().sft();
        if map.symbol_map.len() != sft.size() {
            return Err(Error::Validation {
                key: "factor".into(),
                message: format!("map covers {} symbols, domain has {}", map.symbol_map.len(), sft.size()),
            });
        }
        let tm = gibbs.transfer();
        let rec = tm.recoding();
        let block_images: Vec<Word> = rec.blocks().iter().map(|b| map.apply(b)).collect();
        let mut image_blocks = block_images.clone();
        image_blocks.sort();
        image_blocks.dedup();
        let image_block_index: HashMap<Word, usize> =
            image_blocks.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut fibers = vec![Vec::new(); image_blocks.len()];
        for (b, img) in block_images.iter().enumerate() {
            fibers[image_block_index[img]].push(b);
        }
        let t = tm.matrix();
        let te = tm.exact_matrix();
        let mut operators = BTreeMap::new();
        let mut successors = vec![Vec::new(); image_blocks.len()];
        for u in 0..image_blocks.len() {
            for v in 0..image_blocks.len() {
                let float = t.select(&fibers[u], &fibers[v]);
                let support = float.map(|&x| x > 0.0);
                if !support.any_true() {
                    continue;
                }
                let exact = te.map(|m| m.select(&fibers[u], &fibers[v]));
                operators.insert((u, v), BlockOperator { float, exact, support });
                successors[u].push(v);
            }
        }
        let p = gibbs.perron();
        let fiber_h = fibers.iter().map(|f| f.iter().map(|&i| p.h[i]).collect()).collect();
        let fiber_nu = fibers.iter().map(|f| f.iter().map(|&i| p.nu[i]).collect()).collect();
        Ok(Factor { gibbs, map, image_blocks, image_block_index, fibers, operators, successors, fiber_h, fiber_nu })
    }

    pub fn gibbs(&self) -> &Gibbs {
        &self.gibbs
    }

    pub fn map(&self) -> &FactorMap {
        &self.map
    }

    pub fn block_length(&self) -> usize {
        self.gibbs.block_length()
    }

    pub fn num_image_blocks(&self) -> usize {
        self.image_blocks.len()
    }

    pub fn image_block(&self, u: usize) -> &[usize] {
        &self.image_blocks[u]
    }

    /// Domain block symbols over image block `u`, ascending.
    pub fn fiber(&self, u: usize) -> &[usize] {
        &self.fibers[u]
    }

    pub fn operator(&self, u: usize, v: usize) -> Option<&BlockOperator> {
        self.operators.get(&(u, v))
    }

    pub fn operators(&self) -> impl Iterator<Item = (&(usize, usize), &BlockOperator)> {
        self.operators.iter()
    }

    pub fn image_successors(&self, u: usize) -> &[usize] {
        &self.successors[u]
    }

    pub fn fiber_h(&self, u: usize) -> &[f64] {
        &self.fiber_h[u]
    }

    pub fn fiber_nu(&self, u: usize) -> &[f64] {
        &self.fiber_nu[u]
    }

    pub fn exact_fiber_h(&self, u: usize) -> Option<Vec<BigRational>> {
        let p = self.gibbs.exact_perron()?;
        Some(self.fibers[u].iter().map(|&i| p.h[i].clone()).collect())
    }

    pub fn exact_fiber_nu(&self, u: usize) -> Option<Vec<BigRational>> {
        let p = self.gibbs.exact_perron()?;
        Some(self.fibers[u].iter().map(|&i| p.nu[i].clone()).collect())
    }

    /// Image word (base letters) to image block word; `None` if some window is not an image block.
    pub fn to_image_blocks(&self, yword: &[usize]) -> Result<Option<Word>> {
        self.map.image.check_word(yword)?;
        let b = self.block_length();
        if yword.len() < b {
            return Ok(None);
        }
        Ok(yword.windows(b).map(|w| self.image_block_index.get(w).copied()).collect())
    }

    pub fn image_blocks_to_word(&self, blocks: &[usize]) -> Word {
        let Some((&first, rest)) = blocks.split_first() else {
            return Vec::new();
        };
        let mut out = self.image_blocks[first].clone();
        out.extend(rest.iter().map(|&u| *self.image_blocks[u].last().expect("nonempty")));
        out
    }

    fn image_blocks_with_prefix<'a>(&'a self, prefix: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        (0..self.image_blocks.len()).filter(move |&u| self.image_blocks[u].starts_with(prefix))
    }

    /// Boolean support of the block product along an image block word.
    fn support_product(&self, blocks: &[usize]) -> Option<Matrix<bool>> {
        let first = *blocks.first()?;
        let n = self.fibers[first].len();
        let mut acc = Matrix::from_fn(n, n, |i, j| i == j);
        for w in blocks.windows(2) {
            let op = self.operators.get(&(w[0], w[1]))?;
            acc = acc.bool_mul(&op.support);
            if !acc.any_true() {
                return None;
            }
        }
        Some(acc)
    }

    /// Membership of an image word in the language of the sofic image.
    pub fn image_admissible(&self, yword: &[usize]) -> Result<bool> {
        self.map.image.check_word(yword)?;
        if yword.len() < self.block_length() {
            return Ok(self.image_blocks_with_prefix(yword).next().is_some());
        }
        let Some(blocks) = self.to_image_blocks(yword)? else {
            return Ok(false);
        };
        Ok(self.support_product(&blocks).is_some())
    }

    fn admissible_blocks(&self, yword: &[usize]) -> Result<Word> {
        let render = || self.map.image.render(yword);
        let min = self.block_length() + 1;
        if yword.len() < min {
            return Err(Error::WordTooShort { len: yword.len(), min });
        }
        let blocks = self.to_image_blocks(yword)?.ok_or_else(|| Error::Inadmissible(render()))?;
        if self.support_product(&blocks).is_none() {
            return Err(Error::Inadmissible(render()));
        }
        Ok(blocks)
    }

    /// `ℒ_{b_0 b_1} ⋯ ℒ_{b_{n-1} b_n}` renormalized by its largest entry after each step.
    pub fn block_product(&self, yword: &[usize]) -> Result<BlockProduct> {
        let blocks = self.admissible_blocks(yword)?;
        let mut matrix = self.operators[&(blocks[0], blocks[1])].float.clone();
        let mut log_scale = 0.0;
        let renorm = |m: &mut Matrix<f64>, log_scale: &mut f64| {
            let s = m.entries().cloned().fold(0.0, f64::max);
            *m = m.map(|x| x / s);
            *log_scale += s.ln();
        };
        renorm(&mut matrix, &mut log_scale);
        for w in blocks[1..].windows(2) {
            matrix = matrix.matmul(&self.operators[&(w[0], w[1])].float);
            renorm(&mut matrix, &mut log_scale);
        }
        Ok(BlockProduct { matrix, log_scale })
    }

    /// Raw rational block product.
    pub fn exact_block_product(&self, yword: &[usize]) -> Result<Matrix<BigRational>> {
        let blocks = self.admissible_blocks(yword)?;
        let exact = |u: usize, v: usize| {
            self.operators[&(u, v)]
                .exact
                .clone()
                .ok_or_else(|| Error::ExactUnavailable("potential has no rational weight table".into()))
        };
        let mut acc = exact(blocks[0], blocks[1])?;
        for w in blocks[1..].windows(2) {
            acc = acc.matmul(&exact(w[0], w[1])?);
        }
        Ok(acc)
    }

    /// Natural log of `π_*μ[yword]` by the block-operator formula; `-∞` off the image language.
    pub fn log_projected_measure(&self, yword: &[usize]) -> Result<f64> {
        self.map.image.check_word(yword)?;
        if yword.len() < self.block_length() {
            let terms = self.image_blocks_with_prefix(yword).map(|u| self.log_fiber_mass(u));
            return Ok(log_sum_exp(terms.collect::<Vec<_>>()));
        }
        let Some(blocks) = self.to_image_blocks(yword)? else {
            return Ok(f64::NEG_INFINITY);
        };
        Ok(self.log_measure_of_blocks(&blocks))
    }

    fn log_fiber_mass(&self, u: usize) -> f64 {
        let s: f64 = self.fiber_nu[u].iter().zip(&self.fiber_h[u]).map(|(a, b)| a * b).sum();
        s.ln()
    }

    /// `log π_*μ` for an image block word (nonempty).
    pub(crate) fn log_measure_of_blocks(&self, blocks: &[usize]) -> f64 {
        let mut v = ScaledVector::new(self.fiber_nu[blocks[0]].clone());
        for w in blocks.windows(2) {
            let Some(op) = self.operators.get(&(w[0], w[1])) else {
                return f64::NEG_INFINITY;
            };
            v.step(&op.float);
            if v.is_zero() {
                return f64::NEG_INFINITY;
            }
        }
        let n = blocks.len() - 1;
        v.log_pair(&self.fiber_h[*blocks.last().expect("nonempty")]) - n as f64 * self.gibbs.perron().lambda.ln()
    }

    pub fn projected_measure(&self, yword: &[usize]) -> Result<f64> {
        self.log_projected_measure(yword).map(f64::exp)
    }

    /// Exact `π_*μ[yword]` by the block-operator formula.
    pub fn exact_projected_measure(&self, yword: &[usize]) -> Result<BigRational> {
        let p = self
            .gibbs
            .exact_perron()
            .ok_or_else(|| Error::ExactUnavailable("exact Perron data was not computed".into()))?;
        self.map.image.check_word(yword)?;
        let mass = |u: usize| {
            self.fibers[u]
                .iter()
                .fold(BigRational::zero(), |acc, &i| acc + p.nu[i].clone() * p.h[i].clone())
        };
        if yword.len() < self.block_length() {
            return Ok(self.image_blocks_with_prefix(yword).fold(BigRational::zero(), |acc, u| acc + mass(u)));
        }
        let Some(blocks) = self.to_image_blocks(yword)? else {
            return Ok(BigRational::zero());
        };
        let mut v = self.exact_fiber_nu(blocks[0]).expect("exact data present");
        for w in blocks.windows(2) {
            let Some(op) = self.operators.get(&(w[0], w[1])) else {
                return Ok(BigRational::zero());
            };
            v = op.exact.as_ref().expect("exact weights").vec_mul(&v);
        }
        let h = self.exact_fiber_h(*blocks.last().expect("nonempty")).expect("exact data present");
        let n = blocks.len() - 1;
        Ok(crate::linalg::dot(&v, &h) / num_traits::pow(p.lambda.clone(), n))
    }

    /// Every admissible domain word over `yword`, lexicographically.
    pub fn preimages(&self, yword: &[usize], limit: usize) -> Result<Vec<Word>> {
        self.map.image.check_word(yword)?;
        let sft = self.gibbs.potential().sft();
        let fibers: Vec<Vec<usize>> = (0..self.map.image.size())
            .map(|b| (0..sft.size()).filter(|&a| self.map.symbol_map[a] == b).collect())
            .collect();
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(yword.len());
        fn go(
            sft: &crate::sft::Sft,
            fibers: &[Vec<usize>],
            yword: &[usize],
            word: &mut Word,
            out: &mut Vec<Word>,
            limit: usize,
        ) -> Result<()> {
            if word.len() == yword.len() {
                if out.len() >= limit {
                    return Err(Error::EnumerationLimit { limit });
                }
                out.push(word.clone());
                return Ok(());
            }
            for &a in &fibers[yword[word.len()]] {
                if word.last().is_some_and(|&prev| !sft.allowed(prev, a)) {
                    continue;
                }
                word.push(a);
                go(sft, fibers, yword, word, out, limit)?;
                word.pop();
            }
            Ok(())
        }
        go(sft, &fibers, yword, &mut word, &mut out, limit)?;
        Ok(out)
    }

    /// `log π_*μ[yword]` as the sum of Gibbs cylinder measures over all preimages.
    pub fn log_projected_measure_bruteforce(&self, yword: &[usize], limit: usize) -> Result<f64> {
        let terms = self
            .preimages(yword, limit)?
            .iter()
            .map(|w| self.gibbs.log_cylinder(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(log_sum_exp(terms))
    }

    pub fn exact_projected_measure_bruteforce(&self, yword: &[usize], limit: usize) -> Result<BigRational> {
        self.preimages(yword, limit)?
            .iter()
            .try_fold(BigRational::zero(), |acc, w| Ok(acc + self.gibbs.exact_cylinder(w)?))
    }

    /// Depth-first walk over admissible image block words of `len` blocks in
    /// lexicographic order, with the boolean support of each block product.
    pub fn for_each_image_block_word(
        &self,
        len: usize,
        limit: usize,
        mut visit: impl FnMut(&[usize], &Matrix<bool>),
    ) -> Result<usize> {
        let mut count = 0;
        let mut word = Vec::with_capacity(len);
        for u in 0..self.image_blocks.len() {
            let n = self.fibers[u].len();
            let start = Matrix::from_fn(n, n, |i, j| i == j);
            word.push(u);
            self.walk(&mut word, &start, len, limit, &mut count, &mut visit)?;
            word.pop();
        }
        Ok(count)
    }

    fn walk(
        &self,
        word: &mut Word,
        support: &Matrix<bool>,
        len: usize,
        limit: usize,
        count: &mut usize,
        visit: &mut impl FnMut(&[usize], &Matrix<bool>),
    ) -> Result<()> {
        if word.len() >= len {
            *count += 1;
            if *count > limit {
                return Err(Error::EnumerationLimit { limit });
            }
            visit(word, support);
            return Ok(());
        }
        let last = *word.last().expect("nonempty");
        for &v in &self.successors[last] {
            let next = support.bool_mul(&self.operators[&(last, v)].support);
            if !next.any_true() {
                continue;
            }
            word.push(v);
            self.walk(word, &next, len, limit, count, visit)?;
            word.pop();
        }
        Ok(())
    }

    /// Admissible image words of `len` base letters, lexicographically.
    pub fn image_words(&self, len: usize, limit: usize) -> Result<Vec<Word>> {
        let b = self.block_length();
        if len == 0 {
            return Ok(vec![Vec::new()]);
        }
        if len < b {
            let mut prefixes: Vec<Word> = self.image_blocks.iter().map(|w| w[..len].to_vec()).collect();
            prefixes.dedup();
            return Ok(prefixes);
        }
        let mut out = Vec::new();
        self.for_each_image_block_word(len - b + 1, limit, |w, _| out.push(self.image_blocks_to_word(w)))?;
        Ok(out)
    }

    /// Checks that every admissible image word of `N+1` symbols lifts with any
    /// prescribed fiber endpoints.
    pub fn fwm_check(&self, n: usize, limit: usize) -> Result<FwmReport> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let mut witnesses = Vec::new();
        let mut truncated = false;
        let mut holds = true;
        let words_checked = self.for_each_image_block_word(n + 1, limit, |w, support| {
            if support.all_true() {
                return;
            }
            holds = false;
            let (first, last) = (&self.fibers[w[0]], &self.fibers[w[n]]);
            for i in 0..support.rows() {
                for j in 0..support.cols() {
                    if *support.get(i, j) {
                        continue;
                    }
                    if witnesses.len() >= MAX_WITNESSES {
                        truncated = true;
                        return;
                    }
                    witnesses.push(FwmWitness { word: self.image_blocks_to_word(w), first: first[i], last: last[j] });
                }
            }
        })?;
        Ok(FwmReport { n, holds, words_checked, witnesses, witnesses_truncated: truncated, block_length: self.block_length() })
    }

    /// Tests `N = 1..=max_n` one at a time and stops at the first success.
    pub fn fwm_search(&self, max_n: usize, limit: usize) -> Result<FwmSearch> {
        if max_n == 0 {
            return Err(Error::InvalidParameter("max N must be at least 1".into()));
        }
        let mut reports = Vec::new();
        for n in 1..=max_n {
            let report = self.fwm_check(n, limit)?;
            let holds = report.holds;
            reports.push(report);
            if holds {
                return Ok(FwmSearch { found: Some(n), reports });
            }
        }
        Ok(FwmSearch { found: None, reports })
    }
}
