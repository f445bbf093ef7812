//! Perron data of the transfer matrix and the Gibbs measure of cylinders.
//!
//! With `h` the right and `ν` the left Perron vector of the source-row
//! transfer matrix `T`, normalized by `Σν = 1` and `⟨h, ν⟩ = 1`, the Gibbs
//! state of a block word `w_0 … w_n` is
//!
//! ```text
//! μ[w_0 … w_n] = λ^{-n} · ν_{w_0} · T[w_0][w_1] ⋯ T[w_{n-1}][w_n] · h_{w_n}
//! ```

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{dot, rational_null_space, rational_to_f64, rationalize, Matrix};
use crate::potential::{Potential, TransferMatrix};
use crate::sft::{Word, DEFAULT_ENUMERATION_LIMIT};

pub const DEFAULT_TOLERANCE: f64 = 1e-13;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PerronData<T> {
    pub lambda: T,
    /// Right eigenvector, `T h = λ h`.
    pub h: Vec<T>,
    /// Left eigenvector, `νᵀ T = λ νᵀ`.
    pub nu: Vec<T>,
    /// `max(‖Th − λh‖∞ / ‖h‖∞, ‖νᵀT − λνᵀ‖∞)`; zero for verified exact data.
    pub residual: f64,
    pub iterations: usize,
}

impl PerronData<BigRational> {
    pub fn to_f64(&self) -> PerronData<f64> {
        PerronData {
            lambda: rational_to_f64(&self.lambda),
            h: self.h.iter().map(rational_to_f64).collect(),
            nu: self.nu.iter().map(rational_to_f64).collect(),
            residual: 0.0,
            iterations: 0,
        }
    }
}

fn require_mixing(tm: &TransferMatrix) -> Result<()> {
    if tm.recoding().block_sft().is_mixing() {
        Ok(())
    } else {
        Err(Error::NotMixing)
    }
}

/// Power iteration on `T` and `Tᵀ` from the all-ones vector.
pub fn perron(tm: &TransferMatrix, tol: f64, max_iter: usize) -> Result<PerronData<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    require_mixing(tm)?;
    let t = tm.matrix();
    let n = t.rows();
    let mut h = vec![1.0; n];
    let mut nu = vec![1.0 / n as f64; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut h_next = t.mul_vec(&h);
        let hm = h_next.iter().cloned().fold(0.0, f64::max);
        h_next.iter_mut().for_each(|x| *x /= hm);
        let mut nu_next = t.vec_mul(&nu);
        let s: f64 = nu_next.iter().sum();
        nu_next.iter_mut().for_each(|x| *x /= s);
        change = sup_diff(&h, &h_next).max(sup_diff(&nu, &nu_next));
        h = h_next;
        nu = nu_next;
        if change < tol {
            break;
        }
    }
    if change >= tol {
        return Err(Error::NoConvergence { iterations, change });
    }
    // With Σν = 1, λ = Σ(νᵀT).
    let lambda: f64 = t.vec_mul(&nu).iter().sum();
    let pairing = dot(&h, &nu);
    h.iter_mut().for_each(|x| *x /= pairing);
    let th = t.mul_vec(&h);
    let nt = t.vec_mul(&nu);
    let h_sup = h.iter().cloned().fold(0.0, f64::max);
    let r_h = th.iter().zip(&h).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max) / h_sup;
    let r_nu = nt.iter().zip(&nu).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
    Ok(PerronData { lambda, h, nu, residual: r_h.max(r_nu), iterations })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Exact Perron data.
///
/// With a `candidate` the eigen-equations, positivity and normalization are
/// verified exactly. Without one, λ is recovered from the float iteration by
/// continued fractions and `h`, `ν` are read off the exact null spaces of
/// `T − λI` and its transpose.
pub fn perron_exact(
    tm: &TransferMatrix,
    candidate: Option<PerronData<BigRational>>,
) -> Result<PerronData<BigRational>> {
    let t = tm
        .exact_matrix()
        .ok_or_else(|| Error::ExactUnavailable("potential has no rational weight table".into()))?;
    require_mixing(tm)?;
    let data = match candidate {
        Some(c) => c,
        None => derive_exact_candidate(tm, t)?,
    };
    verify_exact(t, &data)?;
    Ok(data)
}

fn derive_exact_candidate(tm: &TransferMatrix, t: &Matrix<BigRational>) -> Result<PerronData<BigRational>> {
    let float = perron(tm, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
    let lambda = rationalize(float.lambda, 1 << 20)
        .ok_or_else(|| Error::ExactUnavailable(format!("cannot rationalize λ ≈ {}", float.lambda)))?;
    let n = t.rows();
    let shifted = Matrix::from_fn(n, n, |i, j| {
        let v = t.get(i, j).clone();
        if i == j {
            v - lambda.clone()
        } else {
            v
        }
    });
    let right = rational_null_space(&shifted);
    let left = rational_null_space(&shifted.transpose());
    if right.len() != 1 || left.len() != 1 {
        return Err(Error::ExactUnavailable(format!(
            "Perron root ≈ {} is not rational (no simple rational eigenvalue near it)",
            float.lambda
        )));
    }
    let mut h = right.into_iter().next().expect("one vector");
    let mut nu = left.into_iter().next().expect("one vector");
    let s: BigRational = nu.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    if s.is_zero() {
        return Err(Error::ExactVerification("left eigenvector sums to zero".into()));
    }
    nu.iter_mut().for_each(|x| *x = x.clone() / s.clone());
    let pairing = dot(&h, &nu);
    if pairing.is_zero() {
        return Err(Error::ExactVerification("⟨h, ν⟩ = 0".into()));
    }
    h.iter_mut().for_each(|x| *x = x.clone() / pairing.clone());
    Ok(PerronData { lambda, h, nu, residual: 0.0, iterations: float.iterations })
}

fn verify_exact(t: &Matrix<BigRational>, data: &PerronData<BigRational>) -> Result<()> {
    let n = t.rows();
    if data.h.len() != n || data.nu.len() != n {
        return Err(Error::ExactVerification(format!("expected vectors of length {n}")));
    }
    if !data.lambda.is_positive() {
        return Err(Error::ExactVerification("λ must be positive".into()));
    }
    if !data.h.iter().chain(&data.nu).all(Signed::is_positive) {
        return Err(Error::ExactVerification("h and ν must be strictly positive".into()));
    }
    let scaled = |v: &[BigRational]| v.iter().map(|x| x.clone() * data.lambda.clone()).collect::<Vec<_>>();
    if t.mul_vec(&data.h) != scaled(&data.h) {
        return Err(Error::ExactVerification("T h ≠ λ h".into()));
    }
    if t.vec_mul(&data.nu) != scaled(&data.nu) {
        return Err(Error::ExactVerification("νᵀ T ≠ λ νᵀ".into()));
    }
    let s: BigRational = data.nu.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    if !s.is_one() || !dot(&data.h, &data.nu).is_one() {
        return Err(Error::ExactVerification("normalization Σν = 1, ⟨h, ν⟩ = 1 violated".into()));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct GibbsOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub limit: usize,
    /// Also compute exact Perron data; fails if the potential is not rational.
    pub exact: bool,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions { tol: DEFAULT_TOLERANCE, max_iter: DEFAULT_MAX_ITERATIONS, limit: DEFAULT_ENUMERATION_LIMIT, exact: false }
    }
}

/// Observed range of `μ[w] · λ^n · e^{−S_nφ(w)}` (n = number of block transitions).
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsBounds {
    pub c1: f64,
    pub c2: f64,
    /// `(word length, min, max)` per length.
    pub per_length: Vec<(usize, f64, f64)>,
}

/// A Gibbs state: potential, transfer matrix and Perron data together.
#[derive(Clone, Debug)]
pub struct Gibbs {
    potential: Potential,
    transfer: TransferMatrix,
    perron: PerronData<f64>,
    exact: Option<PerronData<BigRational>>,
    log_lambda: f64,
}

impl Gibbs {
    pub fn new(potential: Potential, options: &GibbsOptions) -> Result<Self> {
        let transfer = TransferMatrix::new(&potential, options.limit)?;
        let mut perron = perron(&transfer, options.tol, options.max_iter)?;
        let exact = if options.exact { Some(perron_exact(&transfer, None)?) } else { None };
        if let Some(e) = &exact {
            // exact data is authoritative; keep the float copy consistent with it
            let iterations = perron.iterations;
            perron = e.to_f64();
            perron.iterations = iterations;
        }
        let log_lambda = perron.lambda.ln();
        Ok(Gibbs { potential, transfer, perron, exact, log_lambda })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn transfer(&self) -> &TransferMatrix {
        &self.transfer
    }

    pub fn perron(&self) -> &PerronData<f64> {
        &self.perron
    }

    pub fn exact_perron(&self) -> Option<&PerronData<BigRational>> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn block_length(&self) -> usize {
        self.transfer.block_length()
    }

    fn require_exact(&self) -> Result<&PerronData<BigRational>> {
        self.exact.as_ref().ok_or_else(|| Error::ExactUnavailable("exact Perron data was not computed".into()))
    }

    /// Block symbols whose base word starts with `prefix` (for words shorter than a block).
    fn blocks_with_prefix<'a>(&'a self, prefix: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        let rec = self.transfer.recoding();
        (0..rec.num_blocks()).filter(move |&b| rec.block(b).starts_with(prefix))
    }

    /// `None` if the word is inadmissible; otherwise the block word (empty for short words).
    fn block_word(&self, word: &[usize]) -> Result<Option<Word>> {
        let sft = self.potential.sft();
        if !sft.is_admissible(word)? {
            return Ok(None);
        }
        if word.len() < self.block_length() {
            return Ok(Some(Vec::new()));
        }
        Ok(self.transfer.recoding().to_block_word(word))
    }

    /// Natural log of `μ[word]`; `-∞` for inadmissible words.
    pub fn log_cylinder(&self, word: &[usize]) -> Result<f64> {
        let Some(blocks) = self.block_word(word)? else {
            return Ok(f64::NEG_INFINITY);
        };
        let p = &self.perron;
        if blocks.is_empty() {
            let terms = self.blocks_with_prefix(word).map(|b| (p.nu[b] * p.h[b]).ln());
            return Ok(crate::linalg::log_sum_exp(terms));
        }
        Ok(self.log_block_cylinder(&blocks))
    }

    /// `log μ` for a nonempty admissible block word.
    pub(crate) fn log_block_cylinder(&self, blocks: &[usize]) -> f64 {
        let p = &self.perron;
        let n = blocks.len() - 1;
        let path: f64 = blocks.windows(2).map(|w| self.transfer.log_weight(w[0], w[1])).sum();
        p.nu[blocks[0]].ln() + path + p.h[blocks[n]].ln() - n as f64 * self.log_lambda
    }

    pub fn cylinder(&self, word: &[usize]) -> Result<f64> {
        self.log_cylinder(word).map(f64::exp)
    }

    /// Exact `μ[word]`; zero for inadmissible words.
    pub fn exact_cylinder(&self, word: &[usize]) -> Result<BigRational> {
        let p = self.require_exact()?;
        let Some(blocks) = self.block_word(word)? else {
            return Ok(BigRational::zero());
        };
        if blocks.is_empty() {
            return Ok(self
                .blocks_with_prefix(word)
                .fold(BigRational::zero(), |acc, b| acc + p.nu[b].clone() * p.h[b].clone()));
        }
        Ok(self.exact_block_cylinder(p, &blocks))
    }

    fn exact_block_cylinder(&self, p: &PerronData<BigRational>, blocks: &[usize]) -> BigRational {
        let t = self.transfer.exact_matrix().expect("exact Perron data implies exact weights");
        let n = blocks.len() - 1;
        let mut value = p.nu[blocks[0]].clone();
        for w in blocks.windows(2) {
            value *= t.get(w[0], w[1]).clone();
        }
        value *= p.h[blocks[n]].clone();
        value / num_traits::pow(p.lambda.clone(), n)
    }

    /// Range of `μ[w]·λ^n·e^{−S_nφ(w)}` over admissible words of each length from
    /// the block length up to `max_len`.
    pub fn gibbs_ratio_bounds(&self, max_len: usize, limit: usize) -> Result<GibbsBounds> {
        let b = self.block_length();
        if max_len < b {
            return Err(Error::InvalidParameter(format!("max length {max_len} is below the block length {b}")));
        }
        check_count(self.potential.sft(), max_len, limit)?;
        let mut per_length: Vec<(usize, f64, f64)> = (b..=max_len).map(|len| (len, f64::INFINITY, f64::NEG_INFINITY)).collect();
        self.walk_blocks(max_len, |word, log_mu, log_path| {
            let n = word.len() - b;
            let r = (log_mu + n as f64 * self.log_lambda - log_path).exp();
            let entry = &mut per_length[n];
            entry.1 = entry.1.min(r);
            entry.2 = entry.2.max(r);
        });
        let c1 = per_length.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let c2 = per_length.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max);
        Ok(GibbsBounds { c1, c2, per_length })
    }

    /// `log μ` of every admissible word of each length `1..=max_len`, built
    /// incrementally (one addition per word).
    pub fn log_cylinders_up_to(&self, max_len: usize, limit: usize) -> Result<Vec<Vec<(Word, f64)>>> {
        let sft = self.potential.sft();
        check_count(sft, max_len, limit)?;
        let mut out: Vec<Vec<(Word, f64)>> = vec![Vec::new(); max_len];
        let b = self.block_length();
        for len in 1..b.min(max_len + 1) {
            for w in sft.enumerate_words(len, limit)? {
                let m = self.log_cylinder(&w)?;
                out[len - 1].push((w, m));
            }
        }
        self.walk_blocks(max_len, |word, log_mu, _| out[word.len() - 1].push((word.to_vec(), log_mu)));
        Ok(out)
    }

    /// Calls `f(word, log μ[word], S φ along the block path)` for every admissible
    /// word with length between the block length and `max_len`, depth first.
    fn walk_blocks(&self, max_len: usize, mut f: impl FnMut(&[usize], f64, f64)) {
        let rec = self.transfer.recoding();
        if max_len < rec.block_length() {
            return;
        }
        let p = &self.perron;
        let log_h: Vec<f64> = p.h.iter().map(|x| x.ln()).collect();
        let n = rec.num_blocks();
        // log of T/λ, so the running sum already carries −n ln λ
        let succ: Vec<Vec<(usize, f64, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| self.transfer.log_weight(i, j).is_finite())
                    .map(|j| {
                        let lw = self.transfer.log_weight(i, j);
                        (j, lw - self.log_lambda, lw)
                    })
                    .collect()
            })
            .collect();
        let walk = FloatWalk { max_len, succ: &succ, log_h: &log_h, rec };
        for block in 0..n {
            let mut word = rec.block(block).to_vec();
            walk.visit(&mut word, block, p.nu[block].ln(), 0.0, &mut f);
        }
    }

    /// Exact measures of every admissible word of each length `1..=max_len`,
    /// built incrementally (one multiplication per word).
    pub fn exact_cylinders_up_to(&self, max_len: usize, limit: usize) -> Result<Vec<HashMap<Word, BigRational>>> {
        let p = self.require_exact()?;
        let sft = self.potential.sft();
        check_count(sft, max_len, limit)?;
        let mut out: Vec<HashMap<Word, BigRational>> = vec![HashMap::new(); max_len];
        let b = self.block_length();
        for len in 1..b.min(max_len + 1) {
            for w in sft.enumerate_words(len, limit)? {
                let m = self.exact_cylinder_with(p, &w);
                out[len - 1].insert(w, m);
            }
        }
        if max_len < b {
            return Ok(out);
        }
        // T/λ, so the running product already carries λ^{-n}
        let inv_lambda = p.lambda.recip();
        let t = self
            .transfer
            .exact_matrix()
            .expect("exact Perron data implies exact weights")
            .map(|w| w.clone() * inv_lambda.clone());
        let rec = self.transfer.recoding();
        let mut walk = ExactWalk { p, t: &t, rec, max_len, out: &mut out };
        for block in 0..rec.num_blocks() {
            let mut word = rec.block(block).to_vec();
            walk.visit(&mut word, block, p.nu[block].clone());
        }
        Ok(out)
    }

    fn exact_cylinder_with(&self, p: &PerronData<BigRational>, w: &[usize]) -> BigRational {
        if w.len() < self.block_length() {
            return self
                .blocks_with_prefix(w)
                .fold(BigRational::zero(), |acc, b| acc + p.nu[b].clone() * p.h[b].clone());
        }
        let blocks = self.transfer.recoding().to_block_word(w).expect("admissible");
        self.exact_block_cylinder(p, &blocks)
    }
}

fn check_count(sft: &crate::sft::Sft, max_len: usize, limit: usize) -> Result<()> {
    match (1..=max_len).any(|len| sft.count_words(len) > limit as u128) {
        true => Err(Error::EnumerationLimit { limit }),
        false => Ok(()),
    }
}

/// Depth-first walk in log-space; `succ[i]` lists `(j, ln(T[i][j]/λ), ln T[i][j])`.
struct FloatWalk<'a> {
    max_len: usize,
    succ: &'a [Vec<(usize, f64, f64)>],
    log_h: &'a [f64],
    rec: &'a crate::sft::Recoding,
}

impl FloatWalk<'_> {
    fn visit(&self, word: &mut Word, last: usize, log_mu: f64, path: f64, f: &mut impl FnMut(&[usize], f64, f64)) {
        f(word, log_mu + self.log_h[last], path);
        if word.len() == self.max_len {
            return;
        }
        for &(next, step, lw) in &self.succ[last] {
            word.push(*self.rec.block(next).last().expect("nonempty block"));
            self.visit(word, next, log_mu + step, path + lw, f);
            word.pop();
        }
    }
}

/// Depth-first walk carrying `ν_{b_0} · Π (T/λ)` so each extension costs one multiplication.
struct ExactWalk<'a> {
    p: &'a PerronData<BigRational>,
    t: &'a Matrix<BigRational>,
    rec: &'a crate::sft::Recoding,
    max_len: usize,
    out: &'a mut Vec<HashMap<Word, BigRational>>,
}

impl ExactWalk<'_> {
    fn visit(&mut self, word: &mut Word, last: usize, partial: BigRational) {
        let h = &self.p.h[last];
        if word.len() == self.max_len {
            let m = if h.is_one() { partial } else { partial * h };
            self.out[word.len() - 1].insert(word.clone(), m);
            return;
        }
        let m = if h.is_one() { partial.clone() } else { &partial * h };
        self.out[word.len() - 1].insert(word.clone(), m);
        for next in 0..self.t.cols() {
            let w = self.t.get(last, next);
            if w.is_zero() {
                continue;
            }
            word.push(*self.rec.block(next).last().expect("nonempty block"));
            self.visit(word, next, &partial * w);
            word.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{PotentialMode, PotentialSpec, Value};
    use crate::sft::{Alphabet, Sft};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn zero_gibbs(sft: &Sft, exact: bool) -> Gibbs {
        let (p, _) = Potential::new(sft, &PotentialSpec::zero(sft, 1).unwrap()).unwrap();
        Gibbs::new(p, &GibbsOptions { exact, ..Default::default() }).unwrap()
    }

    fn example2() -> Sft {
        Sft::new(
            Alphabet::numbered(4),
            &[vec![1, 1, 1, 0], vec![0, 1, 1, 1], vec![1, 1, 1, 0], vec![0, 1, 1, 1]],
        )
        .unwrap()
    }

    #[test]
    fn example2_perron_exact() {
        let g = zero_gibbs(&example2(), true);
        let p = g.exact_perron().unwrap();
        assert_eq!(p.lambda, q(3, 1));
        assert_eq!(p.h, vec![q(1, 1); 4]);
        assert_eq!(p.nu, vec![q(1, 6), q(2, 6), q(2, 6), q(1, 6)]);
    }

    #[test]
    fn example2_perron_float() {
        let g = zero_gibbs(&example2(), false);
        let p = g.perron();
        assert!((p.lambda - 3.0).abs() < 1e-12);
        for (h, nu, e) in itertools3(&p.h, &p.nu, &[1.0, 2.0, 2.0, 1.0]) {
            assert!((h - 1.0).abs() < 1e-12);
            assert!((nu - e / 6.0).abs() < 1e-12);
        }
        assert!(p.residual < 1e-12);
    }

    fn itertools3<'a>(a: &'a [f64], b: &'a [f64], c: &'a [f64]) -> impl Iterator<Item = (f64, f64, f64)> + 'a {
        a.iter().zip(b).zip(c).map(|((x, y), z)| (*x, *y, *z))
    }

    #[test]
    fn full_shift_and_golden_mean() {
        let g = zero_gibbs(&Sft::full_shift(2), true);
        let p = g.exact_perron().unwrap();
        assert_eq!((p.lambda.clone(), p.h.clone(), p.nu.clone()), (q(2, 1), vec![q(1, 1); 2], vec![q(1, 2); 2]));
        for w in Sft::full_shift(2).enumerate_words(5, 100).unwrap() {
            assert_eq!(g.exact_cylinder(&w).unwrap(), q(1, 32));
        }

        let golden = Sft::new(Alphabet::numbered(2), &[vec![1, 1], vec![1, 0]]).unwrap();
        let g = zero_gibbs(&golden, false);
        assert!((g.perron().lambda - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        let (p, _) = Potential::new(&golden, &PotentialSpec::zero(&golden, 1).unwrap()).unwrap();
        let err = Gibbs::new(p, &GibbsOptions { exact: true, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::ExactUnavailable(_)));
    }

    #[test]
    fn non_mixing_is_rejected() {
        let id = Sft::new(Alphabet::numbered(2), &[vec![0, 1], vec![1, 0]]).unwrap();
        let (p, _) = Potential::new(&id, &PotentialSpec::zero(&id, 0).unwrap()).unwrap();
        assert_eq!(Gibbs::new(p, &GibbsOptions::default()).unwrap_err(), Error::NotMixing);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let (p, _) = Potential::new(&example2(), &PotentialSpec::zero(&example2(), 1).unwrap()).unwrap();
        let tm = TransferMatrix::new(&p, 100).unwrap();
        assert!(matches!(perron(&tm, 1e-15, 1), Err(Error::NoConvergence { iterations: 1, .. })));
    }

    #[test]
    fn example2_cylinders() {
        let g = zero_gibbs(&example2(), true);
        assert_eq!(g.exact_cylinder(&[0]).unwrap(), q(1, 6));
        assert_eq!(g.exact_cylinder(&[0, 0]).unwrap(), q(1, 18));
        assert_eq!(g.exact_cylinder(&[1, 0]).unwrap(), q(0, 1));
        assert_eq!(g.exact_cylinder(&[]).unwrap(), q(1, 1));
        assert_eq!(g.log_cylinder(&[1, 0]).unwrap(), f64::NEG_INFINITY);
        assert!((g.cylinder(&[0, 0]).unwrap() - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn external_candidate_is_verified() {
        let (p, _) = Potential::new(&example2(), &PotentialSpec::zero(&example2(), 1).unwrap()).unwrap();
        let tm = TransferMatrix::new(&p, 100).unwrap();
        let good = PerronData {
            lambda: q(3, 1),
            h: vec![q(1, 1); 4],
            nu: vec![q(1, 6), q(1, 3), q(1, 3), q(1, 6)],
            residual: 0.0,
            iterations: 0,
        };
        assert!(perron_exact(&tm, Some(good.clone())).is_ok());
        let mut bad = good;
        bad.nu = vec![q(1, 4); 4];
        assert!(matches!(perron_exact(&tm, Some(bad)), Err(Error::ExactVerification(_))));
    }

    #[test]
    fn ratio_bounds() {
        let g = zero_gibbs(&example2(), false);
        let b = g.gibbs_ratio_bounds(6, 100_000).unwrap();
        assert!((b.c1 - 1.0 / 6.0).abs() < 1e-12 && (b.c2 - 2.0 / 6.0).abs() < 1e-12);
        let g = zero_gibbs(&Sft::full_shift(2), false);
        let b = g.gibbs_ratio_bounds(5, 100_000).unwrap();
        assert!((b.c1 - 0.5).abs() < 1e-12 && (b.c2 - 0.5).abs() < 1e-12);
        // golden mean: extremes of ν_i h_j over admissible endpoint pairs
        let golden = Sft::new(Alphabet::numbered(2), &[vec![1, 1], vec![1, 0]]).unwrap();
        let g = zero_gibbs(&golden, false);
        let p = g.perron();
        let pairs: Vec<f64> = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| p.nu[i] * p.h[j]).collect();
        let lo = pairs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().cloned().fold(0.0, f64::max);
        let b = g.gibbs_ratio_bounds(6, 100_000).unwrap();
        assert!((b.c1 - lo).abs() < 1e-12 && (b.c2 - hi).abs() < 1e-12);
        assert!(g.gibbs_ratio_bounds(0, 10).is_err());
    }

    fn depth2_gibbs() -> Gibbs {
        // depth-2 rational Markov weights on the full 2-shift: blocks of length 2
        let sft = Sft::full_shift(2);
        let entries = sft
            .enumerate_words(3, 100)
            .unwrap()
            .into_iter()
            .map(|w| {
                let v = if w[2] == 0 { q(1 + w[0] as i64, 4) } else { q(3 - w[0] as i64, 4) };
                (w, Value::Rational(v))
            })
            .collect();
        let (p, _) = Potential::new(&sft, &PotentialSpec { depth: 2, mode: PotentialMode::Weight, entries }).unwrap();
        Gibbs::new(p, &GibbsOptions { exact: true, ..Default::default() }).unwrap()
    }

    #[test]
    fn short_words_sum_block_extensions() {
        let g = depth2_gibbs();
        assert_eq!(g.exact_perron().unwrap().lambda, q(1, 1));
        let m0 = g.exact_cylinder(&[0]).unwrap();
        let m00 = g.exact_cylinder(&[0, 0]).unwrap();
        let m01 = g.exact_cylinder(&[0, 1]).unwrap();
        assert_eq!(m0, m00 + m01);
        let total = g.exact_cylinder(&[0]).unwrap() + g.exact_cylinder(&[1]).unwrap();
        assert_eq!(total, q(1, 1));
        assert!((g.cylinder(&[0]).unwrap() - rational_to_f64(&m0)).abs() < 1e-14);
    }

    #[test]
    fn incremental_walks_match_direct_evaluation() {
        for g in [zero_gibbs(&example2(), true), depth2_gibbs()] {
            let floats = g.log_cylinders_up_to(7, 100_000).unwrap();
            let exact = g.exact_cylinders_up_to(7, 100_000).unwrap();
            for (len, (fl, ex)) in floats.iter().zip(&exact).enumerate() {
                let words = g.potential().sft().enumerate_words(len + 1, 100_000).unwrap();
                assert_eq!((fl.len(), ex.len()), (words.len(), words.len()));
                for (w, l) in fl {
                    assert!((l - g.log_cylinder(w).unwrap()).abs() < 1e-12);
                    assert_eq!(ex[w], g.exact_cylinder(w).unwrap());
                }
            }
        }
        assert!(matches!(zero_gibbs(&example2(), false).log_cylinders_up_to(12, 1000), Err(Error::EnumerationLimit { .. })));
    }
}
