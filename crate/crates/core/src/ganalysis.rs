//! The g-function of a projected Gibbs measure: cylinder approximants,
//! limits along eventually periodic points, variation profiles, decay fits and
//! the theoretical contraction rate `η`.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::gibbs::Gibbs;
use crate::linalg::{dot, rational_to_f64, Matrix, ScaledVector};
use crate::sft::Word;

/// Profile values at or below this are treated as round-off and left out of fits.
pub const NOISE_FLOOR: f64 = 1e-11;
/// Exact stage values of `g_limit` are computed for `j` up to this (2^12 repetitions).
pub const EXACT_STAGE_LIMIT: usize = 12;
pub const DEFAULT_SIGMA_GRID: usize = 64;
/// Slack allowed when comparing the fitted rate with `η^{1/N}`.
pub const RATE_SLACK: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct GApproximant {
    pub word: Word,
    /// Depth: the word has `n + 1` letters.
    pub n: usize,
    pub value: f64,
    pub log_value: f64,
    pub exact: Option<BigRational>,
}

/// `g_n(w) = π_*μ[w_0⋯w_n] / π_*μ[w_1⋯w_n]`.
pub fn g_approx(factor: &Factor, yword: &[usize]) -> Result<GApproximant> {
    if yword.len() < 2 {
        return Err(Error::WordTooShort { len: yword.len(), min: 2 });
    }
    let num = factor.log_projected_measure(yword)?;
    if num == f64::NEG_INFINITY {
        return Err(Error::Inadmissible(factor.map().image().render(yword)));
    }
    let den = factor.log_projected_measure(&yword[1..])?;
    let log_value = num - den;
    let exact = if factor.gibbs().is_exact() {
        let d = factor.exact_projected_measure(&yword[1..])?;
        if d.is_zero() {
            return Err(Error::Inadmissible(factor.map().image().render(&yword[1..])));
        }
        Some(factor.exact_projected_measure(yword)? / d)
    } else {
        None
    };
    Ok(GApproximant { word: yword.to_vec(), n: yword.len() - 1, value: log_value.exp(), log_value, exact })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GStage {
    /// Stage index; the tail is repeated `2^j` times.
    pub j: usize,
    pub repetitions: u64,
    /// Depth of the approximant.
    pub n: u64,
    pub value: f64,
    pub exact: Option<BigRational>,
    /// Aitken extrapolant of this and the two preceding stages.
    pub extrapolated: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GLimit {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub stages: Vec<GStage>,
}

/// The word `prefix · tail^r · (first B letters of tail^∞)` as a block walk:
/// a head leading into the cycle `c_0 … c_{p-1}`, then `r` turns of the cycle ending at `c_0`.
struct PeriodicWalk {
    chain: Vec<usize>,
    cycle: Vec<usize>,
    head_len: usize,
}

impl PeriodicWalk {
    fn new(factor: &Factor, prefix: &[usize], tail: &[usize]) -> Result<Self> {
        let b = factor.block_length();
        let mut word = prefix.to_vec();
        word.extend(tail.iter().cycle().take(tail.len() + b));
        let render = || factor.map().image().render(&word);
        let blocks = factor.to_image_blocks(&word)?.ok_or_else(|| Error::Inadmissible(render()))?;
        let p = prefix.len();
        let walk = PeriodicWalk { chain: blocks[..=p].to_vec(), cycle: blocks[p..p + tail.len()].to_vec(), head_len: p };
        let mut steps: Vec<[usize; 2]> = walk.chain.windows(2).map(|w| [w[0], w[1]]).collect();
        steps.extend(walk.cycle_steps());
        if steps.iter().any(|s| factor.operator(s[0], s[1]).is_none()) {
            return Err(Error::Inadmissible(render()));
        }
        Ok(walk)
    }

    fn cycle_steps(&self) -> Vec<[usize; 2]> {
        let p = self.cycle.len();
        (0..p).map(|i| [self.cycle[i], self.cycle[(i + 1) % p]]).collect()
    }

    fn transitions(&self, r: u64) -> u64 {
        self.head_len as u64 + r * self.cycle.len() as u64
    }

    fn head_vector(&self, factor: &Factor) -> ScaledVector {
        let mut v = ScaledVector::new(factor.fiber_nu(self.chain[0]).to_vec());
        for w in self.chain.windows(2) {
            v.step(&factor.operator(w[0], w[1]).expect("checked").float);
        }
        v
    }

    fn cycle_matrix(&self, factor: &Factor) -> (Matrix<f64>, f64) {
        let steps = self.cycle_steps();
        let mut m = factor.operator(steps[0][0], steps[0][1]).expect("checked").float.clone();
        let mut log_scale = normalize(&mut m);
        for s in &steps[1..] {
            m = m.matmul(&factor.operator(s[0], s[1]).expect("checked").float);
            log_scale += normalize(&mut m);
        }
        (m, log_scale)
    }

    fn exact_head_vector(&self, factor: &Factor) -> Vec<BigRational> {
        let mut v = factor.exact_fiber_nu(self.chain[0]).expect("exact data");
        for w in self.chain.windows(2) {
            v = exact_op(factor, w[0], w[1]).vec_mul(&v);
        }
        v
    }

    fn exact_cycle_matrix(&self, factor: &Factor) -> Matrix<BigRational> {
        let steps = self.cycle_steps();
        let mut m = exact_op(factor, steps[0][0], steps[0][1]).clone();
        for s in &steps[1..] {
            m = m.matmul(exact_op(factor, s[0], s[1]));
        }
        m
    }
}

fn exact_op(factor: &Factor, u: usize, v: usize) -> &Matrix<BigRational> {
    factor.operator(u, v).and_then(|op| op.exact.as_ref()).expect("exact weights")
}

fn normalize(m: &mut Matrix<f64>) -> f64 {
    let s = m.entries().cloned().fold(0.0, f64::max);
    if s > 0.0 {
        *m = m.map(|x| x / s);
        s.ln()
    } else {
        0.0
    }
}

/// Tracks `log π_*μ` of the stage words of one periodic walk, and exact values on request.
struct StageMeasure<'a> {
    factor: &'a Factor,
    walk: PeriodicWalk,
    head: ScaledVector,
    power: (Matrix<f64>, f64),
    exact: Option<(Vec<BigRational>, Matrix<BigRational>)>,
}

impl<'a> StageMeasure<'a> {
    fn new(factor: &'a Factor, prefix: &[usize], tail: &[usize], exact: bool) -> Result<Self> {
        let walk = PeriodicWalk::new(factor, prefix, tail)?;
        let exact = exact.then(|| (walk.exact_head_vector(factor), walk.exact_cycle_matrix(factor)));
        Ok(StageMeasure { factor, head: walk.head_vector(factor), power: walk.cycle_matrix(factor), walk, exact })
    }

    /// Unnormalized `log(νᵀ Head C^r h)`; the caller removes `λ` powers.
    fn log_inner(&self) -> f64 {
        let mut v = self.head.clone();
        v.step(&self.power.0);
        v.log_pair(self.factor.fiber_h(self.walk.cycle[0])) + self.power.1
    }

    fn exact_inner(&self) -> Option<BigRational> {
        let (head, power) = self.exact.as_ref()?;
        let h = self.factor.exact_fiber_h(self.walk.cycle[0])?;
        Some(dot(&power.vec_mul(head), &h))
    }

    fn square(&mut self, keep_exact: bool) {
        let (m, s) = &self.power;
        let mut sq = m.matmul(m);
        let s2 = 2.0 * s + normalize(&mut sq);
        self.power = (sq, s2);
        if keep_exact {
            if let Some((_, p)) = self.exact.as_mut() {
                *p = p.matmul(p);
            }
        } else {
            self.exact = None;
        }
    }
}

fn aitken(x0: f64, x1: f64, x2: f64) -> f64 {
    let (d1, d2) = (x1 - x0, x2 - x1);
    let denom = d2 - d1;
    if denom.abs() <= f64::EPSILON * (x0.abs() + x1.abs() + x2.abs()).max(f64::MIN_POSITIVE) {
        x2
    } else {
        x2 - d2 * d2 / denom
    }
}

/// `g` at the point `prefix · tail^∞`, from the approximants with the tail
/// repeated `2^j` times (`j = 0..=j_max`) and Aitken Δ² extrapolation.
pub fn g_limit(factor: &Factor, prefix: &[usize], tail: &[usize], j_max: usize, tol: f64) -> Result<GLimit> {
    if tail.is_empty() {
        return Err(Error::InvalidParameter("tail must be nonempty".into()));
    }
    if j_max > 60 {
        return Err(Error::InvalidParameter("jmax must be at most 60".into()));
    }
    factor.map().image().check_word(prefix)?;
    factor.map().image().check_word(tail)?;
    // Dropping the first symbol must leave a point of the same form.
    let prefix = if prefix.is_empty() { tail } else { prefix };
    let exact = factor.gibbs().is_exact();
    let mut num = StageMeasure::new(factor, prefix, tail, exact)?;
    let mut den = StageMeasure::new(factor, &prefix[1..], tail, exact)?;
    let log_lambda = factor.gibbs().perron().lambda.ln();
    let exact_lambda = factor.gibbs().exact_perron().map(|p| p.lambda.clone());
    let b = factor.block_length() as u64;

    let mut stages: Vec<GStage> = Vec::new();
    let mut converged = false;
    let mut error_estimate = f64::INFINITY;
    for j in 0..=j_max {
        let r = 1u64 << j;
        let (tn, td) = (num.walk.transitions(r), den.walk.transitions(r));
        let log_num = num.log_inner();
        if log_num == f64::NEG_INFINITY {
            let mut word = prefix.to_vec();
            word.extend(tail.iter().cycle().take(tail.len() * r as usize));
            return Err(Error::Inadmissible(factor.map().image().render(&word)));
        }
        let log_g = log_num - den.log_inner() - (tn - td) as f64 * log_lambda;
        let exact_value = match (num.exact_inner(), den.exact_inner(), &exact_lambda) {
            (Some(a), Some(d), Some(l)) if !d.is_zero() => {
                let mut q = a / d;
                for _ in td..tn {
                    q /= l.clone();
                }
                Some(q)
            }
            _ => None,
        };
        // Prefer the exact value when present; it is the same number without round-off.
        let value = exact_value.as_ref().map(rational_to_f64).unwrap_or_else(|| log_g.exp());
        let extrapolated = (stages.len() >= 2)
            .then(|| aitken(stages[stages.len() - 2].value, stages[stages.len() - 1].value, value));
        if let (Some(a), Some(prev)) = (extrapolated, stages.last().and_then(|s| s.extrapolated)) {
            error_estimate = (a - prev).abs();
            converged = error_estimate < tol;
        }
        stages.push(GStage { j, repetitions: r, n: prefix.len() as u64 + r * tail.len() as u64 + b - 1, value, exact: exact_value, extrapolated });
        if converged {
            break;
        }
        let keep_exact = j < EXACT_STAGE_LIMIT;
        num.square(keep_exact);
        den.square(keep_exact);
    }
    let last = stages.last().expect("at least one stage");
    let value = last.extrapolated.unwrap_or(last.value);
    Ok(GLimit { value, error_estimate, converged, stages })
}

/// Largest `n` whose agreement classes keep a free tail longer than the agreed prefix.
/// Beyond it the truncation at `m` dominates the estimate.
pub fn default_n_max(m: usize) -> usize {
    m.saturating_sub(1) / 2
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationProfile {
    pub m: usize,
    /// `var_hat[n-1]` estimates `var_n(log g)` for `n = 1..=n_max`.
    pub var_hat: Vec<f64>,
    /// Number of agreement classes of length `n` containing at least two words.
    pub pair_classes: Vec<usize>,
    pub words: usize,
}

impl VariationProfile {
    pub fn n_max(&self) -> usize {
        self.var_hat.len()
    }
}

/// Largest spread of `log g_m` over admissible image words of `m+1` letters
/// agreeing in their first `n` letters, for `n = 1..=n_max`.
pub fn variation_profile(factor: &Factor, m: usize, n_max: usize, limit: usize) -> Result<VariationProfile> {
    if n_max < 2 || n_max >= m {
        return Err(Error::InvalidParameter(format!("need 2 <= n_max < m, got n_max = {n_max}, m = {m}")));
    }
    let b = factor.block_length();
    if m < b {
        return Err(Error::InvalidParameter(format!("m must be at least the block length {b}")));
    }
    let mut acc = ClassAccumulator::new(n_max);
    let mut walker = VariationWalk {
        factor,
        len: m + 2 - b,
        limit,
        log_lambda: factor.gibbs().perron().lambda.ln(),
        blocks: Vec::with_capacity(m + 2 - b),
        count: 0,
    };
    for u in 0..factor.num_image_blocks() {
        let num = ScaledVector::new(factor.fiber_nu(u).to_vec());
        walker.blocks.push(u);
        walker.descend(&num, None, &mut acc)?;
        walker.blocks.pop();
    }
    let count = walker.count;
    let (var_hat, pair_classes) = acc.finish();
    Ok(VariationProfile { m, var_hat, pair_classes, words: count })
}

struct VariationWalk<'a> {
    factor: &'a Factor,
    len: usize,
    limit: usize,
    log_lambda: f64,
    blocks: Vec<usize>,
    count: usize,
}

impl VariationWalk<'_> {
    fn descend(&mut self, num: &ScaledVector, den: Option<&ScaledVector>, acc: &mut ClassAccumulator) -> Result<()> {
        let last = *self.blocks.last().expect("nonempty");
        if self.blocks.len() == self.len {
            self.count += 1;
            if self.count > self.limit {
                return Err(Error::EnumerationLimit { limit: self.limit });
            }
            let h = self.factor.fiber_h(last);
            let den = den.expect("at least two blocks");
            // One more transition in the numerator than in the denominator.
            let log_g = num.log_pair(h) - den.log_pair(h) - self.log_lambda;
            acc.push(&self.factor.image_blocks_to_word(&self.blocks), log_g);
            return Ok(());
        }
        for &v in self.factor.image_successors(last) {
            let op = &self.factor.operator(last, v).expect("successor").float;
            let mut next_num = num.clone();
            next_num.step(op);
            if next_num.is_zero() {
                continue;
            }
            let next_den = match den {
                Some(d) => {
                    let mut d = d.clone();
                    d.step(op);
                    d
                }
                None => ScaledVector::new(self.factor.fiber_nu(v).to_vec()),
            };
            self.blocks.push(v);
            self.descend(&next_num, Some(&next_den), acc)?;
            self.blocks.pop();
        }
        Ok(())
    }
}

/// Streaming max − min over runs of lexicographically sorted words sharing a prefix.
struct ClassAccumulator {
    prev: Option<Word>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    members: Vec<usize>,
    var: Vec<f64>,
    pair_classes: Vec<usize>,
}

impl ClassAccumulator {
    fn new(n_max: usize) -> Self {
        ClassAccumulator {
            prev: None,
            lo: vec![0.0; n_max],
            hi: vec![0.0; n_max],
            members: vec![0; n_max],
            var: vec![0.0; n_max],
            pair_classes: vec![0; n_max],
        }
    }

    fn close(&mut self, k: usize) {
        if self.members[k] >= 2 {
            self.pair_classes[k] += 1;
            self.var[k] = self.var[k].max(self.hi[k] - self.lo[k]);
        }
    }

    fn push(&mut self, word: &[usize], value: f64) {
        let common = self.prev.as_ref().map_or(0, |p| p.iter().zip(word).take_while(|(a, b)| a == b).count());
        for k in 0..self.var.len() {
            // Class `k` holds words agreeing in their first k + 1 letters.
            if self.prev.is_some() && common > k {
                self.lo[k] = self.lo[k].min(value);
                self.hi[k] = self.hi[k].max(value);
                self.members[k] += 1;
            } else {
                if self.prev.is_some() {
                    self.close(k);
                }
                self.lo[k] = value;
                self.hi[k] = value;
                self.members[k] = 1;
            }
        }
        self.prev = Some(word.to_vec());
    }

    fn finish(mut self) -> (Vec<f64>, Vec<usize>) {
        if self.prev.is_some() {
            for k in 0..self.var.len() {
                self.close(k);
            }
        }
        (self.var, self.pair_classes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Exponential,
    Polynomial,
    Inconclusive,
    /// No variation above the noise floor: `log g` is constant on the sampled range.
    Constant,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Exponential => "exponential",
            Classification::Polynomial => "polynomial",
            Classification::Inconclusive => "inconclusive",
            Classification::Constant => "constant",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub n0: usize,
    /// Indices `n` used in the regressions.
    pub window: Vec<usize>,
    pub exp_rate: f64,
    pub r_squared_exp: f64,
    pub poly_exponent: f64,
    pub r_squared_poly: f64,
    pub classification: Classification,
}

/// Least squares `y ≈ a + s·x`; returns `(s, R²)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let r2 = if syy <= f64::EPSILON * y.iter().map(|b| b * b).sum::<f64>() { 1.0 } else { 1.0 - ss_res / syy };
    (slope, r2)
}

/// Fits `log var_hat_n` against `n` (exponential) and `log n` (polynomial) over `n ≥ n0`.
pub fn decay_fit(var_hat: &[f64], n0: usize) -> Result<DecayFit> {
    let n0 = n0.max(1);
    let tail: Vec<(usize, f64)> = (n0..=var_hat.len()).map(|n| (n, var_hat[n - 1])).collect();
    let window: Vec<usize> = tail.iter().filter(|(_, v)| *v > NOISE_FLOOR).map(|&(n, _)| n).collect();
    if window.is_empty() && !tail.is_empty() {
        return Ok(DecayFit {
            n0,
            window,
            exp_rate: 0.0,
            r_squared_exp: 1.0,
            poly_exponent: f64::INFINITY,
            r_squared_poly: 1.0,
            classification: Classification::Constant,
        });
    }
    if window.len() < 3 {
        return Err(Error::InsufficientPoints(window.len()));
    }
    let y: Vec<f64> = window.iter().map(|&n| var_hat[n - 1].ln()).collect();
    let xs: Vec<f64> = window.iter().map(|&n| n as f64).collect();
    let xl: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let (se, r_squared_exp) = linear_fit(&xs, &y);
    let (sp, r_squared_poly) = linear_fit(&xl, &y);
    let (exp_rate, poly_exponent) = (se.exp(), -sp);
    let classification = if r_squared_exp >= r_squared_poly && exp_rate < 1.0 {
        Classification::Exponential
    } else if r_squared_poly > r_squared_exp && poly_exponent > 0.0 {
        Classification::Polynomial
    } else {
        Classification::Inconclusive
    };
    Ok(DecayFit { n0, window, exp_rate, r_squared_exp, poly_exponent, r_squared_poly, classification })
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {x}")));
    }
    Ok(())
}

/// `tanh(½(log((1+σ)/(1−σ)) + σ|φ|_θ θ/(σ−θ)))` for `0 < θ < σ < 1`.
pub fn eta_full_shift(theta: f64, holder_constant: f64, sigma: f64) -> Result<f64> {
    check_unit("theta", theta)?;
    check_unit("sigma", sigma)?;
    if sigma <= theta {
        return Err(Error::InvalidParameter(format!("need theta < sigma, got theta = {theta}, sigma = {sigma}")));
    }
    if !(holder_constant >= 0.0 && holder_constant.is_finite()) {
        return Err(Error::InvalidParameter("holder constant must be finite and non-negative".into()));
    }
    Ok((0.5 * (((1.0 + sigma) / (1.0 - sigma)).ln() + sigma * holder_constant * theta / (sigma - theta))).tanh())
}

/// Quantities of the potential and the factor that enter the rate bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaInputs {
    pub theta: f64,
    pub holder_constant: f64,
    pub sup_norm: f64,
    /// `‖L^N 1‖_∞`, the largest entry of `T^N` applied to the ones vector.
    pub ln1_sup_norm: f64,
    /// Fiber-wise mixing index.
    pub n: usize,
}

impl EtaInputs {
    /// Reads θ-envelope, sup norm and `‖L^N 1‖_∞` off a Gibbs state.
    pub fn from_gibbs(gibbs: &Gibbs, theta: f64, n: usize) -> Result<Self> {
        let env = gibbs.potential().holder_envelope(theta)?;
        Ok(EtaInputs {
            theta,
            holder_constant: env.holder_constant,
            sup_norm: env.sup_norm,
            ln1_sup_norm: gibbs.transfer().operator_power_sup(n),
            n,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaFormula {
    General,
    /// The sharper full-shift display; needs `N = 1`.
    FullShift,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaBound {
    pub theta: f64,
    pub sigma: f64,
    pub n: usize,
    pub k: f64,
    pub m_const: f64,
    pub eta: f64,
    /// Prefactor `M η^{-2}`.
    pub c: f64,
    pub formula: EtaFormula,
    /// The full-shift value at the same σ, reported alongside when `N = 1`.
    pub full_shift_eta: Option<f64>,
}

impl EtaBound {
    /// `η^{1/N}`, the per-symbol contraction rate.
    pub fn rate(&self) -> f64 {
        self.eta.powf(1.0 / self.n as f64)
    }
}

fn cone_k(inputs: &EtaInputs, sigma: f64) -> f64 {
    let geom: f64 = (1..=inputs.n).map(|i| inputs.theta.powi(i as i32)).sum();
    inputs.holder_constant / (sigma - inputs.theta.powi(inputs.n as i32)) * geom
}

fn check_inputs(inputs: &EtaInputs) -> Result<()> {
    check_unit("theta", inputs.theta)?;
    if inputs.n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    for (name, x) in [("holder constant", inputs.holder_constant), ("sup norm", inputs.sup_norm)] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite and non-negative")));
        }
    }
    if !(inputs.ln1_sup_norm > 0.0 && inputs.ln1_sup_norm.is_finite()) {
        return Err(Error::InvalidParameter("‖L^N 1‖ must be finite and positive".into()));
    }
    Ok(())
}

/// Rate bound from the general cone lemma, for `θ^N < σ < 1`.
pub fn eta_general(inputs: &EtaInputs, sigma: f64) -> Result<EtaBound> {
    check_inputs(inputs)?;
    let floor = inputs.theta.powi(inputs.n as i32);
    if !(sigma > floor && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("need theta^N = {floor} < sigma < 1, got sigma = {sigma}")));
    }
    let k = cone_k(inputs, sigma);
    let n = inputs.n as f64;
    let m_const = 2.0 * ((1.0 + sigma) / (1.0 - sigma)).ln()
        + 2.0 * n * inputs.sup_norm
        + 2.0 * inputs.theta * k
        + 2.0 * inputs.ln1_sup_norm.ln();
    let eta = (m_const / 4.0).tanh();
    let full_shift_eta = if inputs.n == 1 { eta_full_shift(inputs.theta, inputs.holder_constant, sigma).ok() } else { None };
    Ok(EtaBound {
        theta: inputs.theta,
        sigma,
        n: inputs.n,
        k,
        m_const,
        eta,
        c: m_const / (eta * eta),
        formula: EtaFormula::General,
        full_shift_eta,
    })
}

fn eta_full_shift_bound(inputs: &EtaInputs, sigma: f64) -> Result<EtaBound> {
    if inputs.n != 1 {
        return Err(Error::InvalidParameter("the full-shift formula needs N = 1".into()));
    }
    let eta = eta_full_shift(inputs.theta, inputs.holder_constant, sigma)?;
    let m_const = 4.0 * eta.atanh();
    Ok(EtaBound {
        theta: inputs.theta,
        sigma,
        n: 1,
        k: cone_k(inputs, sigma),
        m_const,
        eta,
        c: m_const / (eta * eta),
        formula: EtaFormula::FullShift,
        full_shift_eta: Some(eta),
    })
}

/// Minimizes `η` over a geometric grid of `grid_size` values of σ strictly inside `(θ^N, 1)`.
pub fn eta_optimize(inputs: &EtaInputs, grid_size: usize, formula: EtaFormula) -> Result<EtaBound> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid size must be at least 2".into()));
    }
    check_inputs(inputs)?;
    let lo = inputs.theta.powi(inputs.n as i32);
    let mut best: Option<EtaBound> = None;
    for i in 0..grid_size {
        let sigma = lo.powf(1.0 - (i + 1) as f64 / (grid_size + 1) as f64);
        let bound = match formula {
            EtaFormula::General => eta_general(inputs, sigma)?,
            EtaFormula::FullShift => eta_full_shift_bound(inputs, sigma)?,
        };
        if best.as_ref().is_none_or(|b| bound.eta < b.eta) {
            best = Some(bound);
        }
    }
    Ok(best.expect("grid is nonempty"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateVerdict {
    pub empirical_rate: f64,
    pub theoretical_rate: f64,
    pub satisfied: bool,
}

/// Checks the fitted geometric rate against `η^{1/N}` (with [`RATE_SLACK`]).
pub fn rate_compare(fit: &DecayFit, bound: &EtaBound) -> Result<RateVerdict> {
    let theoretical_rate = bound.rate();
    match fit.classification {
        Classification::Constant => Ok(RateVerdict { empirical_rate: 0.0, theoretical_rate, satisfied: true }),
        Classification::Exponential => Ok(RateVerdict {
            empirical_rate: fit.exp_rate,
            theoretical_rate,
            satisfied: fit.exp_rate <= theoretical_rate + RATE_SLACK,
        }),
        other => Err(Error::WrongClassification(other.as_str().into())),
    }
}
