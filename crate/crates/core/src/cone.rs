//! Hilbert's projective metric on the positive orthant and Birkhoff contraction.
//!
//! For `x, y ≥ 0` with equal supports, `α(x,y) = min yᵢ/xᵢ`, `β(x,y) = max yᵢ/xᵢ`
//! and `Θ(x,y) = log(β/α)`. Differing supports give `Θ = ∞`. A non-negative
//! matrix `M` maps the orthant into itself and contracts `Θ` by
//! `tanh(Δ(M)/4)` where `Δ(M)` is the diameter of the image cone, i.e. the
//! largest distance between two columns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::linalg::Matrix;
use crate::sft::Word;

/// Slack allowed on contraction inequalities.
pub const CONTRACTION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeDistance {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::VectorDimension(x.len(), y.len()));
    }
    for v in [x, y] {
        if v.iter().any(|&t| t < 0.0 || t.is_nan()) {
            return Err(Error::InvalidParameter("cone vectors must be non-negative".into()));
        }
        if !v.iter().any(|&t| t > 0.0) {
            return Err(Error::ZeroVector);
        }
    }
    Ok(())
}

/// `α = sup{λ > 0 : y − λx ≥ 0}` and `β = inf{λ > 0 : λx − y ≥ 0}` (0 and ∞ when empty).
pub fn hilbert_alpha_beta(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_pair(x, y)?;
    let mut alpha = f64::INFINITY;
    let mut beta: f64 = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        if xi > 0.0 {
            alpha = alpha.min(yi / xi);
        }
        if yi > 0.0 {
            beta = beta.max(if xi > 0.0 { yi / xi } else { f64::INFINITY });
        }
    }
    Ok((alpha, beta))
}

pub fn cone_distance(x: &[f64], y: &[f64]) -> Result<ConeDistance> {
    let (alpha, beta) = hilbert_alpha_beta(x, y)?;
    Ok(ConeDistance { alpha, beta, theta: hilbert_distance(x, y)? })
}

/// `Θ(x, y) = log(β/α)`, computed from log-ratios.
pub fn hilbert_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&xi, &yi) in x.iter().zip(y) {
        match (xi > 0.0, yi > 0.0) {
            (true, true) => {
                let r = yi.ln() - xi.ln();
                lo = lo.min(r);
                hi = hi.max(r);
            }
            (false, false) => {}
            _ => return Ok(f64::INFINITY),
        }
    }
    Ok(hi - lo)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualCheck {
    pub closed_form: f64,
    /// Supremum over pairs of coordinate functionals.
    pub coordinate_sup: f64,
    /// Largest value over random non-negative functional pairs.
    pub sampled_max: f64,
    /// `⟨x,φ⟩ = 0 ⟺ ⟨y,φ⟩ = 0` held on every sample.
    pub zero_pairing_consistent: bool,
    pub samples: usize,
    pub seed: u64,
}

/// Compares the closed form of `Θ` with its dual-cone supremum
/// `log sup ⟨x,φ⟩⟨y,ψ⟩ / (⟨y,φ⟩⟨x,ψ⟩)`.
pub fn dual_formula_check(x: &[f64], y: &[f64], samples: usize, seed: u64) -> Result<DualCheck> {
    let closed_form = hilbert_distance(x, y)?;
    if closed_form.is_infinite() {
        return Err(Error::InfiniteDistance);
    }
    let n = x.len();
    let ratio = |phi: &[f64], psi: &[f64]| -> Option<f64> {
        let (xp, yp, xq, yq) = (dot(x, phi), dot(y, phi), dot(x, psi), dot(y, psi));
        (yp > 0.0 && xq > 0.0).then(|| xp.ln() + yq.ln() - yp.ln() - xq.ln())
    };
    let mut coordinate_sup = f64::NEG_INFINITY;
    let mut e_i = vec![0.0; n];
    let mut e_j = vec![0.0; n];
    for i in 0..n {
        e_i[i] = 1.0;
        for j in 0..n {
            e_j[j] = 1.0;
            if let Some(r) = ratio(&e_i, &e_j) {
                coordinate_sup = coordinate_sup.max(r);
            }
            e_j[j] = 0.0;
        }
        e_i[i] = 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_max = f64::NEG_INFINITY;
    let mut zero_pairing_consistent = true;
    for _ in 0..samples {
        let phi = random_functional(&mut rng, n);
        let psi = random_functional(&mut rng, n);
        for f in [&phi, &psi] {
            if (dot(x, f) == 0.0) != (dot(y, f) == 0.0) {
                zero_pairing_consistent = false;
            }
        }
        if let Some(r) = ratio(&phi, &psi) {
            sampled_max = sampled_max.max(r);
        }
    }
    Ok(DualCheck { closed_form, coordinate_sup, sampled_max, zero_pairing_consistent, samples, seed })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Non-negative vector with some coordinates zeroed; never identically zero.
fn random_functional(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) })
            .collect();
        if v.iter().any(|&t| t > 0.0) {
            return v;
        }
    }
}

/// Largest Hilbert distance between two columns.
pub fn projective_diameter(m: &Matrix<f64>) -> Result<f64> {
    let cols: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.column(j)).collect();
    if let Some(j) = cols.iter().position(|c| !c.iter().any(|&t| t > 0.0)) {
        return Err(Error::ZeroColumn(j));
    }
    columns_diameter(&cols)
}

fn columns_diameter(cols: &[Vec<f64>]) -> Result<f64> {
    let mut delta: f64 = 0.0;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            delta = delta.max(hilbert_distance(&cols[i], &cols[j])?);
            if delta.is_infinite() {
                return Ok(delta);
            }
        }
    }
    Ok(delta)
}

/// `tanh(Δ(M)/4)`, with `tanh ∞ = 1`. Zero columns do not contribute to the image cone.
pub fn birkhoff_coefficient(m: &Matrix<f64>) -> f64 {
    let cols: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.column(j)).filter(|c| c.iter().any(|&t| t > 0.0)).collect();
    match columns_diameter(&cols) {
        Ok(d) => tanh_quarter(d),
        Err(_) => 1.0,
    }
}

fn tanh_quarter(delta: f64) -> f64 {
    if delta.is_infinite() {
        1.0
    } else {
        (delta / 4.0).tanh()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionCheck {
    pub image_distance: f64,
    pub coefficient: f64,
    pub distance: f64,
    pub holds: bool,
}

/// Tests `Θ(Mu, Mv) ≤ tanh(Δ(M)/4) · Θ(u, v)` up to [`CONTRACTION_TOLERANCE`].
pub fn contraction_check(m: &Matrix<f64>, u: &[f64], v: &[f64]) -> Result<ContractionCheck> {
    let distance = hilbert_distance(u, v)?;
    let (mu, mv) = (m.mul_vec(u), m.mul_vec(v));
    if !mu.iter().any(|&t| t > 0.0) || !mv.iter().any(|&t| t > 0.0) {
        return Err(Error::DegenerateImage("M maps a vector to zero".into()));
    }
    let image_distance = hilbert_distance(&mu, &mv)?;
    if image_distance.is_infinite() && distance.is_finite() {
        return Err(Error::DegenerateImage("images have different supports".into()));
    }
    let coefficient = birkhoff_coefficient(m);
    let holds = distance.is_infinite() || image_distance <= coefficient * distance + CONTRACTION_TOLERANCE;
    Ok(ContractionCheck { image_distance, coefficient, distance, holds })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub instances: usize,
    pub violations: usize,
    /// Largest `Θ(Mu,Mv) / (τ Θ(u,v))` seen; at most 1 when the inequality holds.
    pub worst_ratio: f64,
    pub seed: u64,
}

/// Random strictly positive `M` (2×2 up to 6×6) and `u`, `v`; counts Birkhoff violations.
pub fn birkhoff_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.gen_range(2..=6);
        // log-uniform entries spread over a few orders of magnitude
        let m = Matrix::from_fn(n, n, |_, _| 10f64.powf(rng.gen_range(-2.0..2.0)));
        let u: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
        let v: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
        let c = contraction_check(&m, &u, &v)?;
        if !c.holds {
            violations += 1;
        }
        if c.distance > 0.0 && c.coefficient > 0.0 {
            worst_ratio = worst_ratio.max(c.image_distance / (c.coefficient * c.distance));
        }
    }
    Ok(SuiteReport { instances, violations, worst_ratio, seed })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionProfile {
    pub n: usize,
    /// Image word (base letters) and the projective diameter of its block product.
    pub per_word: Vec<(Word, f64)>,
    pub max_delta: f64,
    pub max_tau: f64,
}

/// Projective diameters of the block products over every admissible image
/// word of `N+1` (block) symbols. A product with a zero entry has an infinite diameter.
pub fn contraction_profile(factor: &Factor, n: usize, limit: usize) -> Result<ContractionProfile> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let mut words = Vec::new();
    factor.for_each_image_block_word(n + 1, limit, |w, _| words.push(factor.image_blocks_to_word(w)))?;
    let mut per_word = Vec::with_capacity(words.len());
    let mut max_delta: f64 = 0.0;
    for w in words {
        let p = factor.block_product(&w)?;
        // The operator acts on functions, i.e. as the transpose of the source-row product.
        let delta = match projective_diameter(&p.matrix.transpose()) {
            Ok(d) => d,
            Err(Error::ZeroColumn(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        max_delta = max_delta.max(delta);
        per_word.push((w, delta));
    }
    Ok(ContractionProfile { n, per_word, max_delta, max_tau: tanh_quarter(max_delta) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m2() -> Matrix<f64> {
        Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 1.0]])
    }

    #[test]
    fn alpha_beta_examples() {
        assert_eq!(hilbert_alpha_beta(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), (0.5, 2.0));
        assert_eq!(hilbert_alpha_beta(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), (1.0, 1.0));
        let (a, b) = hilbert_alpha_beta(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!((a, b), (1.0, f64::INFINITY));
        assert_eq!(hilbert_alpha_beta(&[1.0], &[1.0, 1.0]).unwrap_err(), Error::VectorDimension(1, 2));
        assert_eq!(hilbert_alpha_beta(&[0.0, 0.0], &[1.0, 1.0]).unwrap_err(), Error::ZeroVector);
    }

    #[test]
    fn distance_examples() {
        assert!((hilbert_distance(&[1.0, 2.0], &[2.0, 1.0]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(hilbert_distance(&[3.0, 6.0], &[1.0, 2.0]).unwrap() < 1e-15);
        assert_eq!(hilbert_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), f64::INFINITY);
        assert_eq!(hilbert_distance(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), f64::INFINITY);
        let d = cone_distance(&[1.0, 2.0], &[2.0, 1.0]).unwrap();
        assert!((d.theta - (d.beta / d.alpha).ln()).abs() < 1e-15);
    }

    #[test]
    fn dual_formula_examples() {
        let c = dual_formula_check(&[1.0, 2.0], &[2.0, 1.0], 2000, 7).unwrap();
        let l4 = 4f64.ln();
        assert!((c.closed_form - l4).abs() < 1e-15 && (c.coordinate_sup - l4).abs() < 1e-12);
        assert!(c.sampled_max <= l4 + 1e-12 && c.sampled_max > 0.0);
        assert!(c.zero_pairing_consistent);
        let c = dual_formula_check(&[1.0, 5.0], &[1.0, 5.0], 100, 1).unwrap();
        assert_eq!((c.closed_form, c.coordinate_sup), (0.0, 0.0));
        assert!(c.sampled_max.abs() < 1e-12);
        assert_eq!(dual_formula_check(&[1.0, 0.0], &[0.0, 1.0], 10, 1).unwrap_err(), Error::InfiniteDistance);
    }

    #[test]
    fn diameter_and_coefficient() {
        assert!((projective_diameter(&m2()).unwrap() - 2f64.ln()).abs() < 1e-15);
        let same = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 6.0]]);
        assert!(projective_diameter(&same.transpose()).unwrap() < 1e-15);
        assert_eq!(projective_diameter(&Matrix::identity(2)).unwrap(), f64::INFINITY);
        let zero_col = Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(projective_diameter(&zero_col).unwrap_err(), Error::ZeroColumn(1));

        let sqrt2 = 2f64.sqrt();
        assert!((birkhoff_coefficient(&m2()) - (sqrt2 - 1.0) / (sqrt2 + 1.0)).abs() < 1e-15);
        let rank1 = Matrix::from_fn(3, 3, |i, j| (i + 1) as f64 * (j + 2) as f64);
        assert!(birkhoff_coefficient(&rank1).abs() < 1e-15);
        let split = Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(birkhoff_coefficient(&split), 1.0);
    }

    #[test]
    fn contraction_examples() {
        let c = contraction_check(&m2(), &[1.0, 2.0], &[2.0, 1.0]).unwrap();
        assert!(c.holds);
        assert!((c.image_distance - 1.25f64.ln()).abs() < 1e-15);
        assert!(c.image_distance <= birkhoff_coefficient(&m2()) * 4f64.ln());
        let c = contraction_check(&m2(), &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(c.holds && c.image_distance == 0.0 && c.distance == 0.0);
        let kill = Matrix::from_rows(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert!(matches!(contraction_check(&kill, &[1.0, 0.0], &[1.0, 1.0]), Err(Error::DegenerateImage(_))));
    }

    #[test]
    fn random_suite_has_no_violations() {
        let r = birkhoff_suite(1000, 42).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn profile_on_factors() {
        use crate::{FactorMap, Gibbs, GibbsOptions, Potential, PotentialSpec, Sft, Alphabet};
        let sft = Sft::new(
            Alphabet::numbered(4),
            &[vec![1, 1, 1, 0], vec![0, 1, 1, 1], vec![1, 1, 1, 0], vec![0, 1, 1, 1]],
        )
        .unwrap();
        let (p, _) = Potential::new(&sft, &PotentialSpec::zero(&sft, 1).unwrap()).unwrap();
        let g = Gibbs::new(p, &GibbsOptions::default()).unwrap();
        let f = Factor::new(g, FactorMap::from_indices(Alphabet::numbered(2), vec![0, 0, 1, 1]).unwrap()).unwrap();
        let prof = contraction_profile(&f, 1, 1000).unwrap();
        assert_eq!(prof.per_word.len(), 4);
        assert_eq!(prof.per_word[0].0, vec![0, 0]);
        assert_eq!(prof.per_word[0].1, f64::INFINITY);
        assert_eq!(prof.max_tau, 1.0);

        // Full 3-shift onto {a, b}: every block operator is strictly positive.
        let sft = Sft::full_shift(3);
        let (p, _) = Potential::new(&sft, &PotentialSpec::zero(&sft, 1).unwrap()).unwrap();
        let g = Gibbs::new(p, &GibbsOptions::default()).unwrap();
        let f = Factor::new(g, FactorMap::from_indices(Alphabet::numbered(2), vec![0, 0, 1]).unwrap()).unwrap();
        let prof = contraction_profile(&f, 2, 1000).unwrap();
        assert_eq!(prof.per_word.len(), 8);
        assert!(prof.max_delta.is_finite() && prof.max_tau < 1.0);
    }

    fn positive_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1e-3f64..1e3, n)
    }

    proptest! {
        #[test]
        fn projectivity(x in positive_vec(4), y in positive_vec(4), a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            let d = hilbert_distance(&x, &y).unwrap();
            let xs: Vec<f64> = x.iter().map(|t| t * a).collect();
            let ys: Vec<f64> = y.iter().map(|t| t * b).collect();
            prop_assert!((hilbert_distance(&xs, &ys).unwrap() - d).abs() < 1e-12 * (1.0 + d));
        }

        #[test]
        fn symmetric_and_triangle(x in positive_vec(5), y in positive_vec(5), z in positive_vec(5)) {
            let (xy, yx) = (hilbert_distance(&x, &y).unwrap(), hilbert_distance(&y, &x).unwrap());
            prop_assert!((xy - yx).abs() < 1e-12);
            let (yz, xz) = (hilbert_distance(&y, &z).unwrap(), hilbert_distance(&x, &z).unwrap());
            prop_assert!(xz <= xy + yz + 1e-12);
        }

        #[test]
        fn diameter_dominates_column_pairs(entries in proptest::collection::vec(1e-2f64..1e2, 9)) {
            let m = Matrix::from_fn(3, 3, |i, j| entries[3 * i + j]);
            let delta = projective_diameter(&m).unwrap();
            let mut best: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let d = hilbert_distance(&m.column(i), &m.column(j)).unwrap();
                    prop_assert!(d <= delta + 1e-12);
                    best = best.max(d);
                }
            }
            prop_assert!((best - delta).abs() < 1e-12);
        }

        #[test]
        fn birkhoff_is_transpose_invariant(entries in proptest::collection::vec(1e-2f64..1e2, 12)) {
            let m = Matrix::from_fn(3, 4, |i, j| entries[4 * i + j]);
            let (a, b) = (projective_diameter(&m).unwrap(), projective_diameter(&m.transpose()).unwrap());
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a));
        }
    }
}
