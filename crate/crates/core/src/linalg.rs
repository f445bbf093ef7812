//! Small dense matrices over `f64`, exact rationals, and booleans.
//!
//! Everything in this crate is low-dimensional (alphabets of a few dozen
//! symbols at most), so a row-major `Vec` is all that is needed.

use std::fmt::Debug;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arithmetic needed by the generic kernels: a commutative semiring with an order.
pub trait Scalar: Clone + Debug + PartialOrd + Zero + One + Add<Output = Self> + Mul<Output = Self> {}

impl<T> Scalar for T where T: Clone + Debug + PartialOrd + Zero + One + Add<Output = T> + Mul<Output = T> {}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Sub-matrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::filled(self.rows, other.cols, T::zero());
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    /// `M x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `xᵀ M` for a row vector `x`.
    pub fn vec_mul(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![T::zero(); self.cols];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let m = self.get(i, j);
                if !m.is_zero() {
                    *o = o.clone() + xi.clone() * m.clone();
                }
            }
        }
        out
    }

    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|x| *x > T::zero())
    }

    pub fn support(&self) -> Matrix<bool> {
        self.map(|x| !x.is_zero())
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

impl Matrix<bool> {
    /// Boolean (OR/AND) product; never overflows.
    pub fn bool_mul(&self, other: &Matrix<bool>) -> Matrix<bool> {
        assert_eq!(self.cols, other.rows);
        Matrix::from_fn(self.rows, other.cols, |i, j| (0..self.cols).any(|k| *self.get(i, k) && *other.get(k, j)))
    }

    pub fn all_true(&self) -> bool {
        self.data.iter().all(|&b| b)
    }

    pub fn any_true(&self) -> bool {
        self.data.iter().any(|&b| b)
    }
}

/// Row vector propagated through a product of non-negative matrices with
/// per-step renormalization; the true vector is `exp(log_scale) * vector`.
#[derive(Clone, Debug)]
pub struct ScaledVector {
    pub vector: Vec<f64>,
    pub log_scale: f64,
}

impl ScaledVector {
    pub fn new(vector: Vec<f64>) -> Self {
        let mut v = ScaledVector { vector, log_scale: 0.0 };
        v.renormalize();
        v
    }

    pub fn renormalize(&mut self) {
        let m = self.vector.iter().cloned().fold(0.0_f64, f64::max);
        if m > 0.0 && m.is_finite() {
            for x in &mut self.vector {
                *x /= m;
            }
            self.log_scale += m.ln();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.vector.iter().all(|&x| x == 0.0)
    }

    /// `self ← self · M`, renormalized.
    pub fn step(&mut self, m: &Matrix<f64>) {
        self.vector = m.vec_mul(&self.vector);
        self.renormalize();
    }

    /// Natural log of `⟨self, w⟩`; `-∞` if the pairing vanishes.
    pub fn log_pair(&self, w: &[f64]) -> f64 {
        let d = dot(&self.vector, w);
        if d > 0.0 {
            self.log_scale + d.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `log(Σ exp(xᵢ))`, robust to `-∞` entries.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    // Division of two huge integers loses range; go through logs when needed.
    use num_traits::ToPrimitive;
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
        _ => rational_ln(q).exp() * q.numer().signum().to_f64().unwrap_or(1.0),
    }
}

/// Natural log of a positive rational, exact enough for huge numerators and denominators.
pub fn rational_ln(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    bigint_ln(&q.numer().abs()) - bigint_ln(q.denom())
}

fn bigint_ln(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().expect("finite for < 1000 bits").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit mantissa");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// by continued fractions.
pub fn rationalize(x: f64, max_den: u64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den as i128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    Some(BigRational::new(BigInt::from(p1), BigInt::from(q1)))
}

/// Basis of the right null space of `m` over the rationals (reduced row echelon form).
pub fn rational_null_space(m: &Matrix<BigRational>) -> Vec<Vec<BigRational>> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.to_rows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = BigRational::one() / a[r][c].clone();
        for x in a[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let v = a[r][j].clone() * f.clone();
                    a[i][j] = a[i][j].clone() - v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}
