//! Small dense complex linear algebra and seeded random streams.
//!
//! Matrices here are tiny (one row/column per station), so everything is a
//! straightforward row-major `Vec` with unblocked kernels.

use std::fmt;
use std::ops::{Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Condition estimate above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "non-finite matrix entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// Multiplies row `i` by `factors[i]`, i.e. `diag(factors) * self`.
    pub fn scale_rows(&self, factors: &[C64]) -> Self {
        assert_eq!(factors.len(), self.rows);
        Self::from_fn(self.rows, self.cols, |i, j| factors[i] * self[(i, j)])
    }

    /// Row `i` of the result is row `order[i]` of `self`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        Self::from_fn(order.len(), self.cols, |i, j| self[(order[i], j)])
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn invert(&self) -> Result<Inverse> {
        invert(self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// LU factorization `P A = L U` with partial pivoting, packed in place.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: ComplexMatrix,
    pivots: Vec<usize>,
    singular: bool,
}

impl LuFactorization {
    pub fn new(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "cannot factor a {}x{} matrix",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let mut lu = m.clone();
        let mut pivots: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (p, max) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if max == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                pivots.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { lu, pivots, singular })
    }

    /// Solves `A x = b` for one right-hand side.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.rows;
        let mut x: Vec<C64> = self.pivots.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// A matrix inverse together with its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct Inverse {
    pub matrix: ComplexMatrix,
    pub condition: f64,
}

/// Inverts a square matrix by LU with partial pivoting.
///
/// The condition number is `‖m‖₁·‖m⁻¹‖₁`, computed from the explicit inverse
/// the factorization produces; anything above [`SINGULAR_CONDITION`] is an error.
pub fn invert(m: &ComplexMatrix) -> Result<Inverse> {
    let lu = LuFactorization::new(m)?;
    if lu.singular {
        return Err(Error::SingularMatrix {
            condition: f64::INFINITY,
        });
    }
    let n = m.rows;
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        e[j] = C64::new(1.0, 0.0);
        for (i, v) in lu.solve(&e).into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    let condition = m.one_norm() * inv.one_norm();
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularMatrix { condition });
    }
    Ok(Inverse {
        matrix: inv,
        condition,
    })
}

/// A deterministic random stream keyed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8 with the stream index mapped onto ChaCha's 64-bit stream
/// id, so every key gives an independent sequence no matter which other
/// streams were consumed before it.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    /// Stream keyed by a tuple of labels under the same master seed.
    pub fn keyed(master_seed: u64, key: &[u64]) -> Self {
        let index = key
            .iter()
            .fold(0x6a09_e667_f3bc_c908_u64, |acc, &k| splitmix64(acc ^ splitmix64(k)));
        Self::new(master_seed, index)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// One circularly-symmetric complex Gaussian sample with the given variance.
    pub fn complex_gaussian(&mut self, variance: f64) -> C64 {
        let scale = (variance / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        C64::new(re * scale, im * scale)
    }

    pub fn complex_gaussian_vec(&mut self, len: usize, variance: f64) -> Vec<C64> {
        (0..len).map(|_| self.complex_gaussian(variance)).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `n x n` matrix of i.i.d. CN(0, 1) entries (real and imaginary parts each
/// of variance 1/2).
pub fn sample_complex_gaussian(n: usize, rng: &mut RngStream) -> ComplexMatrix {
    assert!(n >= 1, "matrix dimension must be positive");
    ComplexMatrix::from_fn(n, n, |_, _| rng.complex_gaussian(1.0))
}
