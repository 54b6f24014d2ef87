use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_unit, Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::precondition(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Gaussian entries with standard deviation `std`.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::precondition(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// `out = self · x`.
    #[inline]
    pub(crate) fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..][..self.cols];
            *slot = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `out += selfᵀ · y`.
    #[inline]
    pub(crate) fn mul_t_vec_add(&self, y: &[f64], out: &mut [f64]) {
        for (r, &yr) in y.iter().enumerate() {
            let row = &self.data[r * self.cols..][..self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yr;
            }
        }
    }

    /// `self += scale · u vᵀ`.
    #[inline]
    pub(crate) fn add_outer(&mut self, scale: f64, u: &[f64], v: &[f64]) {
        for (r, &ur) in u.iter().enumerate() {
            let k = scale * ur;
            let row = &mut self.data[r * self.cols..][..self.cols];
            for (o, b) in row.iter_mut().zip(v) {
                *o += k * b;
            }
        }
    }
}

/// Frozen base matrix plus a rank-`r` update scaled at run time:
/// `W' = W + s · A B` with `A: n×r`, `B: r×m`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankAdapter {
    pub base: Matrix,
    pub a: Matrix,
    pub b: Matrix,
}

impl LowRankAdapter {
    pub fn new(base: Matrix, a: Matrix, b: Matrix) -> Result<Self> {
        if a.rows != base.rows || b.cols != base.cols || a.cols != b.rows {
            return Err(Error::precondition(format!(
                "adapter shapes incompatible: W {}x{}, A {}x{}, B {}x{}",
                base.rows, base.cols, a.rows, a.cols, b.rows, b.cols
            )));
        }
        Ok(Self { base, a, b })
    }

    /// Rank-`rank` adapter with a zero `A`, so the update starts at zero.
    pub fn with_zero_update<R: Rng + ?Sized>(base: Matrix, rank: usize, rng: &mut R) -> Self {
        let (n, m) = (base.rows, base.cols);
        let b = Matrix::random(rank, m, 1.0 / (m as f64).sqrt(), rng);
        Self {
            base,
            a: Matrix::zeros(n, rank),
            b,
        }
    }

    pub fn rank(&self) -> usize {
        self.a.cols
    }

    /// `W + s · A B`; returns the base untouched when `s == 0`.
    pub fn effective(&self, s: f64) -> Result<Matrix> {
        check_unit("strength", s)?;
        if s == 0.0 {
            return Ok(self.base.clone());
        }
        let ab = self.a.matmul(&self.b)?;
        let data = self.base.data.iter().zip(&ab.data).map(|(w, d)| w + s * d).collect();
        Matrix::from_vec(self.base.rows, self.base.cols, data)
    }

    /// `out = (W + s A B) x` without materializing the product; `tmp` holds `B x`.
    #[inline]
    pub(crate) fn apply(&self, s: f64, x: &[f64], tmp: &mut [f64], out: &mut [f64]) {
        self.base.mul_vec_into(x, out);
        if s != 0.0 {
            self.b.mul_vec_into(x, tmp);
            for (r, o) in out.iter_mut().enumerate() {
                let row = &self.a.data[r * self.a.cols..][..self.a.cols];
                *o += s * row.iter().zip(tmp.iter()).map(|(a, t)| a * t).sum::<f64>();
            }
        }
    }
}
