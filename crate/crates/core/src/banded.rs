//! Symmetric banded matrices and their Cholesky factorization.
//!
//! Only the diagonal and the `bandwidth` super-diagonals are stored; entry
//! `(i, j)` with `j < i` is read from `(j, i)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    // row-major: data[i * (bandwidth + 1) + k] = A[i][i + k]
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        (hi < self.n && k <= self.bandwidth).then(|| lo * (self.bandwidth + 1) + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |at| self.data[at])
    }

    /// Sets `(i, j)` and, by symmetry, `(j, i)`.
    ///
    /// # Panics
    /// If the entry lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let at = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.bandwidth));
        self.data[at] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let at = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.bandwidth));
        self.data[at] += value;
    }

    pub fn add_diagonal(&mut self, i: usize, value: f64) {
        self.add(i, i, value);
    }

    /// Same matrix stored with a wider band.
    pub fn widened(&self, bandwidth: usize) -> Self {
        assert!(bandwidth >= self.bandwidth);
        let mut out = Self::zeros(self.n, bandwidth);
        for i in 0..self.n {
            for k in 0..=self.bandwidth.min(self.n - 1 - i) {
                out.set(i, i + k, self.get(i, i + k));
            }
        }
        out
    }

    /// `a * self + b * other`, band taken as the wider of the two.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = Self::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i..(i + bw + 1).min(self.n) {
                out.set(i, j, a * self.get(i, j) + b * other.get(i, j));
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            n: self.n,
            bandwidth: self.bandwidth,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let w = self.bandwidth + 1;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..w.min(self.n - i) {
                y[i] += row[k] * x[i + k];
                y[i + k] += row[k] * x[i];
            }
        }
    }

    /// `xᵗ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Factor `A = Uᵗ U` with `U` upper triangular and banded.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let n = self.n;
        let p = self.bandwidth;
        let w = p + 1;
        let mut u = self.data.clone();
        for i in 0..n {
            for k in 0..w.min(n - i) {
                let j = i + k;
                let mut sum = u[i * w + k];
                for l in j.saturating_sub(p)..i {
                    sum -= u[l * w + (i - l)] * u[l * w + (j - l)];
                }
                if k == 0 {
                    if !(sum > 0.0) {
                        return Err(Error::NotPositiveDefinite {
                            pivot: i,
                            value: sum,
                        });
                    }
                    u[i * w] = sum.sqrt();
                } else {
                    u[i * w + k] = sum / u[i * w];
                }
            }
        }
        Ok(BandCholesky {
            n,
            bandwidth: p,
            factor: u,
        })
    }
}

/// Upper Cholesky factor of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bandwidth: usize,
    factor: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let w = self.bandwidth + 1;
        let u = &self.factor;
        // Uᵗ z = b
        for i in 0..self.n {
            let mut sum = x[i];
            for l in i.saturating_sub(self.bandwidth)..i {
                sum -= u[l * w + (i - l)] * x[l];
            }
            x[i] = sum / u[i * w];
        }
        // U x = z
        for i in (0..self.n).rev() {
            let mut sum = x[i];
            for k in 1..w.min(self.n - i) {
                sum -= u[i * w + k] * x[i + k];
            }
            x[i] = sum / u[i * w];
        }
    }

    /// Smallest diagonal entry of the factor; zero would mean singular.
    pub fn min_pivot(&self) -> f64 {
        let w = self.bandwidth + 1;
        (0..self.n)
            .map(|i| self.factor[i * w])
            .fold(f64::INFINITY, f64::min)
    }
}
