//! Dense square matrices in row-major order.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> SquareMatrix<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![F::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { F::one() } else { F::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from `n` rows of length `n`.
    ///
    /// Panics if any row has the wrong length.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "row length must equal row count");
            data.extend(row);
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn max(&self) -> F {
        self.data.iter().copied().fold(F::neg_infinity(), F::max)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> F {
        let mut worst = F::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Mean of the strictly upper-triangular entries.
    pub fn upper_triangle_mean(&self) -> F {
        let n = self.n;
        if n < 2 {
            return F::zero();
        }
        let mut sum = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                sum = sum + self[(i, j)];
            }
        }
        sum * F::lit(2.0) / F::lit((n * (n - 1)) as f64)
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<F> Index<(usize, usize)> for SquareMatrix<F> {
    type Output = F;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.n + j]
    }
}

impl<F> IndexMut<(usize, usize)> for SquareMatrix<F> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.n + j]
    }
}
