use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Temporal,
    Spectral,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Temporal => "temporal",
            Domain::Spectral => "spectral",
        }
    }
}

/// Symmetric similarity matrix in [0, 1] with its affinity norm.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<F> {
    pub values: SquareMatrix<F>,
    /// Mean of the strictly upper-triangular entries.
    pub norm: F,
    pub domain: Domain,
}

impl<F: Scalar> AffinityMatrix<F> {
    pub fn len(&self) -> usize {
        self.values.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.values.dim() == 0
    }

    /// `1 - A`, the dissimilarity used for clustering.
    pub fn dissimilarity(&self) -> SquareMatrix<F> {
        self.values.map(|a| F::one() - a)
    }
}

/// `A = 1 - D / max(D)`.
///
/// `distance` must be square, non-negative, symmetric, zero on the diagonal
/// and not identically zero.
pub fn to_affinity<F: Scalar>(distance: &SquareMatrix<F>, domain: Domain) -> Result<AffinityMatrix<F>> {
    let n = distance.dim();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "affinity needs at least 2 series, got {n}"
        )));
    }
    let max = distance.max();
    if !max.is_finite() {
        return Err(Error::Degenerate("distance matrix has non-finite entries".into()));
    }
    if !(max > F::zero()) {
        return Err(Error::Degenerate(
            "all pairwise distances are zero; affinity is undefined".into(),
        ));
    }
    if distance.as_slice().iter().any(|&v| v < F::zero()) {
        return Err(Error::InvalidParameter("distance matrix has negative entries".into()));
    }
    if (0..n).any(|i| distance[(i, i)] != F::zero()) {
        return Err(Error::InvalidParameter("distance matrix has a non-zero diagonal".into()));
    }
    if distance.asymmetry() > F::lit(1e-12) * max {
        return Err(Error::InvalidParameter("distance matrix is not symmetric".into()));
    }
    let mut values = SquareMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = (F::one() - distance[(i, j)] / max).max(F::zero());
            values[(i, j)] = a;
            values[(j, i)] = a;
        }
    }
    let norm = values.upper_triangle_mean();
    Ok(AffinityMatrix {
        values,
        norm,
        domain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_case() {
        let d = SquareMatrix::from_rows(vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        let a = to_affinity(&d, Domain::Temporal).unwrap();
        assert_eq!(a.values, SquareMatrix::identity(2));
        assert_eq!(a.norm, 0.0);
    }

    #[test]
    fn three_point_case() {
        let d = SquareMatrix::from_rows(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ]);
        let a = to_affinity(&d, Domain::Spectral).unwrap();
        assert_eq!(a.values[(0, 1)], 0.5);
        assert_eq!(a.values[(0, 2)], 0.0);
        assert_eq!(a.values[(1, 2)], 0.5);
        assert!((a.norm - 1.0 / 3.0f64).abs() < 1e-15);
        assert_eq!(a.domain, Domain::Spectral);
    }

    #[test]
    fn rejects_degenerate_and_invalid() {
        let zero = SquareMatrix::<f64>::zeros(3);
        assert!(matches!(to_affinity(&zero, Domain::Temporal), Err(Error::Degenerate(_))));
        let asym = SquareMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(to_affinity(&asym, Domain::Temporal).is_err());
        let diag = SquareMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
        assert!(to_affinity(&diag, Domain::Temporal).is_err());
    }
}
