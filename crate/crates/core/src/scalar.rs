//! Floating-point scalar abstraction shared by every analysis module.

use std::cell::RefCell;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftPlanner;

/// Real scalar type the analyses are generic over (`f32` or `f64`).
///
/// The two numerical kernels that come from external libraries, the FFT and
/// the dense symmetric eigensolver, are dispatched through this trait so that
/// generic code only ever sees the [`Float`] method set.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Sum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// In-place unnormalized forward DFT, `X[j] = sum_t x[t] exp(-2 pi i j t / n)`.
    fn forward_fft(buffer: &mut [Complex<Self>]);

    /// Eigenpairs of the symmetric `n x n` row-major matrix `data`.
    ///
    /// Returns unsorted eigenvalues and the matching unit eigenvectors.
    fn symmetric_eigen(n: usize, data: &[Self]) -> (Vec<Self>, Vec<Vec<Self>>);

    /// Converts an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Lossy widening used for serialization and random sampling.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $planner:ident) => {
        thread_local! {
            static $planner: RefCell<FftPlanner<$t>> = RefCell::new(FftPlanner::new());
        }

        impl Scalar for $t {
            fn forward_fft(buffer: &mut [Complex<Self>]) {
                if buffer.is_empty() {
                    return;
                }
                let fft = $planner.with(|p| p.borrow_mut().plan_fft_forward(buffer.len()));
                fft.process(buffer);
            }

            fn symmetric_eigen(n: usize, data: &[Self]) -> (Vec<Self>, Vec<Vec<Self>>) {
                let m = nalgebra::DMatrix::<$t>::from_row_slice(n, n, data);
                let eig = nalgebra::SymmetricEigen::new(m);
                let values = eig.eigenvalues.iter().copied().collect();
                let vectors = eig
                    .eigenvectors
                    .column_iter()
                    .map(|c| c.iter().copied().collect())
                    .collect();
                (values, vectors)
            }
        }
    };
}

impl_scalar!(f32, PLANNER_F32);
impl_scalar!(f64, PLANNER_F64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_matches_direct_sum() {
        let x = [1.0f64, 2.0, -0.5, 3.0, 0.25];
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        f64::forward_fft(&mut buf);
        let n = x.len() as f64;
        for (j, z) in buf.iter().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (j * t) as f64 / n;
                acc += Complex::new(ang.cos(), ang.sin()) * v;
            }
            assert!((acc - z).norm() < 1e-12);
        }
    }

    #[test]
    fn eigen_of_diagonal() {
        let (vals, vecs) = f32::symmetric_eigen(2, &[2.0, 0.0, 0.0, 5.0]);
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sorted[0] - 2.0).abs() < 1e-6 && (sorted[1] - 5.0).abs() < 1e-6);
        assert_eq!(vecs.len(), 2);
    }
}
