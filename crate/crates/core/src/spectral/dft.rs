use num_complex::Complex;

use crate::scalar::Scalar;

use super::PowerSpectrum;

/// Unitary DFT with time indexed from 1:
/// `Z(j/n) = n^{-1/2} sum_{t=1}^{n} x(t) exp(-2 pi i j t / n)`, `j = 0..n`.
pub fn dft<F: Scalar>(x: &[F]) -> Vec<Complex<F>> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<F>> = x.iter().map(|&v| Complex::new(v, F::zero())).collect();
    F::forward_fft(&mut buf);
    let scale = F::one() / F::lit(n as f64).sqrt();
    let two_pi = F::TAU();
    let nf = F::lit(n as f64);
    buf.iter()
        .enumerate()
        .map(|(j, &z)| {
            // the FFT sums from t = 0; shifting to t = 1 multiplies by exp(-2 pi i j / n)
            let angle = -two_pi * F::lit(j as f64) / nf;
            z * Complex::new(angle.cos(), angle.sin()) * scale
        })
        .collect()
}

/// Number of non-redundant Fourier frequencies for a length-`n` series.
pub fn half_spectrum_len(n: usize) -> usize {
    n / 2 + 1
}

/// `I(j/n) = |Z(j/n)|^2` on `j = 0..=n/2`.
pub fn periodogram<F: Scalar>(x: &[F]) -> PowerSpectrum<F> {
    let n = x.len();
    let m = half_spectrum_len(n);
    let z = dft(x);
    let nf = F::lit(n.max(1) as f64);
    PowerSpectrum {
        frequencies: (0..m).map(|j| F::lit(j as f64) / nf).collect(),
        values: z.iter().take(m).map(|c| c.norm_sqr()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_point_dft() {
        let z = dft(&[1.0f64, -1.0]);
        assert!(z[0].norm() < 1e-15);
        assert!((z[1].norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_vector() {
        assert!(dft(&[0.0f64; 8]).iter().all(|c| c.norm() == 0.0));
        assert!(periodogram(&[0.0f64; 9]).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_direct_definition_with_unit_offset() {
        let x = [0.3f64, -1.2, 2.0, 0.7, -0.4, 0.1];
        let n = x.len() as f64;
        let z = dft(&x);
        for (j, zj) in z.iter().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            for (k, &v) in x.iter().enumerate() {
                let t = (k + 1) as f64;
                let a = -2.0 * PI * j as f64 * t / n;
                acc += Complex::new(a.cos(), a.sin()) * v;
            }
            acc /= n.sqrt();
            assert!((acc - zj).norm() < 1e-13);
        }
    }

    #[test]
    fn cosine_energy_at_conjugate_bins() {
        let n = 64;
        let x: Vec<f64> = (1..=n)
            .map(|t| (2.0 * PI * t as f64 * 4.0 / n as f64).cos())
            .collect();
        let z = dft(&x);
        let energy: f64 = x.iter().map(|v| v * v).sum();
        // analytic: |Z(4/64)|^2 = |Z(60/64)|^2 = n/4, all others vanish
        for (j, zj) in z.iter().enumerate() {
            let expect = if j == 4 || j == 60 { n as f64 / 4.0 } else { 0.0 };
            assert!((zj.norm_sqr() - expect).abs() < 1e-10, "bin {j}");
        }
        assert!((z[4].norm_sqr() + z[60].norm_sqr() - energy).abs() < 1e-10);
        let p = periodogram(&x);
        assert_eq!(p.argmax(), Some(4));
        assert_eq!(p.frequencies[4], 4.0 / 64.0);
        assert_eq!(p.len(), 33);
    }

    #[test]
    fn f32_periodogram_agrees() {
        let x: Vec<f32> = (0..16).map(|t| ((t * 7) % 5) as f32 - 2.0).collect();
        let p32 = periodogram(&x);
        let x64: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let p64 = periodogram(&x64);
        for (a, b) in p32.values.iter().zip(&p64.values) {
            assert!((*a as f64 - b).abs() < 1e-4);
        }
    }
}
