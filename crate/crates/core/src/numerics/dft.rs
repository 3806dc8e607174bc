//! Power-of-two discrete Fourier transforms.
//!
//! Normalization: the forward transform carries the 1/N factor,
//! `x̂_k = (1/N) Σ_n exp(-2πi kn/N) x_n`, and the inverse carries none, so
//! `dft_inverse(dft_forward(x)) == x`. Parseval reads `Σ x_n² = N Σ |x̂_k|²`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub(crate) fn check_pow2(n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::NotPowerOfTwo(n))
    }
}

/// In-place iterative radix-2 FFT with kernel `exp(sign·2πi kn/N)`, unscaled.
fn fft_in_place(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = Complex64::from_polar(1.0, step * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Forward transform of a real signal, scaled by 1/N.
pub fn dft_forward(signal: &[f64]) -> Result<Vec<Complex64>> {
    let n = signal.len();
    check_pow2(n)?;
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut buf, -1.0);
    let scale = 1.0 / n as f64;
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}

/// Inverse transform (no scaling) of a conjugate-symmetric spectrum back to a
/// real signal.
pub fn dft_inverse(spectrum: &[Complex64]) -> Result<Vec<f64>> {
    let n = spectrum.len();
    check_pow2(n)?;
    let magnitude = spectrum.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    for k in 0..n {
        let mismatch = (spectrum[k] - spectrum[(n - k) % n].conj()).norm();
        if mismatch > 1e-10 * magnitude {
            return Err(Error::NotConjugateSymmetric { mode: k, mismatch });
        }
    }
    let mut buf = spectrum.to_vec();
    fft_in_place(&mut buf, 1.0);
    Ok(buf.into_iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        Complex64::from_polar(v, -2.0 * PI * (k * j % n) as f64 / n as f64)
                    })
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn constant_signal_has_only_mode_zero() {
        let s = dft_forward(&[1.0; 8]).unwrap();
        assert!((s[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for z in &s[1..] {
            assert!(z.norm() < 1e-15);
        }
    }

    #[test]
    fn impulse_is_flat() {
        for n in [2usize, 4, 16, 64] {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            for z in dft_forward(&x).unwrap() {
                assert!((z - Complex64::new(1.0 / n as f64, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn cosine_matches_direct_sum() {
        let n = 8;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let s = dft_forward(&x).unwrap();
        let oracle = direct(&x);
        for k in 0..n {
            assert!((s[k] - oracle[k]).norm() < 1e-14);
        }
        assert!((s[1].re - 0.5).abs() < 1e-14 && (s[7].re - 0.5).abs() < 1e-14);
        for k in [0, 2, 3, 4, 5, 6] {
            assert!(s[k].norm() < 1e-14, "mode {k}");
        }
    }

    #[test]
    fn inverse_of_cosine_pair() {
        let n = 16;
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[1] = Complex64::new(0.5, 0.0);
        spec[n - 1] = Complex64::new(0.5, 0.0);
        let x = dft_inverse(&spec).unwrap();
        for (i, v) in x.iter().enumerate() {
            assert!((v - (2.0 * PI * i as f64 / n as f64).cos()).abs() < 1e-14);
        }
        let mut dc = vec![Complex64::new(0.0, 0.0); n];
        dc[0] = Complex64::new(2.5, 0.0);
        assert!(dft_inverse(&dc).unwrap().iter().all(|v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(dft_forward(&[1.0; 6]), Err(Error::NotPowerOfTwo(6)));
        assert_eq!(dft_forward(&[1.0]), Err(Error::NotPowerOfTwo(1)));
        let mut spec = vec![Complex64::new(0.0, 0.0); 8];
        spec[1] = Complex64::new(0.0, 1.0);
        assert!(matches!(
            dft_inverse(&spec),
            Err(Error::NotConjugateSymmetric { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn signal() -> impl Strategy<Value = Vec<f64>> {
            (1u32..8).prop_flat_map(|m| prop::collection::vec(-10.0f64..10.0, 1usize << m))
        }

        proptest! {
            #[test]
            fn round_trip(x in signal()) {
                let back = dft_inverse(&dft_forward(&x).unwrap()).unwrap();
                for (a, b) in x.iter().zip(&back) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }

            #[test]
            fn parseval_and_conjugate_symmetry(x in signal()) {
                let n = x.len();
                let s = dft_forward(&x).unwrap();
                let energy: f64 = x.iter().map(|v| v * v).sum();
                let spectral: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>() * n as f64;
                prop_assert!((energy - spectral).abs() <= 1e-10 * energy.max(1.0));
                for k in 1..n {
                    prop_assert!((s[n - k] - s[k].conj()).norm() < 1e-12);
                }
            }

            #[test]
            fn linear(x in signal(), a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
                let y: Vec<f64> = (0..x.len()).map(|i| ((i as u64 * 7919 + seed) % 97) as f64 / 10.0 - 4.0).collect();
                let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
                let (sx, sy, sc) = (dft_forward(&x).unwrap(), dft_forward(&y).unwrap(), dft_forward(&combo).unwrap());
                for k in 0..x.len() {
                    prop_assert!((sc[k] - (sx[k] * a + sy[k] * b)).norm() < 1e-12);
                }
            }

            #[test]
            fn fft_matches_direct(x in signal()) {
                let s = dft_forward(&x).unwrap();
                for (a, b) in s.iter().zip(direct(&x)) {
                    prop_assert!((a - b).norm() < 1e-11);
                }
            }
        }
    }
}
