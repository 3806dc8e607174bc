use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Spatial size, retained mode count and the conjugate-pair multiplicities
/// `c_k = 2 − δ_{k,0} − δ_{k,N/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    n: usize,
    k: usize,
    weights: Vec<f64>,
    weight_sum: f64,
    /// `cos(2πj/N)` for `j = 0..N`, with `table[j] == table[N − j]` bitwise
    /// so that matrices built from it are exactly symmetric.
    cos_table: Vec<f64>,
}

impl ModeSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        crate::numerics::dft::check_pow2(n)?;
        if k == 0 || k > n / 2 + 1 {
            return Err(Error::InvalidConfig(format!(
                "mode count {k} outside [1, N/2 + 1] for N = {n}"
            )));
        }
        let weights: Vec<f64> = (0..k)
            .map(|s| 2.0 - f64::from(s == 0) - f64::from(s == n / 2))
            .collect();
        let weight_sum = weights.iter().sum();
        let mut cos_table: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
        for j in n / 2 + 1..n {
            cos_table[j] = cos_table[n - j];
        }
        Ok(ModeSpec {
            n,
            k,
            weights,
            weight_sum,
            cos_table,
        })
    }

    /// No truncation: `K = N/2 + 1`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, n / 2 + 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_full(&self) -> bool {
        self.k == self.n / 2 + 1
    }

    /// `c_0 .. c_{K−1}`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `S = Σ c_s`; equals N at full mode and `2K − 1` otherwise.
    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    /// `θ^(k)_{α,α'} = 2πk(α − α')/N`.
    pub fn theta(&self, k: usize, a: usize, b: usize) -> f64 {
        2.0 * PI * k as f64 * (a as f64 - b as f64) / self.n as f64
    }

    #[inline]
    pub fn cos_theta(&self, k: usize, a: usize, b: usize) -> f64 {
        let n = self.n as i64;
        let j = (k as i64 * (a as i64 - b as i64)).rem_euclid(n);
        self.cos_table[j as usize]
    }

    /// `cos θ^(k)` as an N×N matrix. Any `k` (not only `k < K`) is allowed.
    pub fn cos_matrix(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |a, b| self.cos_theta(k, a, b))
    }

    /// `Σ_{s<K} c_s cos θ^(s)`.
    pub fn weighted_cos_sum(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |a, b| {
            (0..self.k)
                .map(|s| self.weights[s] * self.cos_theta(s, a, b))
                .sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_sums() {
        for n in [2usize, 8, 16, 64] {
            assert_eq!(ModeSpec::full(n).unwrap().weight_sum(), n as f64);
            for k in 1..=n / 2 {
                assert_eq!(ModeSpec::new(n, k).unwrap().weight_sum(), (2 * k - 1) as f64);
            }
        }
        let m = ModeSpec::new(8, 5).unwrap();
        assert_eq!(m.weights(), &[1.0, 2.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ModeSpec::new(12, 3).is_err());
        assert!(ModeSpec::new(8, 0).is_err());
        assert!(ModeSpec::new(8, 6).is_err());
    }

    #[test]
    fn cos_matrix_exactly_symmetric_and_matches_theta() {
        let m = ModeSpec::new(16, 9).unwrap();
        for k in 0..9 {
            let c = m.cos_matrix(k);
            assert_eq!(c, c.transpose());
            for a in 0..16 {
                for b in 0..16 {
                    assert!((c[(a, b)] - m.theta(k, a, b).cos()).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn full_mode_cosine_sum_is_n_identity() {
        let m = ModeSpec::full(8).unwrap();
        let s = m.weighted_cos_sum();
        assert!((s - DMatrix::<f64>::identity(8, 8) * 8.0).amax() < 1e-12);
    }
}
