//! Reproducible Gaussian sampling.
//!
//! A stream is identified by a root seed and a key (purpose tag, layer,
//! mode, replica). The 64-bit generator seed is obtained by folding every
//! key component into the root seed with the SplitMix64 finalizer, so equal
//! descriptors always give equal sequences and distinct descriptors give
//! decorrelated ChaCha8 streams. Sampling never mutates the descriptor.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamTag {
    Theta,
    Xi,
    Bias,
    Dense,
    Input,
    Teacher,
    Probe,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub tag: StreamTag,
    pub layer: u32,
    pub mode: u32,
    pub replica: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub root_seed: u64,
    pub key: StreamKey,
    /// Folded path of [`RngStream::child`] indices; 0 for a root stream.
    sub: u64,
}

#[inline]
pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(root_seed: u64, tag: StreamTag, layer: usize, mode: usize, replica: usize) -> Self {
        RngStream {
            root_seed,
            key: StreamKey {
                tag,
                layer: layer as u32,
                mode: mode as u32,
                replica: replica as u32,
            },
            sub: 0,
        }
    }

    /// Independent sub-stream, used to draw matrix columns separately.
    pub fn child(&self, index: usize) -> Self {
        RngStream {
            sub: splitmix(self.sub ^ splitmix(index as u64 + 1)),
            ..*self
        }
    }

    pub fn seed(&self) -> u64 {
        let k = &self.key;
        [
            k.tag as u64 + 1,
            k.layer as u64,
            k.mode as u64,
            k.replica as u64,
            self.sub,
        ]
        .iter()
        .fold(splitmix(self.root_seed), |h, &v| splitmix(h ^ splitmix(v)))
    }

    pub fn generator(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed())
    }

    /// `count` i.i.d. draws from N(0, variance).
    pub fn sample_normal(&self, variance: f64, count: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; count];
        self.fill_normal(variance, &mut out)?;
        Ok(out)
    }

    pub fn fill_normal(&self, variance: f64, out: &mut [f64]) -> Result<()> {
        if !variance.is_finite() || variance < 0.0 {
            return Err(Error::NegativeVariance(variance));
        }
        if variance == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        let sd = variance.sqrt();
        let mut rng = self.generator();
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = sd * z;
        }
        Ok(())
    }
}
