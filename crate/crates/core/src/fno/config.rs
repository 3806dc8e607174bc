use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::meanfield::{Hyperparams, ModeSpec};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Spectral convolution, bias and activation only.
    Simplified,
    /// Adds the pointwise dense module `X W` in every layer.
    Original,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Simplified => "simplified",
            Variant::Original => "original",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplified" => Ok(Variant::Simplified),
            "original" => Ok(Variant::Original),
            other => Err(Error::InvalidConfig(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FnoConfig {
    pub n: usize,
    pub width: usize,
    pub modes: usize,
    pub depth: usize,
    pub activation: Activation,
    pub variant: Variant,
}

impl FnoConfig {
    pub fn new(
        n: usize,
        width: usize,
        modes: usize,
        depth: usize,
        activation: Activation,
        variant: Variant,
    ) -> Result<Self> {
        let c = FnoConfig {
            n,
            width,
            modes,
            depth,
            activation,
            variant,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ModeSpec::new(self.n, self.modes)?;
        if self.width == 0 {
            return Err(Error::InvalidConfig("width must be positive".into()));
        }
        if self.depth == 0 {
            return Err(Error::InvalidConfig("depth must be positive".into()));
        }
        Ok(())
    }

    pub fn mode_spec(&self) -> Result<ModeSpec> {
        ModeSpec::new(self.n, self.modes)
    }

    /// Whether `Ξ^(ℓ,k)` is a trainable tensor; it is pinned to zero for the
    /// real-valued modes `k = 0` and `k = N/2`.
    pub fn xi_active(&self, k: usize) -> bool {
        k != 0 && k != self.n / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// `Θ, Ξ ~ N(0, σ²/2D)`, `b ~ N(0, σ_b²)`.
    GaussianGeneric,
    /// The generic scheme at `σ² = 2`, `σ_b² = 0`.
    HeSimplified,
    /// Original variant: `Θ, Ξ ~ N(0, σ²/4D)`, `W ~ N(0, σ²/2D)`.
    OriginalSplit,
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitScheme::GaussianGeneric => "gaussian_generic",
            InitScheme::HeSimplified => "he_simplified",
            InitScheme::OriginalSplit => "original_split",
        })
    }
}

impl FromStr for InitScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "gaussian_generic" => Ok(InitScheme::GaussianGeneric),
            "he_simplified" => Ok(InitScheme::HeSimplified),
            "original_split" => Ok(InitScheme::OriginalSplit),
            other => Err(Error::InvalidConfig(format!("unknown init scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub sigma2: f64,
    pub sigma_b2: f64,
    pub scheme: InitScheme,
    pub root_seed: u64,
}

/// Entry variances of every tensor for a given width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitVariances {
    pub theta: f64,
    pub xi: f64,
    pub dense: Option<f64>,
    pub bias: f64,
}

impl InitConfig {
    pub fn new(sigma2: f64, sigma_b2: f64, scheme: InitScheme, root_seed: u64) -> Result<Self> {
        let (sigma2, sigma_b2) = match scheme {
            InitScheme::HeSimplified => (2.0, 0.0),
            _ => (sigma2, sigma_b2),
        };
        Hyperparams::new(Activation::Relu, sigma2, sigma_b2)?;
        Ok(InitConfig {
            sigma2,
            sigma_b2,
            scheme,
            root_seed,
        })
    }

    pub fn he_simplified(root_seed: u64) -> Self {
        InitConfig {
            sigma2: 2.0,
            sigma_b2: 0.0,
            scheme: InitScheme::HeSimplified,
            root_seed,
        }
    }

    /// The scheme matching `variant`.
    pub fn for_variant(variant: Variant, sigma2: f64, sigma_b2: f64, root_seed: u64) -> Result<Self> {
        let scheme = match variant {
            Variant::Simplified => InitScheme::GaussianGeneric,
            Variant::Original => InitScheme::OriginalSplit,
        };
        Self::new(sigma2, sigma_b2, scheme, root_seed)
    }

    pub fn check_against(&self, config: &FnoConfig) -> Result<()> {
        let expected = match self.scheme {
            InitScheme::GaussianGeneric | InitScheme::HeSimplified => Variant::Simplified,
            InitScheme::OriginalSplit => Variant::Original,
        };
        if expected != config.variant {
            return Err(Error::InvalidConfig(format!(
                "init scheme {} does not fit the {} variant",
                self.scheme, config.variant
            )));
        }
        if self.scheme == InitScheme::HeSimplified && (self.sigma2 != 2.0 || self.sigma_b2 != 0.0) {
            return Err(Error::InvalidConfig("he_simplified fixes sigma2 = 2, sigma_b2 = 0".into()));
        }
        Hyperparams::new(config.activation, self.sigma2, self.sigma_b2).map(|_| ())
    }

    pub fn variances(&self, width: usize) -> InitVariances {
        let d = width as f64;
        match self.scheme {
            InitScheme::GaussianGeneric | InitScheme::HeSimplified => InitVariances {
                theta: self.sigma2 / (2.0 * d),
                xi: self.sigma2 / (2.0 * d),
                dense: None,
                bias: self.sigma_b2,
            },
            InitScheme::OriginalSplit => InitVariances {
                theta: self.sigma2 / (4.0 * d),
                xi: self.sigma2 / (4.0 * d),
                dense: Some(self.sigma2 / (2.0 * d)),
                bias: self.sigma_b2,
            },
        }
    }

    pub fn hyperparams(&self, activation: Activation) -> Result<Hyperparams> {
        Hyperparams::new(activation, self.sigma2, self.sigma_b2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn he_forces_point() {
        let i = InitConfig::new(5.0, 1.0, InitScheme::HeSimplified, 0).unwrap();
        assert_eq!((i.sigma2, i.sigma_b2), (2.0, 0.0));
        assert_eq!(i.variances(64).theta, 1.0 / 64.0);
    }

    #[test]
    fn scheme_variant_mismatch() {
        let c = FnoConfig::new(8, 4, 3, 2, Activation::Relu, Variant::Simplified).unwrap();
        let i = InitConfig::new(2.0, 0.0, InitScheme::OriginalSplit, 0).unwrap();
        assert!(i.check_against(&c).is_err());
        let c = FnoConfig { variant: Variant::Original, ..c };
        assert!(i.check_against(&c).is_ok());
        assert!(InitConfig::he_simplified(0).check_against(&c).is_err());
    }

    #[test]
    fn config_bounds() {
        assert!(FnoConfig::new(12, 4, 3, 2, Activation::Relu, Variant::Simplified).is_err());
        assert!(FnoConfig::new(8, 4, 6, 2, Activation::Relu, Variant::Simplified).is_err());
        assert!(FnoConfig::new(8, 0, 3, 2, Activation::Relu, Variant::Simplified).is_err());
        assert!(FnoConfig::new(8, 4, 3, 0, Activation::Relu, Variant::Simplified).is_err());
    }

    #[test]
    fn original_split_variances() {
        let i = InitConfig::new(2.0, 0.0, InitScheme::OriginalSplit, 0).unwrap();
        let v = i.variances(32);
        assert_eq!(v.theta, 2.0 / 128.0);
        assert_eq!(v.dense, Some(2.0 / 64.0));
    }
}
