//! Network weights, stored or regenerated column by column.
//!
//! Every weight column has its own random stream keyed by (tensor, layer,
//! mode, replica, column), so a very wide network can be propagated without
//! ever holding a full D×D matrix, and the stored parameters of a small
//! network are exactly the columns the streaming source would produce.

use super::{FnoConfig, InitConfig};
use crate::error::{Error, Result};
use crate::numerics::{RngStream, StreamTag};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `Θ^(ℓ,k)` for `k < K`, D×D.
    pub theta: Vec<DMatrix<f64>>,
    /// `Ξ^(ℓ,k)`; zero at `k = 0` and `k = N/2`.
    pub xi: Vec<DMatrix<f64>>,
    pub bias: DVector<f64>,
    /// `W^(ℓ)` of the original variant.
    pub dense: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnoParams {
    /// `layers[ℓ − 1]` holds layer ℓ.
    pub layers: Vec<LayerParams>,
}

/// Receives `(j, Θ[:, j], Ξ[:, j])`.
pub type ModeColumnFn<'a> = dyn FnMut(usize, &[f64], Option<&[f64]>) + 'a;

/// Column access shared by the forward and backward passes.
pub trait WeightSource {
    /// Calls `f(j, Θ[:, j], Ξ[:, j])` for every output feature `j` of mode
    /// `k` in layer `layer` (1-based). A source may pass `None` for a pinned
    /// `Ξ`; callers ignore `Ξ` at pinned modes either way.
    fn for_each_mode_column(
        &self,
        layer: usize,
        k: usize,
        f: &mut ModeColumnFn<'_>,
    ) -> Result<()>;

    /// Calls `f(j, W[:, j])`; does nothing for the simplified variant.
    fn for_each_dense_column(&self, layer: usize, f: &mut dyn FnMut(usize, &[f64])) -> Result<()>;

    fn bias(&self, layer: usize) -> Result<DVector<f64>>;
}

/// Weights regenerated on demand from the random streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamedParams {
    pub config: FnoConfig,
    pub init: InitConfig,
    pub replica: usize,
}

impl StreamedParams {
    pub fn new(config: FnoConfig, init: InitConfig, replica: usize) -> Result<Self> {
        config.validate()?;
        init.check_against(&config)?;
        Ok(StreamedParams { config, init, replica })
    }

    fn stream(&self, tag: StreamTag, layer: usize, k: usize) -> RngStream {
        RngStream::new(self.init.root_seed, tag, layer, k, self.replica)
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        check_layer(layer, self.config.depth)
    }
}

impl WeightSource for StreamedParams {
    fn for_each_mode_column(
        &self,
        layer: usize,
        k: usize,
        f: &mut ModeColumnFn<'_>,
    ) -> Result<()> {
        self.check_layer(layer)?;
        let d = self.config.width;
        let var = self.init.variances(d);
        let theta = self.stream(StreamTag::Theta, layer, k);
        let xi = self.stream(StreamTag::Xi, layer, k);
        let active = self.config.xi_active(k);
        let mut tcol = vec![0.0; d];
        let mut xcol = vec![0.0; d];
        for j in 0..d {
            theta.child(j).fill_normal(var.theta, &mut tcol)?;
            if active {
                xi.child(j).fill_normal(var.xi, &mut xcol)?;
                f(j, &tcol, Some(&xcol));
            } else {
                f(j, &tcol, None);
            }
        }
        Ok(())
    }

    fn for_each_dense_column(&self, layer: usize, f: &mut dyn FnMut(usize, &[f64])) -> Result<()> {
        self.check_layer(layer)?;
        let d = self.config.width;
        let Some(var) = self.init.variances(d).dense else {
            return Ok(());
        };
        let s = self.stream(StreamTag::Dense, layer, 0);
        let mut col = vec![0.0; d];
        for j in 0..d {
            s.child(j).fill_normal(var, &mut col)?;
            f(j, &col);
        }
        Ok(())
    }

    fn bias(&self, layer: usize) -> Result<DVector<f64>> {
        self.check_layer(layer)?;
        let v = self
            .stream(StreamTag::Bias, layer, 0)
            .sample_normal(self.init.variances(self.config.width).bias, self.config.width)?;
        Ok(DVector::from_vec(v))
    }
}

impl FnoParams {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    fn layer(&self, layer: usize) -> Result<&LayerParams> {
        check_layer(layer, self.layers.len())?;
        Ok(&self.layers[layer - 1])
    }

    /// Checks that tensor shapes agree with `config`.
    pub fn check_shapes(&self, config: &FnoConfig) -> Result<()> {
        if self.layers.len() != config.depth {
            return Err(Error::Shape(format!(
                "params have {} layers, config has {}",
                self.layers.len(),
                config.depth
            )));
        }
        let d = config.width;
        for (i, l) in self.layers.iter().enumerate() {
            let square = |m: &DMatrix<f64>| m.shape() == (d, d);
            let ok = l.theta.len() == config.modes
                && l.xi.len() == config.modes
                && l.theta.iter().all(square)
                && l.xi.iter().all(square)
                && l.bias.len() == d
                && match (&l.dense, config.variant) {
                    (None, super::Variant::Simplified) => true,
                    (Some(w), super::Variant::Original) => square(w),
                    _ => false,
                };
            if !ok {
                return Err(Error::Shape(format!("layer {} does not match {config:?}", i + 1)));
            }
        }
        Ok(())
    }

    /// All-zero parameters with the shapes of `config`.
    pub fn zeros(config: &FnoConfig) -> Self {
        let d = config.width;
        let layer = LayerParams {
            theta: vec![DMatrix::zeros(d, d); config.modes],
            xi: vec![DMatrix::zeros(d, d); config.modes],
            bias: DVector::zeros(d),
            dense: match config.variant {
                super::Variant::Simplified => None,
                super::Variant::Original => Some(DMatrix::zeros(d, d)),
            },
        };
        FnoParams {
            layers: vec![layer; config.depth],
        }
    }

    /// Number of scalar parameters, counting the pinned `Ξ` entries.
    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.theta.iter().chain(&l.xi).map(|m| m.len()).sum::<usize>()
                    + l.bias.len()
                    + l.dense.as_ref().map_or(0, |w| w.len())
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `self += alpha · other`, tensor by tensor.
    pub fn axpy(&mut self, alpha: f64, other: &FnoParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.theta.iter_mut().zip(&b.theta) {
                *x += y * alpha;
            }
            for (x, y) in a.xi.iter_mut().zip(&b.xi) {
                *x += y * alpha;
            }
            a.bias += &b.bias * alpha;
            if let (Some(x), Some(y)) = (a.dense.as_mut(), b.dense.as_ref()) {
                *x += y * alpha;
            }
        }
    }

    /// Sum of squares of all entries.
    pub fn norm_squared(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                l.theta.iter().chain(&l.xi).map(|m| m.norm_squared()).sum::<f64>()
                    + l.bias.norm_squared()
                    + l.dense.as_ref().map_or(0.0, |w| w.norm_squared())
            })
            .sum()
    }
}

impl WeightSource for FnoParams {
    fn for_each_mode_column(
        &self,
        layer: usize,
        k: usize,
        f: &mut ModeColumnFn<'_>,
    ) -> Result<()> {
        let l = self.layer(layer)?;
        let (theta, xi) = match (l.theta.get(k), l.xi.get(k)) {
            (Some(t), Some(x)) => (t, x),
            _ => return Err(Error::Shape(format!("mode {k} missing in layer {layer}"))),
        };
        for j in 0..theta.ncols() {
            f(j, theta.column(j).as_slice(), Some(xi.column(j).as_slice()));
        }
        Ok(())
    }

    fn for_each_dense_column(&self, layer: usize, f: &mut dyn FnMut(usize, &[f64])) -> Result<()> {
        if let Some(w) = &self.layer(layer)?.dense {
            for j in 0..w.ncols() {
                f(j, w.column(j).as_slice());
            }
        }
        Ok(())
    }

    fn bias(&self, layer: usize) -> Result<DVector<f64>> {
        Ok(self.layer(layer)?.bias.clone())
    }
}

fn check_layer(layer: usize, depth: usize) -> Result<()> {
    if layer == 0 || layer > depth {
        return Err(Error::LayerOutOfRange { layer, depth });
    }
    Ok(())
}

/// Samples every tensor of replica 0.
pub fn init_params(config: &FnoConfig, init: &InitConfig) -> Result<FnoParams> {
    init_params_replica(config, init, 0)
}

/// Samples every tensor from the streams of `replica`. The values equal
/// those produced by [`StreamedParams`] for the same arguments.
pub fn init_params_replica(config: &FnoConfig, init: &InitConfig, replica: usize) -> Result<FnoParams> {
    let src = StreamedParams::new(*config, *init, replica)?;
    materialize(&src, config)
}

/// Copies any weight source into stored parameters.
pub fn materialize(src: &dyn WeightSource, config: &FnoConfig) -> Result<FnoParams> {
    let mut params = FnoParams::zeros(config);
    for (i, layer) in params.layers.iter_mut().enumerate() {
        let l = i + 1;
        for k in 0..config.modes {
            let (theta, xi) = (&mut layer.theta[k], &mut layer.xi[k]);
            src.for_each_mode_column(l, k, &mut |j, t, x| {
                theta.column_mut(j).copy_from_slice(t);
                if let Some(x) = x {
                    xi.column_mut(j).copy_from_slice(x);
                }
            })?;
        }
        if let Some(w) = layer.dense.as_mut() {
            src.for_each_dense_column(l, &mut |j, c| w.column_mut(j).copy_from_slice(c))?;
        }
        layer.bias = src.bias(l)?;
    }
    Ok(params)
}
