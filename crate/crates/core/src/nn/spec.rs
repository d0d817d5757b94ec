use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Negative slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.2;

/// One layer of a feed-forward network.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    /// Affine map `x W + b`, `W` of shape `[in, units]`.
    Dense { units: usize },
    /// Affine map whose weight columns are `gain * direction / |direction|`.
    WeightNormDense { units: usize },
    /// Affine map (no bias) followed by batch normalization with a learned
    /// scale and shift.
    BatchNormDense { units: usize },
    Relu,
    LeakyRelu,
    Sigmoid,
    Tanh,
    Softplus,
    Softmax,
    /// Inverted dropout: kept units are scaled by `1 / (1 - rate)`.
    Dropout { rate: f64 },
    /// Additive `N(0, std^2)` noise.
    GaussianNoise { std: f64 },
}

impl LayerSpec {
    pub fn is_affine(&self) -> bool {
        matches!(
            self,
            LayerSpec::Dense { .. } | LayerSpec::WeightNormDense { .. } | LayerSpec::BatchNormDense { .. }
        )
    }

    pub fn is_stochastic(&self) -> bool {
        match self {
            LayerSpec::Dropout { rate } => *rate > 0.0,
            LayerSpec::GaussianNoise { std } => *std > 0.0,
            _ => false,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::WeightNormDense { .. } => "weight_norm_dense",
            LayerSpec::BatchNormDense { .. } => "batch_norm_dense",
            LayerSpec::Relu => "relu",
            LayerSpec::LeakyRelu => "lrelu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Tanh => "tanh",
            LayerSpec::Softplus => "softplus",
            LayerSpec::Softmax => "softmax",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::GaussianNoise { .. } => "gaussian_noise",
        }
    }
}

/// Input width plus the ordered layer list.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, layers: Vec<LayerSpec>) -> Self {
        Self { input_dim, layers }
    }

    /// Checks the layer list and returns the width after every layer.
    pub fn widths(&self) -> Result<Vec<usize>> {
        if self.layers.is_empty() {
            return Err(Error::Network("empty layer list".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::Network("input width must be positive".into()));
        }
        if !self.layers.iter().any(LayerSpec::is_affine) {
            return Err(Error::Network("network has no affine layer".into()));
        }
        let mut width = self.input_dim;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerSpec::Dense { units } | LayerSpec::WeightNormDense { units } | LayerSpec::BatchNormDense { units } => {
                    if *units == 0 {
                        return Err(Error::Network(format!(
                            "layer {i} ({}) maps width {width} to zero units",
                            layer.kind_name()
                        )));
                    }
                    width = *units;
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(rate) {
                        return Err(Error::Network(format!("layer {i}: dropout rate {rate} outside [0, 1)")));
                    }
                }
                LayerSpec::GaussianNoise { std }
                    if !(std.is_finite() && *std >= 0.0) => {
                        return Err(Error::Network(format!("layer {i}: noise std {std} must be finite and >= 0")));
                    }
                _ => {}
            }
            out.push(width);
        }
        Ok(out)
    }

    pub fn output_dim(&self) -> Result<usize> {
        Ok(*self.widths()?.last().expect("non-empty"))
    }

    pub fn final_affine(&self) -> Option<usize> {
        self.layers.iter().rposition(LayerSpec::is_affine)
    }

    pub fn has_stochastic(&self) -> bool {
        self.layers.iter().any(LayerSpec::is_stochastic)
    }

    pub fn has_dropout(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l, LayerSpec::Dropout { rate } if *rate > 0.0))
    }

    /// Same network with every dropout layer removed.
    pub fn without_dropout(&self) -> Self {
        Self {
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .filter(|l| !matches!(l, LayerSpec::Dropout { .. }))
                .cloned()
                .collect(),
        }
    }

    /// MNIST classifier: Gaussian-noise perturbed weight-normalized MLP
    /// 1000-500-250-250-250 with a softmax head of `outputs` units.
    pub fn mnist_classifier(outputs: usize) -> Self {
        use LayerSpec::*;
        let mut layers = vec![GaussianNoise { std: 0.3 }, WeightNormDense { units: 1000 }, Relu];
        for units in [500, 250, 250, 250] {
            layers.extend([GaussianNoise { std: 0.5 }, WeightNormDense { units }, Relu]);
        }
        layers.extend([GaussianNoise { std: 0.5 }, WeightNormDense { units: outputs }, Softmax]);
        Self::new(784, layers)
    }

    /// MNIST generator: 500-500 softplus batch-norm MLP with a
    /// weight-normalized sigmoid output of 784 pixels.
    pub fn mnist_generator(z_dim: usize) -> Self {
        use LayerSpec::*;
        Self::new(
            z_dim,
            vec![
                BatchNormDense { units: 500 },
                Softplus,
                BatchNormDense { units: 500 },
                Softplus,
                WeightNormDense { units: 784 },
                Sigmoid,
            ],
        )
    }

    /// MNIST Wasserstein critic: three lReLU hidden layers, each followed by
    /// dropout, and a scalar linear head.
    pub fn mnist_critic(dropout: f64) -> Self {
        use LayerSpec::*;
        let mut layers = Vec::new();
        for units in [512, 256, 128] {
            layers.extend([Dense { units }, LeakyRelu, Dropout { rate: dropout }]);
        }
        layers.push(Dense { units: 1 });
        Self::new(784, layers)
    }

    /// Toy critic: `depth` lReLU layers of `width` units with dropout after
    /// each, scalar head.
    pub fn toy_critic(input_dim: usize, width: usize, depth: usize, dropout: f64) -> Self {
        use LayerSpec::*;
        let mut layers = Vec::new();
        for _ in 0..depth {
            layers.extend([Dense { units: width }, LeakyRelu, Dropout { rate: dropout }]);
        }
        layers.push(Dense { units: 1 });
        Self::new(input_dim, layers)
    }

    /// Toy generator: `depth` ReLU layers of `width` units and a linear head.
    pub fn toy_generator(z_dim: usize, width: usize, depth: usize, output_dim: usize) -> Self {
        use LayerSpec::*;
        let mut layers = Vec::new();
        for _ in 0..depth {
            layers.extend([Dense { units: width }, Relu]);
        }
        layers.push(Dense { units: output_dim });
        Self::new(z_dim, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifier_has_ten_way_output() {
        let spec = NetworkSpec::mnist_classifier(10);
        assert_eq!(spec.output_dim().unwrap(), 10);
        assert_eq!(spec.widths().unwrap()[1], 1000);
        assert!(spec.has_stochastic());
        assert!(!spec.has_dropout());
    }

    #[test]
    fn generator_outputs_pixels() {
        assert_eq!(NetworkSpec::mnist_generator(100).output_dim().unwrap(), 784);
    }

    #[test]
    fn empty_spec_is_rejected() {
        assert!(NetworkSpec::new(3, vec![]).widths().is_err());
    }

    #[test]
    fn invalid_rates_are_rejected() {
        let bad = NetworkSpec::new(2, vec![LayerSpec::Dense { units: 2 }, LayerSpec::Dropout { rate: 1.0 }]);
        assert!(bad.widths().is_err());
        let bad = NetworkSpec::new(2, vec![LayerSpec::Dense { units: 2 }, LayerSpec::GaussianNoise { std: -1.0 }]);
        assert!(bad.widths().is_err());
        let bad = NetworkSpec::new(2, vec![LayerSpec::Dense { units: 0 }]);
        let msg = alloc::string::ToString::to_string(&bad.widths().unwrap_err());
        assert!(msg.contains("layer 0"), "{msg}");
    }

    #[test]
    fn without_dropout_strips_only_dropout() {
        let s = NetworkSpec::toy_critic(2, 8, 3, 0.5).without_dropout();
        assert!(!s.has_dropout());
        assert_eq!(s.layers.len(), 7);
    }
}
