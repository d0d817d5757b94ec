use alloc::vec::Vec;

use super::params::{BatchStats, BoundParams, ParamKind, ParamStore, BN_EPS};
use super::spec::{LayerSpec, LEAKY_SLOPE};
use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::rng::{streams, RngState, RngStream};
use crate::tensor::Tensor;

/// Which stochastic behaviours a forward pass uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForwardOptions {
    /// Draw dropout masks (otherwise dropout is the identity).
    pub dropout: bool,
    /// Add Gaussian noise (otherwise noise layers are the identity).
    pub noise: bool,
    /// Normalize with batch statistics (otherwise running averages).
    pub batch_stats: bool,
}

impl ForwardOptions {
    pub const TRAIN: Self = Self {
        dropout: true,
        noise: true,
        batch_stats: true,
    };
    pub const EVAL: Self = Self {
        dropout: false,
        noise: false,
        batch_stats: false,
    };
    /// Training-time pass without dropout or noise.
    pub const CLEAN_TRAIN: Self = Self {
        dropout: false,
        noise: false,
        batch_stats: true,
    };

    pub fn is_stochastic(&self) -> bool {
        self.dropout || self.noise
    }
}

/// Random sources for the stochastic layers of one or more passes.
#[derive(Clone, Debug)]
pub struct NoiseSources {
    pub dropout: RngStream,
    pub gaussian: RngStream,
}

impl NoiseSources {
    pub fn new(seed: u64) -> Self {
        Self {
            dropout: RngStream::new(seed, streams::DROPOUT),
            gaussian: RngStream::new(seed, streams::GAUSSIAN),
        }
    }

    /// Independent sources derived from these, e.g. one per CT pass.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            dropout: self.dropout.substream(index),
            gaussian: self.gaussian.substream(index),
        }
    }

    pub fn states(&self) -> (RngState, RngState) {
        (self.dropout.state(), self.gaussian.state())
    }
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    /// Network output (after the final activation, if any).
    pub output: Var,
    /// Output of the last affine layer, before any final activation.
    pub logits: Var,
    /// Activation feeding the final affine layer (after any dropout or
    /// noise directly in front of it).
    pub second_to_last: Var,
    pub options: ForwardOptions,
    /// Stream positions at the start of the pass; replaying from them
    /// reproduces every mask and noise draw.
    pub draws: Option<(RngState, RngState)>,
    pub batch_stats: Vec<BatchStats>,
}

fn rng_missing() -> Error {
    Error::Config("stochastic forward pass requires noise sources".into())
}

/// Runs `store`'s network on `x` (`[batch, input_dim]`) inside `g`.
pub fn forward(
    g: &mut Graph,
    store: &ParamStore,
    bound: &BoundParams,
    x: Var,
    options: ForwardOptions,
    mut noise: Option<&mut NoiseSources>,
) -> Result<ForwardOutput> {
    let spec = store.spec();
    let in_shape = g.shape(x)?.to_vec();
    if in_shape.len() != 2 || in_shape[1] != spec.input_dim {
        return Err(Error::ShapeMismatch {
            op: "forward",
            lhs: in_shape,
            rhs: alloc::vec![0, spec.input_dim],
        });
    }
    let final_affine = spec.final_affine().ok_or_else(|| Error::Network("no affine layer".into()))?;
    let draws = noise.as_ref().map(|n| n.states());
    let param = |layer: usize, kind: ParamKind| -> Var {
        bound.vars[store.find(layer, kind).expect("layout validated at build")]
    };

    let mut h = x;
    let mut second_to_last = x;
    let mut logits = x;
    let mut batch_stats = Vec::new();
    for (i, layer) in spec.layers.iter().enumerate() {
        if i == final_affine {
            second_to_last = h;
        }
        h = match layer {
            LayerSpec::Dense { .. } => {
                let y = g.matmul(h, param(i, ParamKind::Weight))?;
                g.add(y, param(i, ParamKind::Bias))?
            }
            LayerSpec::WeightNormDense { .. } => {
                let dir = param(i, ParamKind::Direction);
                let norm = g.l2_norm(dir, 0)?;
                let factor = g.div(param(i, ParamKind::Gain), norm)?;
                let w = g.mul(dir, factor)?;
                let y = g.matmul(h, w)?;
                g.add(y, param(i, ParamKind::Bias))?
            }
            LayerSpec::BatchNormDense { .. } => {
                let y = g.matmul(h, param(i, ParamKind::Weight))?;
                let normed = if options.batch_stats {
                    let mean = g.mean_axis(y, 0, true)?;
                    let centered = g.sub(y, mean)?;
                    let sq = g.square(centered)?;
                    let var = g.mean_axis(sq, 0, true)?;
                    batch_stats.push(BatchStats {
                        layer: i,
                        mean: g.value(mean)?.reshape(&[g.shape(mean)?[1]])?,
                        var: g.value(var)?.reshape(&[g.shape(var)?[1]])?,
                    });
                    let v = g.add_scalar(var, BN_EPS)?;
                    let sd = g.sqrt(v)?;
                    g.div(centered, sd)?
                } else {
                    let rs = store
                        .running_for(i)
                        .ok_or_else(|| Error::Network(alloc::format!("layer {i}: missing running statistics")))?;
                    let mean = g.constant(rs.mean.clone());
                    let sd = g.constant(rs.var.map(|v| libm::sqrt(v + BN_EPS)));
                    let centered = g.sub(y, mean)?;
                    g.div(centered, sd)?
                };
                let scaled = g.mul(normed, param(i, ParamKind::Scale))?;
                g.add(scaled, param(i, ParamKind::Shift))?
            }
            LayerSpec::Relu => g.relu(h)?,
            LayerSpec::LeakyRelu => g.leaky_relu(h, LEAKY_SLOPE)?,
            LayerSpec::Sigmoid => g.sigmoid(h)?,
            LayerSpec::Tanh => g.tanh(h)?,
            LayerSpec::Softplus => g.softplus(h)?,
            LayerSpec::Softmax => g.softmax(h)?,
            LayerSpec::Dropout { rate } => {
                if options.dropout && *rate > 0.0 {
                    let src = noise.as_deref_mut().ok_or_else(rng_missing)?;
                    let shape = g.shape(h)?.to_vec();
                    let keep = 1.0 - rate;
                    let n: usize = shape.iter().product();
                    let mask: Vec<f64> = (0..n)
                        .map(|_| if src.dropout.bernoulli(keep) { 1.0 / keep } else { 0.0 })
                        .collect();
                    let m = g.constant(Tensor::new(shape, mask)?);
                    g.mul(h, m)?
                } else {
                    h
                }
            }
            LayerSpec::GaussianNoise { std } => {
                if options.noise && *std > 0.0 {
                    let src = noise.as_deref_mut().ok_or_else(rng_missing)?;
                    let shape = g.shape(h)?.to_vec();
                    let n: usize = shape.iter().product();
                    let eps = g.constant(Tensor::new(shape, src.gaussian.normal_vec(n, *std))?);
                    g.add(h, eps)?
                } else {
                    h
                }
            }
        };
        if i == final_affine {
            logits = h;
        }
    }
    Ok(ForwardOutput {
        output: h,
        logits,
        second_to_last,
        options,
        draws,
        batch_stats,
    })
}

/// Values of a forward pass computed outside any caller graph.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub output: Tensor,
    pub logits: Tensor,
    pub features: Tensor,
    pub batch_stats: Vec<BatchStats>,
}

impl ParamStore {
    /// Forward pass with frozen parameters in a scratch graph.
    pub fn predict(&self, x: &Tensor, options: ForwardOptions, noise: Option<&mut NoiseSources>) -> Result<Prediction> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let xv = g.constant(x.clone());
        let out = forward(&mut g, self, &bound, xv, options, noise)?;
        Ok(Prediction {
            output: g.value(out.output)?.clone(),
            logits: g.value(out.logits)?.clone(),
            features: g.value(out.second_to_last)?.clone(),
            batch_stats: out.batch_stats,
        })
    }
}
