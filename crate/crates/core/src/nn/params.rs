use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::spec::{LayerSpec, NetworkSpec};
use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// Standard deviation of the dense-weight initializer.
pub const DENSE_INIT_STD: f64 = 0.02;
/// Standard deviation used for weight-norm directions (only their
/// orientation matters).
pub const DIRECTION_INIT_STD: f64 = 0.05;
/// Decay of the batch-norm running averages.
pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    Direction,
    Gain,
    Scale,
    Shift,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Weight => "weight",
            ParamKind::Bias => "bias",
            ParamKind::Direction => "direction",
            ParamKind::Gain => "gain",
            ParamKind::Scale => "scale",
            ParamKind::Shift => "shift",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "weight" => ParamKind::Weight,
            "bias" => ParamKind::Bias,
            "direction" => ParamKind::Direction,
            "gain" => ParamKind::Gain,
            "scale" => ParamKind::Scale,
            "shift" => ParamKind::Shift,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub layer: usize,
    pub kind: ParamKind,
    pub value: Tensor,
}

impl Param {
    pub fn name(&self) -> String {
        format!("{}.{}", self.layer, self.kind.as_str())
    }
}

/// Batch-norm running statistics of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats {
    pub layer: usize,
    pub mean: Tensor,
    pub var: Tensor,
}

/// Batch statistics observed by a train-mode forward pass, to be folded
/// into the running averages with [`ParamStore::commit_batch_stats`].
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub layer: usize,
    pub mean: Tensor,
    pub var: Tensor,
}

/// Adam first/second moments aligned with the parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamMoments {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

/// Trainable parameters of one network plus optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore {
    spec: NetworkSpec,
    params: Vec<Param>,
    running: Vec<RunningStats>,
    moments: AdamMoments,
}

/// Graph leaves for every parameter of a store, in store order.
#[derive(Clone, Debug)]
pub struct BoundParams {
    pub vars: Vec<Var>,
}

fn expected_params(spec: &NetworkSpec) -> Result<Vec<(usize, ParamKind, Vec<usize>)>> {
    let widths = spec.widths()?;
    let mut out = Vec::new();
    for (i, layer) in spec.layers.iter().enumerate() {
        let fan_in = if i == 0 { spec.input_dim } else { widths[i - 1] };
        match layer {
            LayerSpec::Dense { units } => {
                out.push((i, ParamKind::Weight, alloc::vec![fan_in, *units]));
                out.push((i, ParamKind::Bias, alloc::vec![*units]));
            }
            LayerSpec::WeightNormDense { units } => {
                out.push((i, ParamKind::Direction, alloc::vec![fan_in, *units]));
                out.push((i, ParamKind::Gain, alloc::vec![*units]));
                out.push((i, ParamKind::Bias, alloc::vec![*units]));
            }
            LayerSpec::BatchNormDense { units } => {
                out.push((i, ParamKind::Weight, alloc::vec![fan_in, *units]));
                out.push((i, ParamKind::Scale, alloc::vec![*units]));
                out.push((i, ParamKind::Shift, alloc::vec![*units]));
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Initializes all parameters of `spec` from `rng`: dense weights
/// `N(0, 0.02^2)`, weight-norm directions `N(0, 0.05^2)` with unit gain,
/// batch-norm scale 1 and shift 0, biases 0.
pub fn build_network(spec: &NetworkSpec, rng: &mut RngStream) -> Result<ParamStore> {
    let layout = expected_params(spec)?;
    let mut params = Vec::with_capacity(layout.len());
    for (layer, kind, shape) in layout {
        let n: usize = shape.iter().product();
        let data = match kind {
            ParamKind::Weight => rng.normal_vec(n, DENSE_INIT_STD),
            ParamKind::Direction => rng.normal_vec(n, DIRECTION_INIT_STD),
            ParamKind::Gain | ParamKind::Scale => alloc::vec![1.0; n],
            ParamKind::Bias | ParamKind::Shift => alloc::vec![0.0; n],
        };
        params.push(Param {
            layer,
            kind,
            value: Tensor::new(shape, data)?,
        });
    }
    let running = spec
        .layers
        .iter()
        .enumerate()
        .filter_map(|(i, l)| match l {
            LayerSpec::BatchNormDense { units } => Some(RunningStats {
                layer: i,
                mean: Tensor::zeros(&[*units]),
                var: Tensor::full(&[*units], 1.0),
            }),
            _ => None,
        })
        .collect();
    Ok(ParamStore::assemble(spec.clone(), params, running))
}

impl ParamStore {
    fn assemble(spec: NetworkSpec, params: Vec<Param>, running: Vec<RunningStats>) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        Self {
            spec,
            params,
            running,
            moments: AdamMoments {
                m: zeros.clone(),
                v: zeros,
                step: 0,
            },
        }
    }

    /// Rebuilds a store from stored parts, checking every tensor against the
    /// layout implied by `spec`.
    pub fn from_parts(
        spec: NetworkSpec,
        params: Vec<Param>,
        running: Vec<RunningStats>,
        moments: Option<AdamMoments>,
    ) -> Result<Self> {
        let layout = expected_params(&spec)?;
        if layout.len() != params.len() {
            return Err(Error::Network(format!(
                "expected {} parameter tensors, found {}",
                layout.len(),
                params.len()
            )));
        }
        for ((layer, kind, shape), p) in layout.iter().zip(&params) {
            if p.layer != *layer || p.kind != *kind || p.value.shape() != shape.as_slice() {
                return Err(Error::Network(format!(
                    "layer {layer} ({}): expected {} {:?}, found {} {:?}",
                    spec.layers[*layer].kind_name(),
                    kind.as_str(),
                    shape,
                    p.name(),
                    p.value.shape()
                )));
            }
        }
        let bn_layers: Vec<usize> = spec
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::BatchNormDense { .. }))
            .map(|(i, _)| i)
            .collect();
        if bn_layers != running.iter().map(|r| r.layer).collect::<Vec<_>>() {
            return Err(Error::Network("running statistics do not match batch-norm layers".into()));
        }
        let mut store = Self::assemble(spec, params, running);
        if let Some(m) = moments {
            let aligned = |ts: &[Tensor]| {
                ts.len() == store.params.len()
                    && ts.iter().zip(&store.params).all(|(t, p)| t.shape() == p.value.shape())
            };
            if !aligned(&m.m) || !aligned(&m.v) {
                return Err(Error::Network("optimizer moments do not match parameters".into()));
            }
            store.moments = m;
        }
        Ok(store)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn running(&self) -> &[RunningStats] {
        &self.running
    }

    pub fn moments(&self) -> &AdamMoments {
        &self.moments
    }

    pub(crate) fn moments_mut(&mut self) -> &mut AdamMoments {
        &mut self.moments
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn find(&self, layer: usize, kind: ParamKind) -> Option<usize> {
        self.params.iter().position(|p| p.layer == layer && p.kind == kind)
    }

    pub(crate) fn running_for(&self, layer: usize) -> Option<&RunningStats> {
        self.running.iter().find(|r| r.layer == layer)
    }

    /// Adds every parameter to `g` as a leaf. Trainable leaves take part in
    /// gradient propagation; frozen ones act as constants.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> BoundParams {
        BoundParams {
            vars: self
                .params
                .iter()
                .map(|p| g.leaf(p.name(), p.value.clone(), trainable))
                .collect(),
        }
    }

    /// Folds batch statistics into the running averages.
    pub fn commit_batch_stats(&mut self, stats: &[BatchStats]) {
        for s in stats {
            if let Some(r) = self.running.iter_mut().find(|r| r.layer == s.layer) {
                for (rm, bm) in r.mean.data_mut().iter_mut().zip(s.mean.data()) {
                    *rm = BN_MOMENTUM * *rm + (1.0 - BN_MOMENTUM) * bm;
                }
                for (rv, bv) in r.var.data_mut().iter_mut().zip(s.var.data()) {
                    *rv = BN_MOMENTUM * *rv + (1.0 - BN_MOMENTUM) * bv;
                }
            }
        }
    }

    /// Effective weight matrices (weight-norm layers resolved to
    /// `gain * direction / |direction|`), one per affine layer.
    pub fn effective_weights(&self) -> Vec<(usize, Tensor)> {
        let mut out = Vec::new();
        for (i, p) in self.params.iter().enumerate() {
            match p.kind {
                ParamKind::Weight => out.push((p.layer, p.value.clone())),
                ParamKind::Direction => {
                    let gain = &self.params[i + 1].value;
                    out.push((p.layer, weight_norm_effective(&p.value, gain)));
                }
                _ => {}
            }
        }
        out
    }

    /// FNV-1a over the bit patterns of every parameter and running
    /// statistic; used to assert that a step left a network untouched.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |t: &Tensor| {
            for v in t.data() {
                for b in v.to_bits().to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        };
        for p in &self.params {
            feed(&p.value);
        }
        for r in &self.running {
            feed(&r.mean);
            feed(&r.var);
        }
        h
    }
}

/// `gain * direction / |direction|` with the norm taken per output unit
/// (column of the `[in, out]` direction matrix).
pub fn weight_norm_effective(direction: &Tensor, gain: &Tensor) -> Tensor {
    let out = direction.shape()[1];
    let mut norms = alloc::vec![0.0; out];
    for row in direction.data().chunks(out) {
        for (n, v) in norms.iter_mut().zip(row) {
            *n += v * v;
        }
    }
    let mut w = direction.clone();
    for row in w.data_mut().chunks_mut(out) {
        for ((v, n), g) in row.iter_mut().zip(&norms).zip(gain.data()) {
            *v *= g / libm::sqrt(*n);
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::streams;

    #[test]
    fn same_seed_builds_identical_store() {
        let spec = NetworkSpec::toy_critic(2, 16, 3, 0.1);
        let a = build_network(&spec, &mut RngStream::new(9, streams::INIT)).unwrap();
        let b = build_network(&spec, &mut RngStream::new(9, streams::INIT)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = build_network(&spec, &mut RngStream::new(10, streams::INIT)).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn classifier_builds_with_weight_norm_layout() {
        let spec = NetworkSpec::mnist_classifier(10);
        let store = build_network(&spec, &mut RngStream::new(1, streams::INIT)).unwrap();
        let dirs = store.params().iter().filter(|p| p.kind == ParamKind::Direction).count();
        assert_eq!(dirs, 6);
        let last = store.params().last().unwrap();
        assert_eq!(last.value.shape(), &[10]);
        assert!(store
            .params()
            .iter()
            .filter(|p| p.kind == ParamKind::Gain)
            .all(|p| p.value.data().iter().all(|g| *g == 1.0)));
    }

    #[test]
    fn empty_spec_fails_to_build() {
        let spec = NetworkSpec::new(3, alloc::vec![]);
        assert!(build_network(&spec, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn from_parts_names_the_offending_layer() {
        let spec = NetworkSpec::toy_generator(2, 4, 1, 2);
        let store = build_network(&spec, &mut RngStream::new(0, 0)).unwrap();
        let mut params = store.params().to_vec();
        params[2].value = Tensor::zeros(&[5, 2]);
        let err = ParamStore::from_parts(spec, params, alloc::vec![], None).unwrap_err();
        assert!(alloc::string::ToString::to_string(&err).contains("layer 2 (dense)"));
    }
}
