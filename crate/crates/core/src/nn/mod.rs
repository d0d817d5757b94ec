//! Layers, parameter stores, forward passes and the Adam optimizer.

mod adam;
mod forward;
mod params;
mod spec;

pub use adam::AdamConfig;
pub use forward::{forward, ForwardOptions, ForwardOutput, NoiseSources, Prediction};
pub use params::{
    build_network, weight_norm_effective, AdamMoments, BatchStats, BoundParams, Param, ParamKind, ParamStore,
    RunningStats, BN_EPS, BN_MOMENTUM, DENSE_INIT_STD, DIRECTION_INIT_STD,
};
pub use spec::{LayerSpec, NetworkSpec, LEAKY_SLOPE};
