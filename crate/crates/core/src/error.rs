use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised anywhere in the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("shape {shape:?} does not describe {len} elements")]
    InvalidShape { shape: Vec<usize>, len: usize },
    #[error("{op}: axis {axis} out of range for shape {shape:?}")]
    InvalidAxis {
        op: &'static str,
        axis: usize,
        shape: Vec<usize>,
    },
    #[error("unbound leaf `{0}`")]
    UnboundLeaf(String),
    #[error("node {0} has not been evaluated")]
    Unevaluated(usize),
    #[error("{op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("gradient requested of a non-scalar output with shape {0:?}")]
    NonScalar(Vec<usize>),
    #[error("non-finite value produced by {op} (node {node})")]
    NonFinite { op: &'static str, node: usize },
    #[error("invalid network: {0}")]
    Network(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: u64, detail: String },
    #[error("CT term is identically zero: critic has no dropout")]
    NoStochasticLayers,
    #[error("probe: {0}")]
    Probe(String),
    #[error("observer: {0}")]
    Observer(String),
}

pub type Result<T> = core::result::Result<T, Error>;
