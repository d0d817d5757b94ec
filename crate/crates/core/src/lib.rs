//! Consistency-term regularized Wasserstein GAN training toolkit.
//!
//! The crate is `no_std` (with `alloc`) and carries everything that does not
//! touch the filesystem:
//!
//! * [`tensor`] and [`graph`]: dense `f64` tensors and a graph-building
//!   reverse-mode differentiation engine whose backward pass emits ordinary
//!   graph nodes, so gradients can be differentiated again.
//! * [`nn`]: layer specifications, parameter stores, forward passes with
//!   dropout / Gaussian-noise perturbations, and Adam.
//! * [`gan`]: the Wasserstein critic loss, gradient penalty, consistency
//!   term, semi-supervised losses and the two training loops.
//! * [`data`]: IDX (MNIST) byte parsing, toy 2-D distributions, stratified
//!   label splits and subsampling.
//! * [`diagnostics`]: gradient-norm and pairwise Lipschitz probes, weight
//!   histograms, mode coverage and held-out critic cost.
//!
//! File formats, configuration and the command line live in the companion
//! `ctgan` crate.

#![no_std]
#![deny(unsafe_op_in_unsafe_fn)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod gan;
pub mod graph;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use graph::{Graph, Var};
pub use rng::RngStream;
pub use tensor::Tensor;
