//! Forward kernels and graph builder methods.

use alloc::format;
use alloc::vec;

use super::{Graph, MaskKind, Op, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

fn one<'a>(inputs: &[&'a Tensor]) -> &'a Tensor {
    inputs[0]
}

pub(super) fn forward(op: &Op, inputs: &[&Tensor]) -> Result<Tensor> {
    let name = op.name();
    Ok(match op {
        Op::Leaf { .. } => unreachable!("leaves are never recomputed"),
        Op::Add => inputs[0].zip_with(inputs[1], name, |a, b| a + b)?,
        Op::Sub => inputs[0].zip_with(inputs[1], name, |a, b| a - b)?,
        Op::Mul => inputs[0].zip_with(inputs[1], name, |a, b| a * b)?,
        Op::Div => inputs[0].zip_with(inputs[1], name, |a, b| a / b)?,
        Op::DivSafe => inputs[0].zip_with(inputs[1], name, |a, b| if b == 0.0 { 0.0 } else { a / b })?,
        Op::Neg => one(inputs).map(|a| -a),
        Op::Scale(c) => one(inputs).map(|a| a * c),
        Op::AddScalar(c) => one(inputs).map(|a| a + c),
        Op::MatMul { trans_a, trans_b } => inputs[0].matmul_t(inputs[1], *trans_a, *trans_b)?,
        Op::Transpose => one(inputs).transpose()?,
        Op::Reshape(shape) => one(inputs).reshape(shape)?,
        Op::BroadcastTo(shape) => one(inputs).broadcast_to(shape)?,
        Op::SumTo(shape) => one(inputs).sum_to(shape)?,
        Op::SumAll => Tensor::scalar(one(inputs).sum_all()),
        Op::SumAxis { axis, keepdim } => one(inputs).sum_axis(*axis, *keepdim)?,
        Op::MaxAll => Tensor::scalar(one(inputs).data().iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        Op::MaxAxis { axis, keepdim } => one(inputs).max_axis(*axis, *keepdim)?.0,
        Op::NormAxis { axis } => one(inputs).map(|a| a * a).sum_axis(*axis, true)?.map(libm::sqrt),
        Op::Square => one(inputs).map(|a| a * a),
        Op::Sqrt => {
            let x = one(inputs);
            if let Some(v) = x.data().iter().find(|v| **v < 0.0) {
                return Err(Error::Domain {
                    op: name,
                    detail: format!("negative input {v}"),
                });
            }
            x.map(libm::sqrt)
        }
        Op::Exp => one(inputs).map(libm::exp),
        Op::Log => {
            let x = one(inputs);
            if let Some(v) = x.data().iter().find(|v| **v < 0.0) {
                return Err(Error::Domain {
                    op: name,
                    detail: format!("negative input {v}"),
                });
            }
            x.map(libm::log)
        }
        Op::Abs => one(inputs).map(f64::abs),
        Op::Relu => one(inputs).map(|a| if a > 0.0 { a } else { 0.0 }),
        Op::LeakyRelu(s) => one(inputs).map(|a| if a > 0.0 { a } else { s * a }),
        Op::Sigmoid => one(inputs).map(sigmoid),
        Op::Tanh => one(inputs).map(libm::tanh),
        Op::Softplus => one(inputs).map(softplus),
        Op::Softmax => one(inputs).softmax_last(),
        Op::ClampMin(floor) => one(inputs).map(|a| if a > *floor { a } else { *floor }),
        Op::Concat { axis } => Tensor::concat(inputs, *axis)?,
        Op::Slice { axis, start, end } => one(inputs).slice(*axis, *start, *end)?,
        Op::PadSlice { axis, start, total } => one(inputs).pad_slice(*axis, *start, *total)?,
        Op::Mask(kind) => {
            let x = one(inputs);
            match kind {
                MaskKind::Positive => x.map(|a| if a > 0.0 { 1.0 } else { 0.0 }),
                MaskKind::LeakySlope(s) => x.map(|a| if a > 0.0 { 1.0 } else { *s }),
                MaskKind::Sign => x.map(|a| {
                    if a > 0.0 {
                        1.0
                    } else if a < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }),
                MaskKind::Above(floor) => x.map(|a| if a > *floor { 1.0 } else { 0.0 }),
                MaskKind::ArgMax(Some(axis)) => x.argmax_mask(*axis)?,
                MaskKind::ArgMax(None) => {
                    let flat = x.reshape(&[x.len()])?;
                    flat.argmax_mask(0)?.reshape(x.shape())?
                }
            }
        }
    })
}

impl Graph {
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Add, vec![a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Sub, vec![a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Mul, vec![a, b])
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Div, vec![a, b])
    }

    /// Division that yields 0 where the denominator is exactly 0.
    pub fn div_safe(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::DivSafe, vec![a, b])
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Neg, vec![a])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.push(Op::Scale(c), vec![a])
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        self.push(Op::AddScalar(c), vec![a])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_t(a, b, false, false)
    }

    pub fn matmul_t(&mut self, a: Var, b: Var, trans_a: bool, trans_b: bool) -> Result<Var> {
        self.push(Op::MatMul { trans_a, trans_b }, vec![a, b])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Transpose, vec![a])
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        self.push(Op::Reshape(shape.to_vec()), vec![a])
    }

    pub fn broadcast_to(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        self.push(Op::BroadcastTo(shape.to_vec()), vec![a])
    }

    pub fn sum_to(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        self.push(Op::SumTo(shape.to_vec()), vec![a])
    }

    /// Sum of all elements (scalar).
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.push(Op::SumAll, vec![a])
    }

    pub fn sum_axis(&mut self, a: Var, axis: usize, keepdim: bool) -> Result<Var> {
        self.push(Op::SumAxis { axis, keepdim }, vec![a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a)?.len() as f64;
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n)
    }

    pub fn mean_axis(&mut self, a: Var, axis: usize, keepdim: bool) -> Result<Var> {
        let shape = self.shape(a)?;
        let n = *shape.get(axis).ok_or_else(|| Error::InvalidAxis {
            op: "mean_axis",
            axis,
            shape: shape.to_vec(),
        })? as f64;
        let s = self.sum_axis(a, axis, keepdim)?;
        self.scale(s, 1.0 / n)
    }

    /// Maximum over all elements (scalar).
    pub fn max(&mut self, a: Var) -> Result<Var> {
        self.push(Op::MaxAll, vec![a])
    }

    pub fn max_axis(&mut self, a: Var, axis: usize, keepdim: bool) -> Result<Var> {
        self.push(Op::MaxAxis { axis, keepdim }, vec![a])
    }

    /// Euclidean norm along `axis`, keeping the axis with size 1. The
    /// subgradient at the origin is taken to be zero.
    pub fn l2_norm(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.push(Op::NormAxis { axis }, vec![a])
    }

    /// `sqrt(sum(a^2, axis) + eps)`: a norm that stays differentiable at 0.
    pub fn l2_norm_smoothed(&mut self, a: Var, axis: usize, eps: f64) -> Result<Var> {
        let sq = self.square(a)?;
        let s = self.sum_axis(sq, axis, true)?;
        let s = self.add_scalar(s, eps)?;
        self.sqrt(s)
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Square, vec![a])
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Sqrt, vec![a])
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Exp, vec![a])
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Log, vec![a])
    }

    pub fn abs(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Abs, vec![a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Relu, vec![a])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        self.push(Op::LeakyRelu(slope), vec![a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Sigmoid, vec![a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Tanh, vec![a])
    }

    pub fn softplus(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Softplus, vec![a])
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Softmax, vec![a])
    }

    pub fn clamp_min(&mut self, a: Var, floor: f64) -> Result<Var> {
        self.push(Op::ClampMin(floor), vec![a])
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        self.push(Op::Concat { axis }, parts.to_vec())
    }

    pub fn slice(&mut self, a: Var, axis: usize, start: usize, end: usize) -> Result<Var> {
        self.push(Op::Slice { axis, start, end }, vec![a])
    }

    pub fn pad_slice(&mut self, a: Var, axis: usize, start: usize, total: usize) -> Result<Var> {
        self.push(Op::PadSlice { axis, start, total }, vec![a])
    }

    pub(crate) fn mask(&mut self, a: Var, kind: MaskKind) -> Result<Var> {
        self.push(Op::Mask(kind), vec![a])
    }
}
