//! Backward rules. Each rule builds the vector-Jacobian product as new graph
//! nodes, which is what makes higher-order derivatives possible.

use alloc::vec;
use alloc::vec::Vec;

use super::{Graph, MaskKind, Op, Var};
use crate::error::Result;

impl Graph {
    /// Sums `g` down to the shape of `like` when broadcasting expanded it.
    fn unbroadcast(&mut self, g: Var, like: Var) -> Result<Var> {
        let target = self.shape(like)?;
        if self.shape(g)? == target {
            Ok(g)
        } else {
            let target = target.to_vec();
            self.sum_to(g, &target)
        }
    }

    fn keepdim_grad(&mut self, g: Var, input: Var, axis: usize, keepdim: bool) -> Result<Var> {
        if keepdim {
            return Ok(g);
        }
        let mut shape = self.shape(input)?.to_vec();
        shape[axis] = 1;
        self.reshape(g, &shape)
    }

    /// Contributions of upstream gradient `g` of `node` to each input for
    /// which `needed` is set.
    pub(super) fn backward(&mut self, node: Var, g: Var, needed: &[bool]) -> Result<Vec<Option<Var>>> {
        let op = self.nodes[node.0].op.clone();
        let ins = self.nodes[node.0].inputs.clone();
        let y = node;
        let mut out: Vec<Option<Var>> = vec![None; ins.len()];
        let want = |k: usize| needed.get(k).copied().unwrap_or(false);

        match op {
            Op::Leaf { .. } | Op::Mask(_) => {}
            Op::Add => {
                if want(0) {
                    out[0] = Some(self.unbroadcast(g, ins[0])?);
                }
                if want(1) {
                    out[1] = Some(self.unbroadcast(g, ins[1])?);
                }
            }
            Op::Sub => {
                if want(0) {
                    out[0] = Some(self.unbroadcast(g, ins[0])?);
                }
                if want(1) {
                    let n = self.neg(g)?;
                    out[1] = Some(self.unbroadcast(n, ins[1])?);
                }
            }
            Op::Mul => {
                if want(0) {
                    let t = self.mul(g, ins[1])?;
                    out[0] = Some(self.unbroadcast(t, ins[0])?);
                }
                if want(1) {
                    let t = self.mul(g, ins[0])?;
                    out[1] = Some(self.unbroadcast(t, ins[1])?);
                }
            }
            Op::Div | Op::DivSafe => {
                let safe = matches!(op, Op::DivSafe);
                let div = |gr: &mut Graph, a, b| if safe { gr.div_safe(a, b) } else { gr.div(a, b) };
                if want(0) {
                    let t = div(self, g, ins[1])?;
                    out[0] = Some(self.unbroadcast(t, ins[0])?);
                }
                if want(1) {
                    // d(a/b)/db = -(a/b)/b
                    let gy = self.mul(g, y)?;
                    let t = div(self, gy, ins[1])?;
                    let t = self.neg(t)?;
                    out[1] = Some(self.unbroadcast(t, ins[1])?);
                }
            }
            Op::Neg => out[0] = Some(self.neg(g)?),
            Op::Scale(c) => out[0] = Some(self.scale(g, c)?),
            Op::AddScalar(_) => out[0] = Some(g),
            Op::MatMul { trans_a, trans_b } => {
                let (a, b) = (ins[0], ins[1]);
                if want(0) {
                    out[0] = Some(if trans_a {
                        self.matmul_t(b, g, trans_b, true)?
                    } else {
                        self.matmul_t(g, b, false, !trans_b)?
                    });
                }
                if want(1) {
                    out[1] = Some(if trans_b {
                        self.matmul_t(g, a, true, trans_a)?
                    } else {
                        self.matmul_t(a, g, !trans_a, false)?
                    });
                }
            }
            Op::Transpose => out[0] = Some(self.transpose(g)?),
            Op::Reshape(_) => {
                let s = self.shape(ins[0])?.to_vec();
                out[0] = Some(self.reshape(g, &s)?);
            }
            Op::BroadcastTo(_) => {
                let s = self.shape(ins[0])?.to_vec();
                out[0] = Some(self.sum_to(g, &s)?);
            }
            Op::SumTo(_) | Op::SumAll => {
                let s = self.shape(ins[0])?.to_vec();
                out[0] = Some(self.broadcast_to(g, &s)?);
            }
            Op::SumAxis { axis, keepdim } => {
                let gk = self.keepdim_grad(g, ins[0], axis, keepdim)?;
                let s = self.shape(ins[0])?.to_vec();
                out[0] = Some(self.broadcast_to(gk, &s)?);
            }
            Op::MaxAll => {
                let m = self.mask(ins[0], MaskKind::ArgMax(None))?;
                out[0] = Some(self.mul(m, g)?);
            }
            Op::MaxAxis { axis, keepdim } => {
                let gk = self.keepdim_grad(g, ins[0], axis, keepdim)?;
                let m = self.mask(ins[0], MaskKind::ArgMax(Some(axis)))?;
                out[0] = Some(self.mul(m, gk)?);
            }
            Op::NormAxis { .. } => {
                let unit = self.div_safe(ins[0], y)?;
                out[0] = Some(self.mul(unit, g)?);
            }
            Op::Square => {
                let two_x = self.scale(ins[0], 2.0)?;
                out[0] = Some(self.mul(g, two_x)?);
            }
            Op::Sqrt => {
                let two_y = self.scale(y, 2.0)?;
                out[0] = Some(self.div(g, two_y)?);
            }
            Op::Exp => out[0] = Some(self.mul(g, y)?),
            Op::Log => out[0] = Some(self.div(g, ins[0])?),
            Op::Abs => {
                let m = self.mask(ins[0], MaskKind::Sign)?;
                out[0] = Some(self.mul(g, m)?);
            }
            Op::Relu => {
                let m = self.mask(ins[0], MaskKind::Positive)?;
                out[0] = Some(self.mul(g, m)?);
            }
            Op::LeakyRelu(s) => {
                let m = self.mask(ins[0], MaskKind::LeakySlope(s))?;
                out[0] = Some(self.mul(g, m)?);
            }
            Op::Sigmoid => {
                let ny = self.neg(y)?;
                let one_minus = self.add_scalar(ny, 1.0)?;
                let d = self.mul(y, one_minus)?;
                out[0] = Some(self.mul(g, d)?);
            }
            Op::Tanh => {
                let y2 = self.square(y)?;
                let ny2 = self.neg(y2)?;
                let d = self.add_scalar(ny2, 1.0)?;
                out[0] = Some(self.mul(g, d)?);
            }
            Op::Softplus => {
                let s = self.sigmoid(ins[0])?;
                out[0] = Some(self.mul(g, s)?);
            }
            Op::Softmax => {
                let last = self.shape(y)?.len().saturating_sub(1);
                let gy = self.mul(g, y)?;
                let s = self.sum_axis(gy, last, true)?;
                let centered = self.sub(g, s)?;
                out[0] = Some(self.mul(y, centered)?);
            }
            Op::ClampMin(floor) => {
                let m = self.mask(ins[0], MaskKind::Above(floor))?;
                out[0] = Some(self.mul(g, m)?);
            }
            Op::Concat { axis } => {
                let mut offset = 0;
                for (k, input) in ins.iter().enumerate() {
                    let len = self.shape(*input)?[axis];
                    if want(k) {
                        out[k] = Some(self.slice(g, axis, offset, offset + len)?);
                    }
                    offset += len;
                }
            }
            Op::Slice { axis, start, .. } => {
                let total = self.shape(ins[0])?[axis];
                out[0] = Some(self.pad_slice(g, axis, start, total)?);
            }
            Op::PadSlice { axis, start, .. } => {
                let len = self.shape(ins[0])?[axis];
                out[0] = Some(self.slice(g, axis, start, start + len)?);
            }
        }
        Ok(out)
    }
}
