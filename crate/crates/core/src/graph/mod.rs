//! Graph-building reverse-mode differentiation.
//!
//! A [`Graph`] is an append-only arena of nodes. Builder methods (see
//! `ops.rs`) push a node and, when all of its inputs carry values, evaluate
//! it immediately. [`Graph::grad`] walks the graph backwards and expresses
//! every adjoint as *new nodes* of the same graph, so a gradient is itself an
//! ordinary expression and can be differentiated again (double backprop for
//! the gradient penalty).
//!
//! Nodes are only ever appended and only reference earlier nodes, so the
//! arena order is a topological order and the graph is acyclic by
//! construction.

mod backward;
mod check;
mod ops;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use check::{grad_check, GradCheckReport};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// Operation tag of a node.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Leaf { name: String },
    Add,
    Sub,
    Mul,
    Div,
    /// `a / b`, defined as 0 wherever `b == 0`.
    DivSafe,
    Neg,
    Scale(f64),
    AddScalar(f64),
    MatMul { trans_a: bool, trans_b: bool },
    Transpose,
    Reshape(Vec<usize>),
    BroadcastTo(Vec<usize>),
    SumTo(Vec<usize>),
    SumAll,
    SumAxis { axis: usize, keepdim: bool },
    MaxAll,
    MaxAxis { axis: usize, keepdim: bool },
    /// Euclidean norm along an axis (kept as size 1).
    NormAxis { axis: usize },
    Square,
    Sqrt,
    Exp,
    Log,
    Abs,
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
    Softplus,
    /// Softmax over the last axis.
    Softmax,
    /// `max(x, floor)`.
    ClampMin(f64),
    Concat { axis: usize },
    Slice { axis: usize, start: usize, end: usize },
    PadSlice { axis: usize, start: usize, total: usize },
    /// Piecewise-constant masks used by backward rules; their derivative is
    /// zero everywhere it exists.
    Mask(MaskKind),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MaskKind {
    /// 1 where x > 0, else 0.
    Positive,
    /// 1 where x > 0, else the slope. Zero itself takes the slope branch.
    LeakySlope(f64),
    /// sign(x) with sign(0) = 0.
    Sign,
    /// 1 where x > floor, else 0.
    Above(f64),
    /// One-hot of the first maximum along an axis (`None`: whole tensor).
    ArgMax(Option<usize>),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::DivSafe => "div_safe",
            Op::Neg => "neg",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::MatMul { .. } => "matmul",
            Op::Transpose => "transpose",
            Op::Reshape(_) => "reshape",
            Op::BroadcastTo(_) => "broadcast_to",
            Op::SumTo(_) => "sum_to",
            Op::SumAll => "sum",
            Op::SumAxis { .. } => "sum_axis",
            Op::MaxAll => "max",
            Op::MaxAxis { .. } => "max_axis",
            Op::NormAxis { .. } => "l2_norm",
            Op::Square => "square",
            Op::Sqrt => "sqrt",
            Op::Exp => "exp",
            Op::Log => "log",
            Op::Abs => "abs",
            Op::Relu => "relu",
            Op::LeakyRelu(_) => "lrelu",
            Op::Sigmoid => "sigmoid",
            Op::Tanh => "tanh",
            Op::Softplus => "softplus",
            Op::Softmax => "softmax",
            Op::ClampMin(_) => "clamp_min",
            Op::Concat { .. } => "concat",
            Op::Slice { .. } => "slice",
            Op::PadSlice { .. } => "pad_slice",
            Op::Mask(_) => "mask",
        }
    }

    /// Ops with a kink at which the one-sided derivatives differ; the
    /// gradient checker watches the sign pattern of their inputs.
    pub(crate) fn is_kinked(&self) -> bool {
        matches!(
            self,
            Op::Abs
                | Op::Relu
                | Op::LeakyRelu(_)
                | Op::ClampMin(_)
                | Op::MaxAll
                | Op::MaxAxis { .. }
                | Op::NormAxis { .. }
        )
    }

    fn differentiable(&self) -> bool {
        !matches!(self, Op::Mask(_) | Op::Leaf { .. })
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub op: Op,
    pub inputs: Vec<Var>,
    pub value: Option<Tensor>,
    pub requires_grad: bool,
}

/// Append-only computation graph.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Value of an evaluated node.
    pub fn value(&self, v: Var) -> Result<&Tensor> {
        self.nodes[v.0].value.as_ref().ok_or(Error::Unevaluated(v.0))
    }

    pub fn shape(&self, v: Var) -> Result<&[usize]> {
        Ok(self.value(v)?.shape())
    }

    /// Scalar value of an evaluated single-element node.
    pub fn scalar(&self, v: Var) -> Result<f64> {
        let t = self.value(v)?;
        if t.is_scalar() {
            Ok(t.item())
        } else {
            Err(Error::NonScalar(t.shape().to_vec()))
        }
    }

    /// Leaf holding a value. `requires_grad` marks trainable parameters;
    /// [`Graph::grad`] can still differentiate with respect to constant
    /// leaves when they are listed explicitly.
    pub fn leaf(&mut self, name: impl Into<String>, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf { name: name.into() },
            inputs: Vec::new(),
            value: Some(value),
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf("const", value, false)
    }

    /// Unbound leaf; nodes built on top of it stay unevaluated until
    /// [`Graph::eval`] binds it.
    pub fn placeholder(&mut self, name: impl Into<String>) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf { name: name.into() },
            inputs: Vec::new(),
            value: None,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Constant copy of a node's current value, cut off from gradients.
    pub fn detach(&mut self, v: Var) -> Result<Var> {
        let value = self.value(v)?.clone();
        Ok(self.leaf("detached", value, false))
    }

    pub(crate) fn push(&mut self, op: Op, inputs: Vec<Var>) -> Result<Var> {
        let requires_grad = op.differentiable() && inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        let value = if inputs.iter().all(|i| self.nodes[i.0].value.is_some()) {
            let vals: Vec<&Tensor> = inputs
                .iter()
                .map(|i| self.nodes[i.0].value.as_ref().expect("checked"))
                .collect();
            Some(ops::forward(&op, &vals)?)
        } else {
            None
        };
        self.nodes.push(Node {
            op,
            inputs,
            value,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Re-evaluates every ancestor of `root` in topological order with the
    /// given leaf bindings and returns the value of `root`. Bound values
    /// replace the stored ones; unbound leaves keep theirs.
    pub fn eval(&mut self, root: Var, bindings: &[(Var, Tensor)]) -> Result<Tensor> {
        let bound: BTreeMap<usize, &Tensor> = bindings.iter().map(|(v, t)| (v.0, t)).collect();
        let live = self.ancestors(root);
        for (i, &alive) in live.iter().enumerate().take(root.0 + 1) {
            if !alive {
                continue;
            }
            if let Op::Leaf { name } = &self.nodes[i].op {
                if let Some(t) = bound.get(&i) {
                    self.nodes[i].value = Some((*t).clone());
                } else if self.nodes[i].value.is_none() {
                    return Err(Error::UnboundLeaf(name.clone()));
                }
                continue;
            }
            let value = {
                let node = &self.nodes[i];
                let vals: Vec<&Tensor> = node
                    .inputs
                    .iter()
                    .map(|v| self.nodes[v.0].value.as_ref().expect("topological order"))
                    .collect();
                ops::forward(&node.op, &vals)?
            };
            self.nodes[i].value = Some(value);
        }
        self.value(root).cloned()
    }

    /// Marks `root` and everything it depends on.
    pub fn ancestors(&self, root: Var) -> Vec<bool> {
        let mut live = vec![false; root.0 + 1];
        live[root.0] = true;
        for i in (0..=root.0).rev() {
            if live[i] {
                for v in &self.nodes[i].inputs {
                    live[v.0] = true;
                }
            }
        }
        live
    }

    /// Topological order of the ancestors of `root`. Because nodes only
    /// reference earlier nodes this is an ascending walk; the method exists
    /// to make the acyclicity guarantee checkable.
    pub fn topological_order(&self, root: Var) -> Result<Vec<Var>> {
        let live = self.ancestors(root);
        let mut order = Vec::new();
        for (i, node) in self.nodes.iter().enumerate().take(root.0 + 1) {
            if !live[i] {
                continue;
            }
            if node.inputs.iter().any(|v| v.0 >= i) {
                return Err(Error::Domain {
                    op: "topological_order",
                    detail: alloc::format!("node {i} references a later node"),
                });
            }
            order.push(Var(i));
        }
        Ok(order)
    }

    /// Nodes computing `d output / d wrt` for each entry of `wrt`.
    ///
    /// The result nodes belong to this graph and can be differentiated
    /// again. A `wrt` node that `output` does not depend on gets a constant
    /// zero gradient of its own shape.
    pub fn grad(&mut self, output: Var, wrt: &[Var]) -> Result<Vec<Var>> {
        let out_value = self.value(output)?;
        if !out_value.is_scalar() {
            return Err(Error::NonScalar(out_value.shape().to_vec()));
        }
        let out_shape = out_value.shape().to_vec();
        let n = output.0 + 1;

        // Nodes that depend on some `wrt` node through differentiable ops.
        let mut needs = vec![false; n];
        for w in wrt {
            if w.0 < n {
                needs[w.0] = true;
            }
        }
        let start = wrt.iter().map(|w| w.0).min().unwrap_or(n);
        for i in start..n {
            if !needs[i] && self.nodes[i].op.differentiable() {
                needs[i] = self.nodes[i].inputs.iter().any(|v| needs[v.0]);
            }
        }

        let mut grads: Vec<Option<Var>> = vec![None; n];
        if needs[output.0] {
            grads[output.0] = Some(self.constant(Tensor::full(&out_shape, 1.0)));
        }
        for i in (0..n).rev() {
            let Some(g) = grads[i] else { continue };
            if !needs[i] || !self.nodes[i].op.differentiable() {
                continue;
            }
            let inputs = self.nodes[i].inputs.clone();
            let mask: Vec<bool> = inputs.iter().map(|v| needs[v.0]).collect();
            let contribs = self.backward(Var(i), g, &mask)?;
            for (input, contrib) in inputs.iter().zip(contribs) {
                let Some(c) = contrib else { continue };
                grads[input.0] = Some(match grads[input.0] {
                    Some(acc) => self.add(acc, c)?,
                    None => c,
                });
            }
        }

        wrt.iter()
            .map(|w| match grads.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let shape = self.shape(*w)?.to_vec();
                    Ok(self.constant(Tensor::zeros(&shape)))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_leaf(g: &mut Graph, name: &str, data: &[f64], rg: bool) -> Var {
        g.leaf(name, Tensor::from_vec(data.to_vec()), rg)
    }

    #[test]
    fn eval_elementwise_add() {
        let mut g = Graph::new();
        let a = g.placeholder("a");
        let b = g.placeholder("b");
        let s = g.add(a, b).unwrap();
        let out = g
            .eval(
                s,
                &[
                    (a, Tensor::from_vec(vec![1., 2.])),
                    (b, Tensor::from_vec(vec![3., 4.])),
                ],
            )
            .unwrap();
        assert_eq!(out.data(), &[4., 6.]);
    }

    #[test]
    fn eval_reports_unbound_leaf_by_name() {
        let mut g = Graph::new();
        let a = g.placeholder("a");
        let b = g.placeholder("weights");
        let s = g.add(a, b).unwrap();
        let err = g.eval(s, &[(a, Tensor::from_vec(vec![1.]))]).unwrap_err();
        assert_eq!(err, Error::UnboundLeaf("weights".into()));
    }

    #[test]
    fn eval_reports_shape_mismatch_with_op() {
        let mut g = Graph::new();
        let a = g.placeholder("a");
        let b = g.placeholder("b");
        let s = g.matmul(a, b).unwrap();
        let err = g
            .eval(
                s,
                &[
                    (a, Tensor::zeros(&[2, 3])),
                    (b, Tensor::zeros(&[2, 3])),
                ],
            )
            .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { op: "matmul", .. }));
    }

    #[test]
    fn identity_matmul_and_softmax_symmetry() {
        let mut g = Graph::new();
        let i3 = g.constant(Tensor::identity(3));
        let x = g.leaf("x", Tensor::matrix(3, 1, vec![0.3, -1.2, 7.0]).unwrap(), false);
        let y = g.matmul(i3, x).unwrap();
        assert_eq!(g.value(y).unwrap(), g.value(x).unwrap());
        let z = g.constant(Tensor::zeros(&[1, 3]));
        let s = g.softmax(z).unwrap();
        for v in g.value(s).unwrap().data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn grad_of_sum_of_squares() {
        let mut g = Graph::new();
        let x = vec_leaf(&mut g, "x", &[1., 2., 3.], true);
        let sq = g.mul(x, x).unwrap();
        let s = g.sum(sq).unwrap();
        let gx = g.grad(s, &[x]).unwrap()[0];
        assert_eq!(g.value(gx).unwrap().data(), &[2., 4., 6.]);
    }

    #[test]
    fn grad_of_constant_is_zero() {
        let mut g = Graph::new();
        let x = vec_leaf(&mut g, "x", &[1., 2.], true);
        let c = g.constant(Tensor::scalar(5.0));
        let gx = g.grad(c, &[x]).unwrap()[0];
        assert_eq!(g.value(gx).unwrap().data(), &[0., 0.]);
    }

    #[test]
    fn grad_rejects_non_scalar_output() {
        let mut g = Graph::new();
        let x = vec_leaf(&mut g, "x", &[1., 2.], true);
        let y = g.square(x).unwrap();
        assert!(matches!(g.grad(y, &[x]), Err(Error::NonScalar(_))));
    }

    #[test]
    fn second_order_through_gradient_nodes() {
        // y = x^3, dy/dx = 3x^2, d(dy/dx)/dx = 6x
        let mut g = Graph::new();
        let x = vec_leaf(&mut g, "x", &[2.0], true);
        let x2 = g.mul(x, x).unwrap();
        let x3 = g.mul(x2, x).unwrap();
        let y = g.sum(x3).unwrap();
        let dy = g.grad(y, &[x]).unwrap()[0];
        assert_eq!(g.value(dy).unwrap().data(), &[12.0]);
        let s = g.sum(dy).unwrap();
        let d2 = g.grad(s, &[x]).unwrap()[0];
        assert_eq!(g.value(d2).unwrap().data(), &[12.0]);
    }

    #[test]
    fn gradient_graph_reevaluates_with_new_bindings() {
        let mut g = Graph::new();
        let x = g.leaf("x", Tensor::from_vec(vec![1.0, 1.0]), true);
        let sq = g.square(x).unwrap();
        let s = g.sum(sq).unwrap();
        let gx = g.grad(s, &[x]).unwrap()[0];
        let v = g.eval(gx, &[(x, Tensor::from_vec(vec![3.0, -4.0]))]).unwrap();
        assert_eq!(v.data(), &[6.0, -8.0]);
    }

    #[test]
    fn topological_order_succeeds() {
        let mut g = Graph::new();
        let x = vec_leaf(&mut g, "x", &[1., 2.], true);
        let e = g.exp(x).unwrap();
        let s = g.sum(e).unwrap();
        let d = g.grad(s, &[x]).unwrap()[0];
        let t = g.sum(d).unwrap();
        let order = g.topological_order(t).unwrap();
        assert_eq!(order.last(), Some(&t));
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let build = || {
            let mut g = Graph::new();
            let a = g.leaf("a", Tensor::from_vec((0..50).map(|i| i as f64 * 0.37).collect()), true);
            let b = g.tanh(a).unwrap();
            let c = g.softplus(b).unwrap();
            let s = g.sum(c).unwrap();
            let d = g.grad(s, &[a]).unwrap()[0];
            g.value(d).unwrap().clone()
        };
        let x = build();
        let y = build();
        assert!(x.data().iter().zip(y.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
