//! Central-difference gradient checking.

use alloc::format;
use alloc::vec::Vec;

use super::{Graph, MaskKind, Op, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// max |analytic - numeric| / (|analytic| + |numeric| + 1e-12) over the
    /// coordinates that were checked.
    pub max_rel_error: f64,
    /// Coordinates whose ±epsilon probes cross a kink of some op (ReLU,
    /// lReLU, abs, clamp, max, norm at zero) and were therefore skipped.
    pub skipped: Vec<usize>,
    pub checked: usize,
}

/// One entry per element of every kinked node: which piece of the piecewise
/// definition is active.
fn kink_signature(g: &Graph, root: Var) -> Result<Vec<i8>> {
    let mut sig = Vec::new();
    for (i, node) in g.nodes().iter().enumerate().take(root.id() + 1) {
        if !node.op.is_kinked() {
            continue;
        }
        let input = g.value(node.inputs[0])?;
        let sign = |v: f64| -> i8 {
            if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            }
        };
        match &node.op {
            Op::ClampMin(floor) => sig.extend(input.data().iter().map(|v| sign(v - floor))),
            Op::MaxAll => {
                let m = super::ops::forward(&Op::Mask(MaskKind::ArgMax(None)), &[input])?;
                sig.extend(m.data().iter().map(|v| *v as i8));
            }
            Op::MaxAxis { axis, .. } => {
                let m = input.argmax_mask(*axis)?;
                sig.extend(m.data().iter().map(|v| *v as i8));
            }
            Op::NormAxis { .. } => {
                let out = g.value(super::Var(i))?;
                sig.extend(out.data().iter().map(|v| i8::from(*v == 0.0)));
            }
            _ => sig.extend(input.data().iter().map(|v| sign(*v))),
        }
    }
    Ok(sig)
}

fn first_non_finite(g: &Graph, root: Var) -> Option<Error> {
    g.nodes()
        .iter()
        .enumerate()
        .take(root.id() + 1)
        .find(|(_, n)| n.value.as_ref().is_some_and(|v| !v.all_finite()))
        .map(|(i, n)| Error::NonFinite {
            op: n.op.name(),
            node: i,
        })
}

/// Compares the engine's gradient of the scalar built by `f` at `point`
/// against central differences with step `epsilon`.
pub fn grad_check<F>(f: F, point: &Tensor, epsilon: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(Error::Domain {
            op: "grad_check",
            detail: format!("epsilon {epsilon} outside (0, 1e-2]"),
        });
    }
    let mut g = Graph::new();
    let x = g.leaf("x", point.clone(), true);
    let y = f(&mut g, x)?;
    if let Some(e) = first_non_finite(&g, y) {
        return Err(e);
    }
    let analytic = {
        let gx = g.grad(y, &[x])?[0];
        if let Some(e) = first_non_finite(&g, gx) {
            return Err(e);
        }
        g.value(gx)?.clone()
    };
    let center = kink_signature(&g, y)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        skipped: Vec::new(),
        checked: 0,
    };
    for i in 0..point.len() {
        let mut probe = |delta: f64| -> Result<(f64, bool)> {
            let mut p = point.clone();
            p.data_mut()[i] += delta;
            let v = g.eval(y, &[(x, p)])?;
            if let Some(e) = first_non_finite(&g, y) {
                return Err(e);
            }
            Ok((v.item(), kink_signature(&g, y)? == center))
        };
        let (plus, same_plus) = probe(epsilon)?;
        let (minus, same_minus) = probe(-epsilon)?;
        if !(same_plus && same_minus) {
            report.skipped.push(i);
            continue;
        }
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic.data()[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-12);
        report.max_rel_error = report.max_rel_error.max(rel);
        report.checked += 1;
    }
    g.eval(y, &[(x, point.clone())])?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_epsilon() {
        let p = Tensor::from_vec(alloc::vec![1.0]);
        assert!(grad_check(|g, x| g.sum(x), &p, 0.0).is_err());
        assert!(grad_check(|g, x| g.sum(x), &p, 0.1).is_err());
    }

    #[test]
    fn linear_map_is_exact() {
        let p = Tensor::from_vec(alloc::vec![0.3, -1.1, 2.5]);
        let w = Tensor::from_vec(alloc::vec![2.0, -3.0, 0.5]);
        let r = grad_check(
            |g, x| {
                let wv = g.constant(w.clone());
                let m = g.mul(x, wv)?;
                g.sum(m)
            },
            &p,
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error < 1e-9, "{}", r.max_rel_error);
        assert!(r.skipped.is_empty());
    }

    #[test]
    fn skips_coordinate_on_lrelu_kink() {
        let p = Tensor::from_vec(alloc::vec![0.0, 1.0, -2.0]);
        let r = grad_check(
            |g, x| {
                let a = g.leaky_relu(x, 0.2)?;
                g.sum(a)
            },
            &p,
            1e-5,
        )
        .unwrap();
        assert_eq!(r.skipped, alloc::vec![0]);
        assert_eq!(r.checked, 2);
        assert!(r.max_rel_error < 1e-9);
    }

    #[test]
    fn reports_non_finite_op() {
        let p = Tensor::from_vec(alloc::vec![0.0, 1.0]);
        let err = grad_check(
            |g, x| {
                let l = g.log(x)?;
                g.sum(l)
            },
            &p,
            1e-5,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { op: "log", .. }));
    }
}
