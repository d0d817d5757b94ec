//! Oracle measurements shared by the core tests and the acceptance target.

#![allow(dead_code)]

use ctgan_core::data::ToyDistribution;
use ctgan_core::gan::{
    consistency_term, ct_critic_loss, gradient_penalty, wasserstein_critic_core, Bound, CriticNoise, NoiseDist,
    TrainConfig,
};
use ctgan_core::graph::{grad_check, Graph, Var};
use ctgan_core::nn::{build_network, ForwardOptions, LayerSpec, NetworkSpec, NoiseSources, Param, ParamKind, ParamStore};
use ctgan_core::rng::{streams, RngStream};
use ctgan_core::{Result, Tensor};

pub const FIRST_ORDER_TOL: f64 = 1e-5;
pub const SECOND_ORDER_TOL: f64 = 1e-4;

fn rel(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs() + 1e-12)
}

fn point(seed: u64, n: usize) -> Tensor {
    let mut r = RngStream::new(seed, streams::TOY);
    Tensor::from_vec((0..n).map(|_| r.uniform_range(-1.5, 1.5)).collect())
}

type Composition = (&'static str, fn(&mut Graph, Var) -> Result<Var>);

pub fn compositions() -> Vec<Composition> {
    vec![
        ("sigmoid*tanh", |g, x| {
            let a = g.sigmoid(x)?;
            let b = g.tanh(x)?;
            let m = g.mul(a, b)?;
            g.sum(m)
        }),
        ("logsumexp", |g, x| {
            let e = g.exp(x)?;
            let s = g.sum(e)?;
            g.log(s)
        }),
        ("softmax weighted", |g, x| {
            let m = g.reshape(x, &[2, 3])?;
            let s = g.softmax(m)?;
            let c = g.constant(Tensor::matrix(2, 3, vec![1., -2., 3., 0.5, 4., -1.])?);
            let p = g.mul(s, c)?;
            g.sum(p)
        }),
        ("softplus(matmul)", |g, x| {
            let m = g.reshape(x, &[2, 3])?;
            let w = g.constant(Tensor::matrix(3, 2, vec![0.3, -0.7, 1.1, 0.2, -0.4, 0.9])?);
            let y = g.matmul(m, w)?;
            let s = g.softplus(y)?;
            g.sum(s)
        }),
        ("mean squared error", |g, x| {
            let c = g.constant(Tensor::from_vec(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]));
            let d = g.sub(x, c)?;
            let s = g.square(d)?;
            g.mean(s)
        }),
        ("smoothed row norms", |g, x| {
            let m = g.reshape(x, &[3, 2])?;
            let n = g.l2_norm_smoothed(m, 1, 1e-12)?;
            let c = g.constant(Tensor::matrix(3, 1, vec![1., 2., 3.])?);
            let p = g.mul(n, c)?;
            g.sum(p)
        }),
        ("rational", |g, x| {
            let sq = g.square(x)?;
            let d = g.add_scalar(sq, 1.0)?;
            let q = g.div(x, d)?;
            g.sum(q)
        }),
        ("sqrt", |g, x| {
            let sq = g.square(x)?;
            let d = g.add_scalar(sq, 0.5)?;
            let r = g.sqrt(d)?;
            g.sum(r)
        }),
        ("leaky relu", |g, x| {
            let l = g.leaky_relu(x, 0.2)?;
            let m = g.mul(l, x)?;
            g.sum(m)
        }),
        ("max + abs", |g, x| {
            let m = g.max(x)?;
            let a = g.abs(x)?;
            let s = g.sum(a)?;
            let s = g.scale(s, 0.3)?;
            g.add(m, s)
        }),
        ("concat/slice", |g, x| {
            let d = g.scale(x, 2.0)?;
            let c = g.concat(&[x, d], 0)?;
            let s = g.slice(c, 0, 4, 9)?;
            let q = g.square(s)?;
            g.sum(q)
        }),
        ("gram matrix", |g, x| {
            let m = g.reshape(x, &[2, 3])?;
            let gram = g.matmul_t(m, m, false, true)?;
            let c = g.constant(Tensor::matrix(2, 2, vec![1., 0.5, -0.3, 2.])?);
            let p = g.mul(gram, c)?;
            g.sum(p)
        }),
        ("broadcast normalise", |g, x| {
            let m = g.reshape(x, &[2, 3])?;
            let b = g.constant(Tensor::new(vec![1, 3], vec![0.5, 1.0, -0.5])?);
            let y = g.add(m, b)?;
            let y2 = g.square(y)?;
            let s = g.sum_axis(y2, 1, true)?;
            let s = g.add_scalar(s, 1.0)?;
            let q = g.div(y, s)?;
            let t = g.tanh(q)?;
            g.sum(t)
        }),
        ("log clamp sigmoid", |g, x| {
            let s = g.sigmoid(x)?;
            let c = g.clamp_min(s, 1e-12)?;
            let l = g.log(c)?;
            g.sum(l)
        }),
        ("gradient of tanh cubed", |g, x| {
            let t = g.tanh(x)?;
            let t2 = g.square(t)?;
            let t3 = g.mul(t2, t)?;
            let s = g.sum(t3)?;
            let dx = g.grad(s, &[x])?[0];
            let q = g.square(dx)?;
            g.sum(q)
        }),
    ]
}

type ParamLoss<'a> = dyn Fn(&mut Graph, &ParamStore, bool) -> Result<(Var, Vec<Var>)> + 'a;

/// Engine gradient of `loss(store)` wrt every parameter vs central
/// differences on perturbed copies of the store.
fn check_params(
    store: &ParamStore,
    loss: &ParamLoss<'_>,
    h: f64,
    coords: usize,
    seed: u64,
) -> f64 {
    let mut g = Graph::new();
    let (l, vars) = loss(&mut g, store, true).unwrap();
    let grads = g.grad(l, &vars).unwrap();
    let analytic: Vec<Tensor> = grads.iter().map(|v| g.value(*v).unwrap().clone()).collect();
    let value = |s: &ParamStore| -> f64 {
        let mut g = Graph::new();
        let (l, _) = loss(&mut g, s, false).unwrap();
        g.scalar(l).unwrap()
    };
    let sizes: Vec<usize> = store.params().iter().map(|p| p.value.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut pick = RngStream::new(seed, streams::TOY);
    let mut worst: f64 = 0.0;
    for _ in 0..coords.min(total) {
        let mut flat = pick.below(total);
        let mut p = 0;
        while flat >= sizes[p] {
            flat -= sizes[p];
            p += 1;
        }
        let mut plus = store.clone();
        plus.params_mut()[p].value.data_mut()[flat] += h;
        let mut minus = store.clone();
        minus.params_mut()[p].value.data_mut()[flat] -= h;
        let numeric = (value(&plus) - value(&minus)) / (2.0 * h);
        worst = worst.max(rel(analytic[p].data()[flat], numeric));
    }
    worst
}

fn random_store(spec: &NetworkSpec, seed: u64, scale: f64) -> ParamStore {
    let mut s = build_network(spec, &mut RngStream::new(seed, streams::INIT)).unwrap();
    let mut r = RngStream::new(seed, streams::TOY);
    for p in s.params_mut() {
        for v in p.value.data_mut() {
            *v = r.normal() * scale;
        }
    }
    s
}

fn critic_suite() -> Vec<(NetworkSpec, f64)> {
    vec![
        (NetworkSpec::toy_critic(4, 16, 2, 0.0), 0.5),
        (
            NetworkSpec::new(
                3,
                vec![
                    LayerSpec::Dense { units: 64 },
                    LayerSpec::Tanh,
                    LayerSpec::Dense { units: 32 },
                    LayerSpec::Softplus,
                    LayerSpec::Dense { units: 1 },
                ],
            ),
            0.3,
        ),
        (
            NetworkSpec::new(
                5,
                vec![
                    LayerSpec::WeightNormDense { units: 24 },
                    LayerSpec::Sigmoid,
                    LayerSpec::Dense { units: 48 },
                    LayerSpec::LeakyRelu,
                    LayerSpec::Dense { units: 1 },
                ],
            ),
            0.4,
        ),
    ]
}

fn batch(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut r = RngStream::new(seed, streams::DATA);
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| r.uniform_range(-1.0, 1.0)).collect()).unwrap()
}


/// Worst relative error per op composition.
pub fn composition_errors() -> Vec<(&'static str, f64)> {
    compositions()
        .into_iter()
        .enumerate()
        .map(|(k, (name, f))| {
            let x = point(100 + k as u64, 6);
            let report = grad_check(f, &x, 1e-6).unwrap();
            assert!(report.checked > 0, "{name}: no coordinate checked");
            (name, report.max_rel_error)
        })
        .collect()
}

/// Worst relative error of each random critic: (parameters, inputs).
pub fn critic_first_order_errors() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (k, (spec, scale)) in critic_suite().into_iter().enumerate() {
        let store = random_store(&spec, 10 + k as u64, scale);
        let x = batch(6, spec.input_dim, k as u64);
        let loss = |g: &mut Graph, s: &ParamStore, trainable: bool| -> Result<(Var, Vec<Var>)> {
            let b = Bound::new(g, s, trainable);
            let xv = g.constant(x.clone());
            let out = b.forward(g, xv, ForwardOptions::EVAL, None)?;
            let w = g.constant(Tensor::matrix(6, 1, vec![1.0, -0.5, 2.0, 0.3, -1.2, 0.7])?);
            let p = g.mul(out.output, w)?;
            Ok((g.sum(p)?, b.params.vars))
        };
        let params = check_params(&store, &loss, 1e-6, 400, k as u64);
        let f = |g: &mut Graph, xv: Var| -> Result<Var> {
            let b = Bound::new(g, &store, false);
            let m = g.reshape(xv, &[6, spec.input_dim])?;
            let out = b.forward(g, m, ForwardOptions::EVAL, None)?;
            let t = g.tanh(out.output)?;
            g.sum(t)
        };
        let flat = Tensor::from_vec(x.data().to_vec());
        let inputs = grad_check(f, &flat, 1e-6).unwrap().max_rel_error;
        out.push((params, inputs));
    }
    out
}

/// Worst relative error of the GP parameter gradient on two critics.
pub fn gp_second_order_errors() -> Vec<f64> {
    let specs = [
        NetworkSpec::new(
            3,
            vec![
                LayerSpec::Dense { units: 16 },
                LayerSpec::Tanh,
                LayerSpec::Dense { units: 1 },
            ],
        ),
        NetworkSpec::toy_critic(2, 12, 2, 0.0),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let store = random_store(spec, 40 + k as u64, 0.6);
            let x_hat = batch(5, spec.input_dim, 7 + k as u64);
            let loss = |g: &mut Graph, s: &ParamStore, trainable: bool| -> Result<(Var, Vec<Var>)> {
                let b = Bound::new(g, s, trainable);
                let gp = gradient_penalty(g, &b, &x_hat, ForwardOptions::EVAL, None)?;
                Ok((gp, b.params.vars))
            };
            check_params(&store, &loss, 1e-5, 300, k as u64)
        })
        .collect()
}

pub fn dense_store(input: usize, layers: Vec<LayerSpec>, values: &[(usize, ParamKind, Vec<usize>, Vec<f64>)]) -> ParamStore {
    let params = values
        .iter()
        .map(|(layer, kind, shape, v)| Param {
            layer: *layer,
            kind: *kind,
            value: Tensor::new(shape.clone(), v.clone()).unwrap(),
        })
        .collect();
    ParamStore::from_parts(NetworkSpec::new(input, layers), params, vec![], None).unwrap()
}

fn lrelu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.2 * v
    }
}

/// Largest |GP| over unit-norm linear critics.
pub fn gp_on_unit_linear_critics() -> f64 {
    let mut worst: f64 = 0.0;
    for (k, w) in [vec![1.0], vec![0.6, -0.8], vec![0.5, 0.5, 0.5, 0.5]].into_iter().enumerate() {
        let d = w.len();
        let critic = dense_store(
            d,
            vec![LayerSpec::Dense { units: 1 }],
            &[
                (0, ParamKind::Weight, vec![d, 1], w),
                (0, ParamKind::Bias, vec![1], vec![-0.25]),
            ],
        );
        let mut r = RngStream::new(k as u64, streams::DATA);
        let x = Tensor::matrix(8, d, r.normal_vec(8 * d, 2.0)).unwrap();
        let mut g = Graph::new();
        let b = Bound::new(&mut g, &critic, true);
        let gp = gradient_penalty(&mut g, &b, &x, ForwardOptions::EVAL, None).unwrap();
        worst = worst.max(g.scalar(gp).unwrap().abs());
    }
    worst
}

/// One hidden unit: `D(x) = w2 * drop(lrelu(w1 x + b1)) + b2`.
fn one_unit_critic(rate: f64) -> ParamStore {
    dense_store(
        1,
        vec![
            LayerSpec::Dense { units: 1 },
            LayerSpec::LeakyRelu,
            LayerSpec::Dropout { rate },
            LayerSpec::Dense { units: 1 },
        ],
        &[
            (0, ParamKind::Weight, vec![1, 1], vec![1.7]),
            (0, ParamKind::Bias, vec![1], vec![-0.4]),
            (3, ParamKind::Weight, vec![1, 1], vec![-2.3]),
            (3, ParamKind::Bias, vec![1], vec![0.9]),
        ],
    )
}

/// CT against a table over every (first, second) mask outcome of a
/// three-row batch. Returns the largest deviation and whether all outcomes
/// were exercised.
pub fn ct_mask_enumeration() -> (f64, bool) {
    let xs = [0.7, -1.3, 2.0];
    let rate = 0.5;
    let keep = 1.0 - rate;
    let critic = one_unit_critic(rate);
    let h: Vec<f64> = xs.iter().map(|x| lrelu(1.7 * x - 0.4)).collect();
    let mut worst: f64 = 0.0;
    let mut complete = true;
    for m_prime in [0.0, 0.3] {
        let outcomes = 1usize << (2 * xs.len());
        let table: Vec<f64> = (0..outcomes)
            .map(|code| {
                let mut total = 0.0;
                for (i, hi) in h.iter().enumerate() {
                    let m1 = if code >> i & 1 == 1 { 1.0 / keep } else { 0.0 };
                    let m2 = if code >> (xs.len() + i) & 1 == 1 { 1.0 / keep } else { 0.0 };
                    let d_out = (-2.3 * hi * m1 - (-2.3 * hi * m2)).abs();
                    let d_feat = (hi * m1 - hi * m2).abs();
                    total += (d_out + 0.1 * d_feat - m_prime).max(0.0);
                }
                total / xs.len() as f64
            })
            .collect();
        let mut seen = vec![false; outcomes];
        for seed in 0..1500u64 {
            let mut first = NoiseSources::new(seed);
            let mut second = first.substream(1);
            // Replay the Bernoulli draws to learn which outcome the engine used.
            let mut code = 0usize;
            let mut r1 = first.dropout.clone();
            let mut r2 = second.dropout.clone();
            for i in 0..xs.len() {
                code |= usize::from(r1.bernoulli(keep)) << i;
            }
            for i in 0..xs.len() {
                code |= usize::from(r2.bernoulli(keep)) << (xs.len() + i);
            }
            let mut g = Graph::new();
            let b = Bound::new(&mut g, &critic, true);
            let x = g.constant(Tensor::matrix(3, 1, xs.to_vec()).unwrap());
            let ct =
                consistency_term(&mut g, &b, x, ForwardOptions::TRAIN, &mut first, &mut second, m_prime, 0.1, false)
                    .unwrap();
            worst = worst.max((g.scalar(ct).unwrap() - table[code]).abs());
            seen[code] = true;
        }
        complete &= seen.iter().all(|s| *s);
    }
    (worst, complete)
}

/// Bits of the full critic loss with zero penalty weights and of the plain
/// Wasserstein loss on the same batch.
pub fn zero_weight_loss_bits() -> (u64, u64) {
    let critic = build_network(&NetworkSpec::toy_critic(2, 16, 2, 0.5), &mut RngStream::new(1, streams::INIT)).unwrap();
    let generator =
        build_network(&NetworkSpec::toy_generator(3, 16, 2, 2), &mut RngStream::new(2, streams::INIT)).unwrap();
    let x = ToyDistribution::Ring8.sample(32, 0.05, 3).unwrap().examples().unwrap();
    let z = NoiseDist::Normal.sample(&mut RngStream::new(4, streams::NOISE_Z), 32, 3).unwrap();
    let cfg = TrainConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        ..TrainConfig::default()
    };
    let mut g = Graph::new();
    let loss = ct_critic_loss(&mut g, &critic, &generator, &x, &z, &mut CriticNoise::new(5), &cfg).unwrap();
    assert!(loss.gp.is_none() && loss.ct.is_none());

    let fake = generator.predict(&z, ForwardOptions::TRAIN, None).unwrap().output;
    let d_real = critic.predict(&x, ForwardOptions::EVAL, None).unwrap().output;
    let d_fake = critic.predict(&fake, ForwardOptions::EVAL, None).unwrap().output;
    let mut h = Graph::new();
    let f = h.constant(d_fake);
    let r = h.constant(d_real);
    let plain = wasserstein_critic_core(&mut h, f, r).unwrap();
    (g.scalar(loss.total).unwrap().to_bits(), h.scalar(plain).unwrap().to_bits())
}
