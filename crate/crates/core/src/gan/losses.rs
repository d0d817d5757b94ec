use alloc::format;
use alloc::vec::Vec;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::nn::{forward, BatchStats, BoundParams, ForwardOptions, ForwardOutput, LayerSpec, NoiseSources, ParamStore};
use crate::rng::{streams, RngStream};
use crate::tensor::Tensor;

/// Parameters of one network bound into a graph.
pub struct Bound<'a> {
    pub store: &'a ParamStore,
    pub params: BoundParams,
}

impl<'a> Bound<'a> {
    pub fn new(g: &mut Graph, store: &'a ParamStore, trainable: bool) -> Self {
        Self {
            store,
            params: store.bind(g, trainable),
        }
    }

    pub fn forward(
        &self,
        g: &mut Graph,
        x: Var,
        options: ForwardOptions,
        noise: Option<&mut NoiseSources>,
    ) -> Result<ForwardOutput> {
        forward(g, self.store, &self.params, x, options, noise)
    }
}

/// Whether a pass with `options` through `store` draws any randomness.
pub fn has_active_noise(store: &ParamStore, options: ForwardOptions) -> bool {
    store.spec().layers.iter().any(|l| match l {
        LayerSpec::Dropout { rate } => options.dropout && *rate > 0.0,
        LayerSpec::GaussianNoise { std } => options.noise && *std > 0.0,
        _ => false,
    })
}

/// Random sources of the Wasserstein trainer's loss construction.
#[derive(Clone, Debug)]
pub struct CriticNoise {
    /// Stochastic layers of the loss and GP passes (when enabled).
    pub main: NoiseSources,
    pub ct_first: NoiseSources,
    pub ct_second: NoiseSources,
    /// Stochastic layers of the generator, if any.
    pub generator: NoiseSources,
    /// Interpolation coefficients.
    pub eps: RngStream,
}

impl CriticNoise {
    pub fn new(seed: u64) -> Self {
        let base = NoiseSources::new(seed);
        Self {
            main: base.substream(0),
            ct_first: base.substream(1),
            ct_second: base.substream(2),
            generator: base.substream(3),
            eps: RngStream::new(seed, streams::EPSILON),
        }
    }
}

/// `mean(d_fake) - mean(d_real)`.
pub fn wasserstein_critic_core(g: &mut Graph, d_fake: Var, d_real: Var) -> Result<Var> {
    let (fs, rs) = (g.shape(d_fake)?.to_vec(), g.shape(d_real)?.to_vec());
    if fs != rs {
        return Err(Error::ShapeMismatch {
            op: "wasserstein_critic_core",
            lhs: fs,
            rhs: rs,
        });
    }
    let f = g.mean(d_fake)?;
    let r = g.mean(d_real)?;
    g.sub(f, r)
}

/// Per-row `eps_i x_i + (1 - eps_i) g_i` for given coefficients.
pub fn interpolate_with(x_real: &Tensor, x_fake: &Tensor, eps: &[f64]) -> Result<Tensor> {
    if x_real.shape() != x_fake.shape() || x_real.ndim() != 2 {
        return Err(Error::ShapeMismatch {
            op: "interpolate",
            lhs: x_real.shape().to_vec(),
            rhs: x_fake.shape().to_vec(),
        });
    }
    if eps.len() != x_real.rows() {
        return Err(Error::Config(format!("{} coefficients for {} rows", eps.len(), x_real.rows())));
    }
    let d = x_real.row_len();
    let data = x_real
        .data()
        .iter()
        .zip(x_fake.data())
        .enumerate()
        .map(|(k, (&x, &f))| {
            let e = eps[k / d];
            if e == 1.0 {
                x
            } else {
                f + e * (x - f)
            }
        })
        .collect();
    Tensor::new(x_real.shape().to_vec(), data)
}

/// Interpolates with one `U[0, 1)` coefficient per row drawn from `eps_stream`.
pub fn interpolate(x_real: &Tensor, x_fake: &Tensor, eps_stream: &mut RngStream) -> Result<Tensor> {
    if x_real.ndim() != 2 {
        return Err(Error::InvalidShape {
            shape: x_real.shape().to_vec(),
            len: x_real.len(),
        });
    }
    let eps: Vec<f64> = (0..x_real.rows()).map(|_| eps_stream.uniform()).collect();
    interpolate_with(x_real, x_fake, &eps)
}

/// `mean_i (|grad_x D(x_hat_i)| - 1)^2` with the norm smoothed as
/// `sqrt(sum sq + 1e-12)`. Differentiable with respect to the critic
/// parameters.
pub fn gradient_penalty(
    g: &mut Graph,
    critic: &Bound<'_>,
    x_hat: &Tensor,
    options: ForwardOptions,
    noise: Option<&mut NoiseSources>,
) -> Result<Var> {
    let x = g.leaf("x_hat", x_hat.clone(), false);
    let out = critic.forward(g, x, options, noise)?;
    let total = g.sum(out.output)?;
    let grad = g.grad(total, &[x])?[0];
    let norm = g.l2_norm_smoothed(grad, 1, 1e-12)?;
    let dev = g.add_scalar(norm, -1.0)?;
    let sq = g.square(dev)?;
    g.mean(sq)
}

/// Mean over rows of `max(0, d(D(x'), D(x'')) + w |D_(x') - D_(x'')| - m')`
/// where the two evaluations use independent noise sources.
#[allow(clippy::too_many_arguments)]
pub fn consistency_term(
    g: &mut Graph,
    critic: &Bound<'_>,
    x: Var,
    options: ForwardOptions,
    first: &mut NoiseSources,
    second: &mut NoiseSources,
    m_prime: f64,
    feature_weight: f64,
    on_logits: bool,
) -> Result<Var> {
    if !has_active_noise(critic.store, options) {
        return Err(Error::NoStochasticLayers);
    }
    let a = critic.forward(g, x, options, Some(first))?;
    let b = critic.forward(g, x, options, Some(second))?;
    let (ya, yb) = if on_logits { (a.logits, b.logits) } else { (a.output, b.output) };
    let diff = g.sub(ya, yb)?;
    let mut d = g.l2_norm(diff, 1)?;
    if feature_weight > 0.0 {
        let fdiff = g.sub(a.second_to_last, b.second_to_last)?;
        let fd = g.l2_norm(fdiff, 1)?;
        let fd = g.scale(fd, feature_weight)?;
        d = g.add(d, fd)?;
    }
    let shifted = g.add_scalar(d, -m_prime)?;
    let hinge = g.relu(shifted)?;
    g.mean(hinge)
}

/// Graph nodes of one critic objective.
pub struct CriticLoss {
    pub total: Var,
    pub wgan: Var,
    pub gp: Option<Var>,
    pub ct: Option<Var>,
    pub params: BoundParams,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub wgan: f64,
    pub gp: Option<f64>,
    pub ct: Option<f64>,
}

impl CriticLoss {
    pub fn breakdown(&self, g: &Graph) -> Result<LossBreakdown> {
        Ok(LossBreakdown {
            total: g.scalar(self.total)?,
            wgan: g.scalar(self.wgan)?,
            gp: self.gp.map(|v| g.scalar(v)).transpose()?,
            ct: self.ct.map(|v| g.scalar(v)).transpose()?,
        })
    }
}

impl core::fmt::Display for LossBreakdown {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "total={} wgan={}", self.total, self.wgan)?;
        if let Some(gp) = self.gp {
            write!(f, " gp={gp}")?;
        }
        if let Some(ct) = self.ct {
            write!(f, " ct={ct}")?;
        }
        Ok(())
    }
}

/// Forward options of the loss / GP passes.
pub fn main_pass_options(cfg: &TrainConfig) -> ForwardOptions {
    let stochastic = cfg.enable_critic_dropout && cfg.dropout_in_main_passes;
    ForwardOptions {
        dropout: stochastic,
        noise: stochastic,
        batch_stats: true,
    }
}

/// Forward options of the two CT passes.
pub fn ct_pass_options(cfg: &TrainConfig) -> ForwardOptions {
    ForwardOptions {
        dropout: cfg.enable_critic_dropout,
        noise: true,
        batch_stats: true,
    }
}

fn noise_for<'n>(store: &ParamStore, options: ForwardOptions, src: &'n mut NoiseSources) -> Option<&'n mut NoiseSources> {
    has_active_noise(store, options).then_some(src)
}

/// Critic objective `E D(G(z)) - E D(x) + l1 GP + l2 CT`, with the critic
/// bound trainable and the generator frozen.
pub fn ct_critic_loss(
    g: &mut Graph,
    critic: &ParamStore,
    generator: &ParamStore,
    x_real: &Tensor,
    z: &Tensor,
    noise: &mut CriticNoise,
    cfg: &TrainConfig,
) -> Result<CriticLoss> {
    let gen_opts = ForwardOptions::TRAIN;
    let fake = generator
        .predict(z, gen_opts, noise_for(generator, gen_opts, &mut noise.generator))?
        .output;
    let bound = Bound::new(g, critic, true);
    let main = main_pass_options(cfg);

    let xr = g.constant(x_real.clone());
    let xf = g.constant(fake.clone());
    let d_real = bound.forward(g, xr, main, noise_for(critic, main, &mut noise.main))?.output;
    let d_fake = bound.forward(g, xf, main, noise_for(critic, main, &mut noise.main))?.output;
    let wgan = wasserstein_critic_core(g, d_fake, d_real)?;
    let mut total = wgan;

    let gp = if cfg.gp_active() {
        let x_hat = interpolate(x_real, &fake, &mut noise.eps)?;
        let gp = gradient_penalty(g, &bound, &x_hat, main, noise_for(critic, main, &mut noise.main))?;
        let w = g.scale(gp, cfg.lambda1)?;
        total = g.add(total, w)?;
        Some(gp)
    } else {
        None
    };

    let ct = if cfg.ct_active() {
        let ct = consistency_term(
            g,
            &bound,
            xr,
            ct_pass_options(cfg),
            &mut noise.ct_first,
            &mut noise.ct_second,
            cfg.m_prime,
            cfg.feature_weight(),
            false,
        )?;
        let w = g.scale(ct, cfg.lambda2)?;
        total = g.add(total, w)?;
        Some(ct)
    } else {
        None
    };

    Ok(CriticLoss {
        total,
        wgan,
        gp,
        ct,
        params: bound.params,
    })
}

/// Generator objective with the generator bound trainable.
pub struct GeneratorLoss {
    pub loss: Var,
    pub params: BoundParams,
    pub batch_stats: Vec<BatchStats>,
}

/// `-mean D(G(z))` with the critic frozen.
pub fn generator_loss_wgan(
    g: &mut Graph,
    critic: &ParamStore,
    generator: &ParamStore,
    z: &Tensor,
    noise: &mut CriticNoise,
    cfg: &TrainConfig,
) -> Result<GeneratorLoss> {
    let gen = Bound::new(g, generator, true);
    let dis = Bound::new(g, critic, false);
    let zv = g.constant(z.clone());
    let gen_opts = ForwardOptions::TRAIN;
    let fake = gen.forward(g, zv, gen_opts, noise_for(generator, gen_opts, &mut noise.generator))?;
    let main = main_pass_options(cfg);
    let d = dis.forward(g, fake.output, main, noise_for(critic, main, &mut noise.main))?;
    let m = g.mean(d.output)?;
    let loss = g.neg(m)?;
    Ok(GeneratorLoss {
        loss,
        params: gen.params,
        batch_stats: fake.batch_stats,
    })
}

/// Random sources of the semi-supervised trainer.
#[derive(Clone, Debug)]
pub struct SemiNoise {
    pub main: NoiseSources,
    pub ct_first: NoiseSources,
    pub ct_second: NoiseSources,
    pub generator: NoiseSources,
}

impl SemiNoise {
    pub fn new(seed: u64) -> Self {
        let base = NoiseSources::new(seed);
        Self {
            main: base.substream(10),
            ct_first: base.substream(11),
            ct_second: base.substream(12),
            generator: base.substream(13),
        }
    }
}

/// One discriminator minibatch of the semi-supervised objective.
pub struct SemiBatch<'a> {
    pub x_labeled: &'a Tensor,
    pub labels: &'a [usize],
    pub x_unlabeled: Option<&'a Tensor>,
    pub z: Option<&'a Tensor>,
}

pub struct SemiLoss {
    pub total: Var,
    pub supervised: Var,
    pub unsup_real: Option<Var>,
    pub unsup_fake: Option<Var>,
    pub ct: Option<Var>,
    pub params: BoundParams,
}

/// Forward options of the discriminator's non-CT passes.
pub fn semi_main_options(cfg: &TrainConfig) -> ForwardOptions {
    ForwardOptions {
        dropout: cfg.dropout_in_main_passes,
        noise: true,
        batch_stats: true,
    }
}

fn neg_mean_log(g: &mut Graph, p: Var) -> Result<Var> {
    let c = g.clamp_min(p, 1e-12)?;
    let l = g.log(c)?;
    let m = g.mean(l)?;
    g.neg(m)
}

/// `-E log D(y|x) - E log D(K+1|G(z)) - E log(1 - D(K+1|x)) + lambda CT`
/// for a `(K+1)`-way softmax discriminator (labels are `0..K`, the last
/// output is the "generated" class).
pub fn semi_discriminator_loss(
    g: &mut Graph,
    disc: &ParamStore,
    generator: Option<&ParamStore>,
    batch: &SemiBatch<'_>,
    noise: &mut SemiNoise,
    cfg: &TrainConfig,
) -> Result<SemiLoss> {
    let outputs = disc.spec().output_dim()?;
    if outputs < 2 {
        return Err(Error::Network(format!("discriminator has {outputs} outputs, needs K + 1 >= 2")));
    }
    let k = outputs - 1;
    let n = batch.x_labeled.rows();
    if batch.labels.len() != n {
        return Err(Error::Data(format!("{} labels for {n} labelled rows", batch.labels.len())));
    }
    if let Some(bad) = batch.labels.iter().find(|&&y| y >= k) {
        return Err(Error::Data(format!("label {bad} out of range for {k} classes")));
    }
    let bound = Bound::new(g, disc, true);
    let main = semi_main_options(cfg);

    let mut onehot = alloc::vec![0.0; n * outputs];
    for (i, &y) in batch.labels.iter().enumerate() {
        onehot[i * outputs + y] = 1.0;
    }
    let onehot = g.constant(Tensor::matrix(n, outputs, onehot)?);
    let xl = g.constant(batch.x_labeled.clone());
    let pl = bound.forward(g, xl, main, noise_for(disc, main, &mut noise.main))?.output;
    let picked = g.mul(pl, onehot)?;
    let py = g.sum_axis(picked, 1, true)?;
    let supervised = neg_mean_log(g, py)?;
    let mut total = supervised;

    let xu = batch.x_unlabeled.map(|x| g.constant(x.clone()));
    let mut unsup_real = None;
    let mut unsup_fake = None;
    if cfg.enable_gan {
        if let Some(xu) = xu {
            let pu = bound.forward(g, xu, main, noise_for(disc, main, &mut noise.main))?.output;
            let pgen = g.slice(pu, 1, k, outputs)?;
            let neg = g.neg(pgen)?;
            let one_minus = g.add_scalar(neg, 1.0)?;
            let term = neg_mean_log(g, one_minus)?;
            total = g.add(total, term)?;
            unsup_real = Some(term);
        }
        if let (Some(z), Some(gen)) = (batch.z, generator) {
            let gen_opts = ForwardOptions::TRAIN;
            let fake = gen.predict(z, gen_opts, noise_for(gen, gen_opts, &mut noise.generator))?.output;
            let xf = g.constant(fake);
            let pf = bound.forward(g, xf, main, noise_for(disc, main, &mut noise.main))?.output;
            let pgen = g.slice(pf, 1, k, outputs)?;
            let term = neg_mean_log(g, pgen)?;
            total = g.add(total, term)?;
            unsup_fake = Some(term);
        }
    }

    let ct = if cfg.enable_ct && cfg.semi_lambda > 0.0 {
        let target = xu.unwrap_or(xl);
        let opts = ForwardOptions {
            dropout: true,
            noise: true,
            batch_stats: true,
        };
        let ct = consistency_term(
            g,
            &bound,
            target,
            opts,
            &mut noise.ct_first,
            &mut noise.ct_second,
            cfg.m_prime,
            cfg.feature_weight(),
            cfg.semi_ct_on_logits,
        )?;
        let w = g.scale(ct, cfg.semi_lambda)?;
        total = g.add(total, w)?;
        Some(ct)
    } else {
        None
    };

    Ok(SemiLoss {
        total,
        supervised,
        unsup_real,
        unsup_fake,
        ct,
        params: bound.params,
    })
}

/// `|mean D_(G(z)) - mean D_(x)|^2` over second-to-last features, with the
/// discriminator frozen and the generator trainable.
pub fn feature_matching_loss(
    g: &mut Graph,
    disc: &ParamStore,
    generator: &ParamStore,
    x_real: &Tensor,
    z: &Tensor,
    disc_options: ForwardOptions,
    noise: &mut SemiNoise,
) -> Result<GeneratorLoss> {
    let real = disc
        .predict(x_real, disc_options, noise_for(disc, disc_options, &mut noise.main))?
        .features;
    let gen = Bound::new(g, generator, true);
    let dis = Bound::new(g, disc, false);
    let zv = g.constant(z.clone());
    let gen_opts = ForwardOptions::TRAIN;
    let fake = gen.forward(g, zv, gen_opts, noise_for(generator, gen_opts, &mut noise.generator))?;
    let d = dis.forward(g, fake.output, disc_options, noise_for(disc, disc_options, &mut noise.main))?;
    let rf = g.constant(real);
    let mf = g.mean_axis(d.second_to_last, 0, false)?;
    let mr = g.mean_axis(rf, 0, false)?;
    let diff = g.sub(mf, mr)?;
    let sq = g.square(diff)?;
    let loss = g.sum(sq)?;
    Ok(GeneratorLoss {
        loss,
        params: gen.params,
        batch_stats: fake.batch_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{build_network, NetworkSpec, Param, ParamKind};

    fn linear_critic(w: &[f64]) -> ParamStore {
        let spec = NetworkSpec::new(w.len(), alloc::vec![LayerSpec::Dense { units: 1 }]);
        ParamStore::from_parts(
            spec,
            alloc::vec![
                Param {
                    layer: 0,
                    kind: ParamKind::Weight,
                    value: Tensor::matrix(w.len(), 1, w.to_vec()).unwrap(),
                },
                Param {
                    layer: 0,
                    kind: ParamKind::Bias,
                    value: Tensor::from_vec(alloc::vec![0.3]),
                },
            ],
            alloc::vec![],
            None,
        )
        .unwrap()
    }

    #[test]
    fn core_arithmetic() {
        let mut g = Graph::new();
        let f = g.constant(Tensor::from_vec(alloc::vec![1.0, 1.0]));
        let r = g.constant(Tensor::from_vec(alloc::vec![3.0, 5.0]));
        let v = wasserstein_critic_core(&mut g, f, r).unwrap();
        assert_eq!(g.scalar(v).unwrap(), -3.0);
        let short = g.constant(Tensor::from_vec(alloc::vec![1.0]));
        assert!(wasserstein_critic_core(&mut g, short, r).is_err());
    }

    #[test]
    fn interpolation_endpoints() {
        let x = Tensor::matrix(2, 2, alloc::vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let f = Tensor::matrix(2, 2, alloc::vec![-1.0, 0.5, 0.1, 9.0]).unwrap();
        assert_eq!(interpolate_with(&x, &f, &[1.0, 1.0]).unwrap(), x);
        assert_eq!(interpolate_with(&x, &f, &[0.0, 0.0]).unwrap(), f);
        let mut rng = RngStream::new(3, streams::EPSILON);
        assert_eq!(interpolate(&x, &x, &mut rng).unwrap(), x);
        let mixed = interpolate_with(&x, &f, &[1.0, 0.0]).unwrap();
        assert_eq!(mixed.data(), &[1.0, 2.0, 0.1, 9.0]);
    }

    #[test]
    fn penalty_of_linear_critics() {
        let x = Tensor::matrix(3, 2, alloc::vec![0.1, 0.2, -1.0, 4.0, 2.0, 2.0]).unwrap();
        let unit = linear_critic(&[0.6, 0.8]);
        let mut g = Graph::new();
        let b = Bound::new(&mut g, &unit, true);
        let gp = gradient_penalty(&mut g, &b, &x, ForwardOptions::EVAL, None).unwrap();
        assert!(g.scalar(gp).unwrap().abs() < 1e-10);

        let two = linear_critic(&[2.0]);
        let x1 = Tensor::matrix(2, 1, alloc::vec![0.5, -3.0]).unwrap();
        let mut g = Graph::new();
        let b = Bound::new(&mut g, &two, true);
        let gp = gradient_penalty(&mut g, &b, &x1, ForwardOptions::EVAL, None).unwrap();
        assert!((g.scalar(gp).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ct_without_stochastic_layers_is_an_error() {
        let c = linear_critic(&[1.0]);
        let mut g = Graph::new();
        let b = Bound::new(&mut g, &c, true);
        let x = g.constant(Tensor::matrix(2, 1, alloc::vec![0.0, 1.0]).unwrap());
        let mut n = NoiseSources::new(0);
        let mut m = n.substream(1);
        let err = consistency_term(&mut g, &b, x, ForwardOptions::TRAIN, &mut n, &mut m, 0.0, 0.1, false).unwrap_err();
        assert_eq!(alloc::string::ToString::to_string(&err), "CT term is identically zero: critic has no dropout");
    }

    #[test]
    fn ct_zero_for_identical_passes_and_infinite_margin() {
        let spec = NetworkSpec::toy_critic(2, 8, 2, 0.5);
        let critic = build_network(&spec, &mut RngStream::new(1, streams::INIT)).unwrap();
        let xt = Tensor::matrix(4, 2, alloc::vec![0.1, 0.2, 0.3, -0.4, 1.0, 2.0, -1.0, 0.5]).unwrap();
        let mut g = Graph::new();
        let b = Bound::new(&mut g, &critic, true);
        let x = g.constant(xt);
        let mut n1 = NoiseSources::new(5);
        let mut n2 = n1.clone();
        let ct = consistency_term(&mut g, &b, x, ForwardOptions::TRAIN, &mut n1, &mut n2, 0.0, 0.1, false).unwrap();
        assert_eq!(g.scalar(ct).unwrap(), 0.0);
        let mut n2 = n1.substream(9);
        let ct = consistency_term(&mut g, &b, x, ForwardOptions::TRAIN, &mut n1, &mut n2, f64::INFINITY, 0.1, false)
            .unwrap();
        assert_eq!(g.scalar(ct).unwrap(), 0.0);
    }

    #[test]
    fn generator_loss_of_constant_critic() {
        let critic = linear_critic(&[0.0, 0.0]);
        let gspec = NetworkSpec::toy_generator(3, 4, 1, 2);
        let gen = build_network(&gspec, &mut RngStream::new(2, streams::INIT)).unwrap();
        let z = Tensor::matrix(2, 3, alloc::vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let mut g = Graph::new();
        let l = generator_loss_wgan(&mut g, &critic, &gen, &z, &mut CriticNoise::new(0), &TrainConfig::default())
            .unwrap();
        assert!((g.scalar(l.loss).unwrap() + 0.3).abs() < 1e-15);
        let grads = g.grad(l.loss, &l.params.vars).unwrap();
        for v in grads {
            assert!(g.value(v).unwrap().data().iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn uniform_softmax_supervised_term() {
        // Zero weights give a uniform 11-way softmax.
        let spec = NetworkSpec::new(
            3,
            alloc::vec![LayerSpec::Dense { units: 11 }, LayerSpec::Softmax],
        );
        let mut disc = build_network(&spec, &mut RngStream::new(0, streams::INIT)).unwrap();
        for p in disc.params_mut() {
            p.value = p.value.map(|_| 0.0);
        }
        let x = Tensor::matrix(2, 3, alloc::vec![1.0; 6]).unwrap();
        let cfg = TrainConfig {
            semi_lambda: 0.0,
            ..TrainConfig::semi_defaults()
        };
        let batch = SemiBatch {
            x_labeled: &x,
            labels: &[0, 9],
            x_unlabeled: None,
            z: None,
        };
        let mut g = Graph::new();
        let l = semi_discriminator_loss(&mut g, &disc, None, &batch, &mut SemiNoise::new(0), &cfg).unwrap();
        assert!((g.scalar(l.supervised).unwrap() - libm::log(11.0)).abs() < 1e-12);
        assert_eq!(l.total, l.supervised);
        let bad = SemiBatch { labels: &[0, 10], ..batch };
        assert!(semi_discriminator_loss(&mut g, &disc, None, &bad, &mut SemiNoise::new(0), &cfg).is_err());
    }
}
