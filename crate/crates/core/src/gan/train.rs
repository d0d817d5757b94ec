use alloc::format;
use alloc::vec::Vec;

use super::config::TrainConfig;
use super::losses::{ct_critic_loss, generator_loss_wgan, CriticNoise, LossBreakdown};
use crate::data::{BatchSampler, Dataset};
use crate::diagnostics::{critic_cost_eval, grad_norm_probe, mode_coverage, pairwise_lipschitz_probe, MetricRecord};
use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::nn::{build_network, ForwardOptions, NetworkSpec, ParamStore};
use crate::rng::{streams, RngState, RngStream};
use crate::tensor::Tensor;

/// Distribution of the generator input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseDist {
    /// `U[-1, 1)` per coordinate.
    Uniform,
    /// `N(0, 1)` per coordinate.
    Normal,
}

impl NoiseDist {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(Self::Uniform),
            "normal" => Ok(Self::Normal),
            other => Err(Error::Config(format!("unknown noise distribution `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Normal => "normal",
        }
    }

    pub fn sample(self, rng: &mut RngStream, rows: usize, dim: usize) -> Result<Tensor> {
        let data = match self {
            Self::Uniform => rng.uniform_vec(rows * dim, -1.0, 1.0),
            Self::Normal => rng.normal_vec(rows * dim, 1.0),
        };
        Tensor::matrix(rows, dim, data)
    }
}

/// Toy mode-coverage measurement attached to metric records.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSpec {
    pub centers: Vec<[f64; 2]>,
    pub radius: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GanArch {
    pub critic: NetworkSpec,
    pub generator: NetworkSpec,
    pub z_dist: NoiseDist,
    pub coverage: Option<CoverageSpec>,
}

/// Trainer state handed to checkpoint observers.
pub struct TrainerSnapshot<'a> {
    pub iteration: u64,
    pub networks: [(&'static str, &'a ParamStore); 2],
    pub streams: Vec<(&'static str, RngState)>,
}

/// Receives metric records and checkpoints while a trainer runs.
pub trait TrainObserver {
    fn on_metric(&mut self, _record: &MetricRecord) -> Result<()> {
        Ok(())
    }

    fn on_checkpoint(&mut self, _snapshot: &TrainerSnapshot<'_>) -> Result<()> {
        Ok(())
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl TrainObserver for NoObserver {}

#[derive(Clone, Debug)]
pub struct GanRun {
    pub critic: ParamStore,
    pub generator: ParamStore,
    pub metrics: Vec<MetricRecord>,
}

pub(crate) fn values_of(g: &Graph, vars: &[Var]) -> Result<Vec<Tensor>> {
    vars.iter().map(|v| g.value(*v).cloned()).collect()
}

/// Runs the nested Wasserstein loop: per generator iteration, `critic_iters`
/// critic updates on fresh minibatches followed by one generator update.
///
/// Random streams (all derived from `cfg.seed`): critic and generator
/// initialisation use substreams 0 and 1 of `INIT`; minibatch order uses
/// `DATA`; generator inputs use `NOISE_Z`; interpolation coefficients and
/// every mask / noise draw of the loss come from [`CriticNoise::new`];
/// metric evaluation uses `EVAL` only, so the training trajectory does not
/// depend on the metric cadence.
pub fn train_ctgan(
    cfg: &TrainConfig,
    data: &Dataset,
    held_out: Option<&Dataset>,
    arch: &GanArch,
    observer: &mut dyn TrainObserver,
) -> Result<GanRun> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if arch.critic.input_dim != data.dim() || arch.generator.output_dim()? != data.dim() {
        return Err(Error::Config(format!(
            "data width {} does not match critic input {} / generator output {}",
            data.dim(),
            arch.critic.input_dim,
            arch.generator.output_dim()?
        )));
    }
    if arch.critic.output_dim()? != 1 {
        return Err(Error::Config("critic must have a single output".into()));
    }
    let init = RngStream::new(cfg.seed, streams::INIT);
    let mut critic = build_network(&arch.critic, &mut init.substream(0))?;
    let mut generator = build_network(&arch.generator, &mut init.substream(1))?;
    let mut sampler = BatchSampler::new(data.len(), RngStream::new(cfg.seed, streams::DATA));
    let mut z_rng = RngStream::new(cfg.seed, streams::NOISE_Z);
    let mut noise = CriticNoise::new(cfg.seed);
    let mut eval = RngStream::new(cfg.seed, streams::EVAL);
    let adam = cfg.adam();
    let z_dim = arch.generator.input_dim;
    let mut metrics = Vec::new();

    for it in 1..=cfg.total_iters as u64 {
        let mut last: Option<LossBreakdown> = None;
        for _ in 0..cfg.critic_iters {
            let idx = sampler.next_batch(cfg.batch);
            let x = data.batch(&idx)?;
            let z = arch.z_dist.sample(&mut z_rng, cfg.batch, z_dim)?;
            let mut g = Graph::new();
            let loss = ct_critic_loss(&mut g, &critic, &generator, &x, &z, &mut noise, cfg)?;
            let parts = loss.breakdown(&g)?;
            if !parts.total.is_finite() {
                return Err(Error::Diverged {
                    iteration: it,
                    detail: format!("critic loss {parts}"),
                });
            }
            let grads = g.grad(loss.total, &loss.params.vars)?;
            critic.adam_step(&values_of(&g, &grads)?, &adam)?;
            last = Some(parts);
        }

        let z = arch.z_dist.sample(&mut z_rng, cfg.batch, z_dim)?;
        let mut g = Graph::new();
        let gl = generator_loss_wgan(&mut g, &critic, &generator, &z, &mut noise, cfg)?;
        let gen_loss = g.scalar(gl.loss)?;
        if !gen_loss.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                detail: format!("generator loss {gen_loss}"),
            });
        }
        let grads = g.grad(gl.loss, &gl.params.vars)?;
        generator.adam_step(&values_of(&g, &grads)?, &adam)?;
        generator.commit_batch_stats(&gl.batch_stats);

        if cfg.metric_every > 0 && it % cfg.metric_every as u64 == 0 {
            let mut rec = MetricRecord::new(it);
            rec.critic_cost_train = Some(critic_cost_eval(&critic, &generator, data, arch.z_dist, cfg, &mut eval)?);
            if let Some(test) = held_out {
                rec.critic_cost_test = Some(critic_cost_eval(&critic, &generator, test, arch.z_dist, cfg, &mut eval)?);
            }
            let parts = last.expect("critic_iters >= 1");
            rec.gp_value = parts.gp;
            rec.ct_value = parts.ct;
            rec.generator_loss = Some(gen_loss);
            let probe_set = held_out.unwrap_or(data);
            if probe_set.len() >= cfg.probe_size {
                let mut idx: Vec<usize> = eval.permutation(probe_set.len());
                idx.truncate(cfg.probe_size);
                let px = probe_set.batch(&idx)?;
                rec.grad_norm_max = Some(grad_norm_probe(&critic, &px)?);
                rec.lipschitz_ratio_max = pairwise_lipschitz_probe(&critic, &px).ok().map(|p| p.max_ratio);
            }
            if let Some(cov) = &arch.coverage {
                let samples = generate(&generator, arch.z_dist, cov.samples, &mut eval)?;
                let c = mode_coverage(&samples, &cov.centers, cov.radius)?;
                rec.mode_coverage = Some(c.modes_hit as f64);
                rec.high_quality_fraction = Some(c.high_quality_fraction);
            }
            observer.on_metric(&rec)?;
            metrics.push(rec);
        }
        if cfg.checkpoint_every > 0 && it % cfg.checkpoint_every as u64 == 0 {
            observer.on_checkpoint(&TrainerSnapshot {
                iteration: it,
                networks: [("critic", &critic), ("generator", &generator)],
                streams: alloc::vec![
                    ("data", sampler.rng_state()),
                    ("noise_z", z_rng.state()),
                    ("epsilon", noise.eps.state()),
                    ("eval", eval.state()),
                ],
            })?;
        }
    }
    Ok(GanRun {
        critic,
        generator,
        metrics,
    })
}

/// Draws `n` generator samples in evaluation mode.
pub fn generate(generator: &ParamStore, z_dist: NoiseDist, n: usize, rng: &mut RngStream) -> Result<Tensor> {
    let z = z_dist.sample(rng, n, generator.spec().input_dim)?;
    Ok(generator.predict(&z, ForwardOptions::EVAL, None)?.output)
}
