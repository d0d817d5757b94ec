use alloc::format;
use alloc::vec::Vec;

use super::config::TrainConfig;
use super::losses::{feature_matching_loss, semi_discriminator_loss, semi_main_options, SemiBatch, SemiNoise};
use super::train::{values_of, NoiseDist, TrainObserver, TrainerSnapshot};
use crate::data::{BatchSampler, Dataset};
use crate::diagnostics::MetricRecord;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::{build_network, ForwardOptions, NetworkSpec, ParamStore};
use crate::rng::{streams, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct SemiArch {
    /// `(K+1)`-way softmax classifier.
    pub discriminator: NetworkSpec,
    pub generator: NetworkSpec,
    pub z_dist: NoiseDist,
}

#[derive(Clone, Debug)]
pub struct SemiRun {
    pub discriminator: ParamStore,
    pub generator: ParamStore,
    pub metrics: Vec<MetricRecord>,
    /// Test error after the last epoch, if a test set was given.
    pub test_error: Option<f64>,
}

/// Fraction of `test` misclassified, predicting the argmax over the first
/// `K` outputs in evaluation mode.
pub fn classification_error(disc: &ParamStore, test: &Dataset) -> Result<f64> {
    let labels = test.labels().ok_or_else(|| Error::Data("test set has no labels".into()))?;
    let k = disc.spec().output_dim()? - 1;
    let mut wrong = 0usize;
    let chunk = 500;
    let mut start = 0;
    while start < test.len() {
        let idx: Vec<usize> = (start..(start + chunk).min(test.len())).collect();
        let p = disc.predict(&test.batch(&idx)?, ForwardOptions::EVAL, None)?.output;
        for (r, &i) in idx.iter().enumerate() {
            let row = &p.row(r)[..k];
            let best = (0..k).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            if best != labels[i] {
                wrong += 1;
            }
        }
        start += chunk;
    }
    Ok(wrong as f64 / test.len() as f64)
}

/// Semi-supervised trainer. Each epoch makes `unlabeled.len() / batch`
/// steps; a step is one discriminator update on equal-size labelled,
/// unlabelled and generated batches followed by one feature-matching
/// generator update (skipped when `enable_gan` is off). One metric record
/// per epoch carries the test error.
///
/// Random streams: initialisation uses `INIT` substreams 0 / 1; labelled
/// and unlabelled minibatch orders use `DATA` substreams 0 / 1; generator
/// inputs use `NOISE_Z`; masks and noise come from [`SemiNoise::new`].
pub fn train_semisup(
    cfg: &TrainConfig,
    labeled: &Dataset,
    unlabeled: &Dataset,
    test: Option<&Dataset>,
    arch: &SemiArch,
    observer: &mut dyn TrainObserver,
) -> Result<SemiRun> {
    cfg.validate()?;
    if labeled.is_empty() || unlabeled.is_empty() {
        return Err(Error::Data("semi-supervised training needs labelled and unlabelled examples".into()));
    }
    if labeled.labels().is_none() {
        return Err(Error::Data("labelled set carries no labels".into()));
    }
    let init = RngStream::new(cfg.seed, streams::INIT);
    let mut disc = build_network(&arch.discriminator, &mut init.substream(0))?;
    let mut generator = build_network(&arch.generator, &mut init.substream(1))?;
    let data = RngStream::new(cfg.seed, streams::DATA);
    let mut lab = BatchSampler::new(labeled.len(), data.substream(0));
    let mut unl = BatchSampler::new(unlabeled.len(), data.substream(1));
    let mut z_rng = RngStream::new(cfg.seed, streams::NOISE_Z);
    let mut noise = SemiNoise::new(cfg.seed);
    let adam = cfg.adam();
    let z_dim = arch.generator.input_dim;
    let steps = (unlabeled.len() / cfg.batch).max(1);
    let mut metrics = Vec::new();
    let mut test_error = None;

    for epoch in 1..=cfg.epochs as u64 {
        let mut last_ct = None;
        let mut last_gen = None;
        for _ in 0..steps {
            let li = lab.next_batch(cfg.batch);
            let xl = labeled.batch(&li)?;
            let yl = labeled.batch_labels(&li)?;
            let xu = unlabeled.batch(&unl.next_batch(cfg.batch))?;
            let z = cfg
                .enable_gan
                .then(|| arch.z_dist.sample(&mut z_rng, cfg.batch, z_dim))
                .transpose()?;
            let batch = SemiBatch {
                x_labeled: &xl,
                labels: &yl,
                x_unlabeled: Some(&xu),
                z: z.as_ref(),
            };
            let mut g = Graph::new();
            let loss = semi_discriminator_loss(&mut g, &disc, Some(&generator), &batch, &mut noise, cfg)?;
            let total = g.scalar(loss.total)?;
            if !total.is_finite() {
                return Err(Error::Diverged {
                    iteration: epoch,
                    detail: format!("discriminator loss {total}"),
                });
            }
            last_ct = loss.ct.map(|v| g.scalar(v)).transpose()?;
            let grads = g.grad(loss.total, &loss.params.vars)?;
            disc.adam_step(&values_of(&g, &grads)?, &adam)?;

            if cfg.enable_gan {
                let z = arch.z_dist.sample(&mut z_rng, cfg.batch, z_dim)?;
                let mut g = Graph::new();
                let fm = feature_matching_loss(&mut g, &disc, &generator, &xu, &z, semi_main_options(cfg), &mut noise)?;
                let v = g.scalar(fm.loss)?;
                if !v.is_finite() {
                    return Err(Error::Diverged {
                        iteration: epoch,
                        detail: format!("feature matching loss {v}"),
                    });
                }
                let grads = g.grad(fm.loss, &fm.params.vars)?;
                generator.adam_step(&values_of(&g, &grads)?, &adam)?;
                generator.commit_batch_stats(&fm.batch_stats);
                last_gen = Some(v);
            }
        }
        let mut rec = MetricRecord::new(epoch);
        rec.ct_value = last_ct;
        rec.generator_loss = last_gen;
        if let Some(t) = test {
            let e = classification_error(&disc, t)?;
            rec.test_error = Some(e);
            test_error = Some(e);
        }
        if cfg.metric_every > 0 && epoch % cfg.metric_every as u64 == 0 {
            observer.on_metric(&rec)?;
            metrics.push(rec);
        }
        if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every as u64 == 0 {
            observer.on_checkpoint(&TrainerSnapshot {
                iteration: epoch,
                networks: [("discriminator", &disc), ("generator", &generator)],
                streams: alloc::vec![("noise_z", z_rng.state())],
            })?;
        }
    }
    Ok(SemiRun {
        discriminator: disc,
        generator,
        metrics,
        test_error,
    })
}
