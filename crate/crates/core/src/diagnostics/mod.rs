//! Measurement probes: input-gradient norms, pairwise Lipschitz ratios,
//! weight histograms, toy mode coverage and held-out critic cost.

use alloc::format;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gan::{ct_critic_loss, CriticNoise, NoiseDist, TrainConfig};
use crate::graph::Graph;
use crate::nn::{forward, ForwardOptions, ParamKind, ParamStore};
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// Metric names in export column order.
pub const METRIC_COLUMNS: [&str; 11] = [
    "critic_cost_train",
    "critic_cost_test",
    "gp_value",
    "ct_value",
    "grad_norm_max",
    "lipschitz_ratio_max",
    "generator_loss",
    "test_error",
    "mode_coverage",
    "high_quality_fraction",
    "wall_clock_seconds",
];

/// One row of training telemetry. Metrics that were not measured are
/// `None` and stay distinguishable from zero in every export.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricRecord {
    pub iteration: u64,
    pub critic_cost_train: Option<f64>,
    pub critic_cost_test: Option<f64>,
    pub gp_value: Option<f64>,
    pub ct_value: Option<f64>,
    pub grad_norm_max: Option<f64>,
    pub lipschitz_ratio_max: Option<f64>,
    pub generator_loss: Option<f64>,
    pub test_error: Option<f64>,
    pub mode_coverage: Option<f64>,
    pub high_quality_fraction: Option<f64>,
    pub wall_clock_seconds: Option<f64>,
}

impl MetricRecord {
    pub fn new(iteration: u64) -> Self {
        Self {
            iteration,
            ..Self::default()
        }
    }

    /// Values in [`METRIC_COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 11] {
        [
            self.critic_cost_train,
            self.critic_cost_test,
            self.gp_value,
            self.ct_value,
            self.grad_norm_max,
            self.lipschitz_ratio_max,
            self.generator_loss,
            self.test_error,
            self.mode_coverage,
            self.high_quality_fraction,
            self.wall_clock_seconds,
        ]
    }

    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        METRIC_COLUMNS.iter().position(|c| *c == name).map(|i| self.values()[i])
    }

    pub fn set(&mut self, name: &str, value: Option<f64>) -> Result<()> {
        let slot = match name {
            "critic_cost_train" => &mut self.critic_cost_train,
            "critic_cost_test" => &mut self.critic_cost_test,
            "gp_value" => &mut self.gp_value,
            "ct_value" => &mut self.ct_value,
            "grad_norm_max" => &mut self.grad_norm_max,
            "lipschitz_ratio_max" => &mut self.lipschitz_ratio_max,
            "generator_loss" => &mut self.generator_loss,
            "test_error" => &mut self.test_error,
            "mode_coverage" => &mut self.mode_coverage,
            "high_quality_fraction" => &mut self.high_quality_fraction,
            "wall_clock_seconds" => &mut self.wall_clock_seconds,
            other => return Err(Error::Data(format!("unknown metric `{other}`"))),
        };
        *slot = value;
        Ok(())
    }
}

/// Per-row input-gradient norms of a critic in evaluation mode.
pub fn grad_norms(critic: &ParamStore, x: &Tensor) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let bound = critic.bind(&mut g, false);
    let xv = g.leaf("x", x.clone(), false);
    let out = forward(&mut g, critic, &bound, xv, ForwardOptions::EVAL, None)?;
    let total = g.sum(out.output)?;
    let grad = g.grad(total, &[xv])?[0];
    let gt = g.value(grad)?;
    Ok((0..gt.rows())
        .map(|r| libm::sqrt(gt.row(r).iter().map(|v| v * v).sum::<f64>()))
        .collect())
}

/// `max_x |grad_x D(x)|` over the rows of `x`.
pub fn grad_norm_probe(critic: &ParamStore, x: &Tensor) -> Result<f64> {
    Ok(grad_norms(critic, x)?.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairwiseReport {
    pub max_ratio: f64,
    pub pairs: usize,
    /// Cross pairs skipped because the two rows coincide.
    pub skipped: usize,
}

/// Splits `x` into halves and returns the largest
/// `|D(a) - D(b)| / |a - b|` over all cross pairs.
pub fn pairwise_lipschitz_probe(critic: &ParamStore, x: &Tensor) -> Result<PairwiseReport> {
    if x.ndim() != 2 || x.rows() < 2 || !x.rows().is_multiple_of(2) {
        return Err(Error::Probe(format!(
            "pairwise probe needs an even number (>= 2) of rows, got shape {:?}",
            x.shape()
        )));
    }
    let d = critic.predict(x, ForwardOptions::EVAL, None)?.output;
    if d.row_len() != 1 {
        return Err(Error::Probe(format!("critic output width {} is not scalar", d.row_len())));
    }
    let m = x.rows() / 2;
    let mut best: f64 = 0.0;
    let mut skipped = 0;
    for i in 0..m {
        for j in m..2 * m {
            let dist = libm::sqrt(x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
            if dist == 0.0 {
                skipped += 1;
                continue;
            }
            best = best.max(libm::fabs(d.data()[i] - d.data()[j]) / dist);
        }
    }
    if skipped == m * m {
        return Err(Error::Probe("pairwise probe: every cross pair is identical".into()));
    }
    Ok(PairwiseReport {
        max_ratio: best,
        pairs: m * m - skipped,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub min: f64,
    pub max: f64,
    /// Range of the bias vectors, reported separately.
    pub bias_range: Option<(f64, f64)>,
}

/// Histogram over every weight matrix (dense weights and weight-norm
/// directions) of `store`.
pub fn weight_histogram(store: &ParamStore, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Probe("histogram needs at least one bin".into()));
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for p in store.params() {
        match p.kind {
            ParamKind::Weight | ParamKind::Direction => weights.extend_from_slice(p.value.data()),
            ParamKind::Bias => biases.extend_from_slice(p.value.data()),
            _ => {}
        }
    }
    if weights.is_empty() {
        return Err(Error::Probe("parameter store has no weights".into()));
    }
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if min == max { (min - 0.5, max + 0.5) } else { (min, max) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
    let mut counts = alloc::vec![0usize; bins];
    for w in &weights {
        let b = libm::floor((w - lo) / width) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let bias_range = (!biases.is_empty()).then(|| {
        (
            biases.iter().copied().fold(f64::INFINITY, f64::min),
            biases.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    });
    Ok(Histogram {
        edges,
        counts,
        min,
        max,
        bias_range,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    pub modes_hit: usize,
    pub high_quality_fraction: f64,
}

/// Mode coverage with the default hit threshold of `n / (10 k)` samples.
pub fn mode_coverage(samples: &Tensor, centers: &[[f64; 2]], capture_radius: f64) -> Result<Coverage> {
    mode_coverage_with(samples, centers, capture_radius, 0.1)
}

/// A mode is hit when at least `hit_fraction * n / k` samples lie within
/// `capture_radius` of it; samples are assigned to their nearest center.
pub fn mode_coverage_with(
    samples: &Tensor,
    centers: &[[f64; 2]],
    capture_radius: f64,
    hit_fraction: f64,
) -> Result<Coverage> {
    if centers.is_empty() {
        return Err(Error::Probe("mode coverage needs at least one center".into()));
    }
    if samples.ndim() != 2 || samples.row_len() != 2 {
        return Err(Error::Probe(format!("samples must be [n, 2], got {:?}", samples.shape())));
    }
    let n = samples.rows();
    let mut hits = alloc::vec![0usize; centers.len()];
    let mut captured = 0usize;
    for r in 0..n {
        let p = samples.row(r);
        let (best, dist) = centers
            .iter()
            .enumerate()
            .map(|(k, c)| (k, libm::hypot(p[0] - c[0], p[1] - c[1])))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if dist <= capture_radius {
            hits[best] += 1;
            captured += 1;
        }
    }
    let threshold = hit_fraction * n as f64 / centers.len() as f64;
    Ok(Coverage {
        modes_hit: hits.iter().filter(|&&h| h > 0 && h as f64 >= threshold).count(),
        high_quality_fraction: captured as f64 / n as f64,
    })
}

/// Negative critic objective on (a sample of up to `cfg.eval_size` rows of)
/// `split`, with every random draw taken from `eval`.
pub fn critic_cost_eval(
    critic: &ParamStore,
    generator: &ParamStore,
    split: &Dataset,
    z_dist: NoiseDist,
    cfg: &TrainConfig,
    eval: &mut RngStream,
) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::Data("critic cost on an empty split".into()));
    }
    let rows = cfg.eval_size.min(split.len());
    let mut idx: Vec<usize> = (0..split.len()).collect();
    for i in 0..rows {
        let j = i + eval.below(split.len() - i);
        idx.swap(i, j);
    }
    idx.truncate(rows);
    let x = split.batch(&idx)?;
    let z = z_dist.sample(eval, rows, generator.spec().input_dim)?;
    let mut noise = CriticNoise::new(eval.next_u64());
    noise.eps = eval.substream(1);
    let mut g = Graph::new();
    let loss = ct_critic_loss(&mut g, critic, generator, &x, &z, &mut noise, cfg)?;
    Ok(-g.scalar(loss.total)?)
}
