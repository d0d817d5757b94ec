//! Experiment configuration: named presets, TOML files and command-line
//! overrides, resolved in that order of increasing precedence.

use serde::{Deserialize, Serialize};
use toml::Value;

use ctgan_core::gan::TrainConfig;

use crate::error::{CliError, CliResult};

/// Environment variable overriding the output directory of file and preset.
pub const OUT_DIR_ENV: &str = "CTGAN_OUT_DIR";

pub const VERSION: &str = concat!("ctgan ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Wasserstein critic / generator training.
    Gan,
    /// Semi-supervised K+1 classifier training.
    Semi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub lambda1: f64,
    pub lambda2: f64,
    pub m_prime: f64,
    pub ct_feature_weight: f64,
    pub critic_iters: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch: usize,
    pub total_iters: usize,
    pub semi_lambda: f64,
    pub epochs: usize,
    pub enable_ct: bool,
    pub enable_gp: bool,
    pub enable_gan: bool,
    pub enable_ct_feature_term: bool,
    pub enable_critic_dropout: bool,
    pub dropout_in_main_passes: bool,
    pub semi_ct_on_logits: bool,
    pub probe_size: usize,
    pub eval_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// `toy` or `mnist`.
    pub source: String,
    /// Toy distribution name: `ring8`, `grid25` or `swissroll`.
    pub toy: String,
    pub toy_samples: usize,
    pub toy_held_out: usize,
    pub toy_noise: f64,
    /// Seed of dataset sampling and splitting (independent of the run seed).
    pub seed: u64,
    /// Directory holding the four IDX files.
    pub mnist_dir: String,
    /// Training images drawn for GAN runs, or the unlabelled pool of
    /// semi-supervised runs (0 = all).
    pub train_subset: usize,
    pub labels_per_class: usize,
    /// Test images used (0 = all).
    pub test_limit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSection {
    /// `toy` (MLP critic / generator), `mnist` (MLP critic, batch-norm
    /// generator) or `mnist-semi` (noisy weight-normalized classifier).
    pub kind: String,
    pub critic_width: usize,
    pub critic_depth: usize,
    pub critic_dropout: f64,
    pub gen_width: usize,
    pub gen_depth: usize,
    pub z_dim: usize,
    /// `uniform` or `normal`.
    pub z_dist: String,
    pub coverage_radius: f64,
    pub coverage_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Iterations (GAN) or epochs (semi) between metric records.
    pub metric_every: usize,
    /// Iterations (GAN) or epochs (semi) between checkpoints; 0 disables.
    pub checkpoint_every: usize,
    /// Generator samples dumped at the end of the run.
    pub sample_count: usize,
    /// Record elapsed seconds in metrics (makes exports non-reproducible).
    pub record_wall_clock: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    #[serde(default)]
    pub version: String,
    pub mode: Mode,
    pub run_id: String,
    pub seed: u64,
    pub out: String,
    pub train: TrainSection,
    pub data: DataSection,
    pub arch: ArchSection,
    pub output: OutputSection,
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 9] = [
    "ctgan-defaults",
    "gp-wgan",
    "gp-wgan-dropout",
    "wgan",
    "mnist-ctgan",
    "mnist-gp-wgan",
    "semi-ctgan",
    "semi-no-ct",
    "semi-no-gan",
];

fn train_section(c: &TrainConfig) -> TrainSection {
    TrainSection {
        lambda1: c.lambda1,
        lambda2: c.lambda2,
        m_prime: c.m_prime,
        ct_feature_weight: c.ct_feature_weight,
        critic_iters: c.critic_iters,
        lr: c.lr,
        beta1: c.beta1,
        beta2: c.beta2,
        adam_eps: c.adam_eps,
        batch: c.batch,
        total_iters: c.total_iters,
        semi_lambda: c.semi_lambda,
        epochs: c.epochs,
        enable_ct: c.enable_ct,
        enable_gp: c.enable_gp,
        enable_gan: c.enable_gan,
        enable_ct_feature_term: c.enable_ct_feature_term,
        enable_critic_dropout: c.enable_critic_dropout,
        dropout_in_main_passes: c.dropout_in_main_passes,
        semi_ct_on_logits: c.semi_ct_on_logits,
        probe_size: c.probe_size,
        eval_size: c.eval_size,
    }
}

fn toy_base(name: &str) -> ExperimentConfig {
    let train = TrainConfig::default();
    ExperimentConfig {
        preset: name.to_string(),
        version: VERSION.to_string(),
        mode: Mode::Gan,
        run_id: String::new(),
        seed: 0,
        out: String::new(),
        train: train_section(&train),
        data: DataSection {
            source: "toy".into(),
            toy: "ring8".into(),
            toy_samples: 10_000,
            toy_held_out: 2_000,
            toy_noise: 0.05,
            seed: 0,
            mnist_dir: "data/mnist".into(),
            train_subset: 1000,
            labels_per_class: 10,
            test_limit: 0,
        },
        arch: ArchSection {
            kind: "toy".into(),
            critic_width: 128,
            critic_depth: 3,
            critic_dropout: 0.5,
            gen_width: 128,
            gen_depth: 3,
            z_dim: 2,
            z_dist: "normal".into(),
            coverage_radius: 0.15,
            coverage_samples: 2000,
        },
        output: OutputSection {
            metric_every: train.metric_every,
            checkpoint_every: 0,
            sample_count: 1000,
            record_wall_clock: false,
        },
    }
}

/// The configuration a preset stands for, before file and flag overrides.
pub fn preset(name: &str) -> CliResult<ExperimentConfig> {
    let mut c = toy_base(name);
    let no_ct = |c: &mut ExperimentConfig| c.train.enable_ct = false;
    let mnist_gan = |c: &mut ExperimentConfig| {
        c.data.source = "mnist".into();
        c.data.train_subset = 1000;
        c.arch.kind = "mnist".into();
        c.arch.z_dim = 128;
        c.arch.z_dist = "uniform".into();
        c.train.total_iters = 20_000;
        c.train.eval_size = 1000;
        c.output.metric_every = 100;
    };
    match name {
        "ctgan-defaults" => {}
        "gp-wgan" => {
            no_ct(&mut c);
            c.train.enable_critic_dropout = false;
        }
        "gp-wgan-dropout" => no_ct(&mut c),
        "wgan" => {
            no_ct(&mut c);
            c.train.enable_gp = false;
            c.train.enable_critic_dropout = false;
        }
        "mnist-ctgan" => mnist_gan(&mut c),
        "mnist-gp-wgan" => {
            mnist_gan(&mut c);
            no_ct(&mut c);
            c.train.enable_critic_dropout = false;
        }
        "semi-ctgan" | "semi-no-ct" | "semi-no-gan" => {
            let semi = TrainConfig::semi_defaults();
            c.mode = Mode::Semi;
            c.train = train_section(&semi);
            c.data.source = "mnist".into();
            c.data.train_subset = 0;
            c.arch.kind = "mnist-semi".into();
            c.arch.z_dim = 100;
            c.arch.z_dist = "uniform".into();
            c.output.metric_every = semi.metric_every;
            match name {
                "semi-no-ct" => no_ct(&mut c),
                "semi-no-gan" => c.train.enable_gan = false,
                _ => {}
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(c)
}

/// Command-line overrides; `None` / `false` leave the value alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub iters: Option<usize>,
    pub no_ct: bool,
    pub no_gp: bool,
    pub no_gan: bool,
    pub no_dropout: bool,
    pub no_ct_feature_term: bool,
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Resolves preset < file < environment < flags into a validated config.
pub fn resolve(file: Option<&str>, flags: &Overrides, env_out: Option<String>) -> CliResult<ExperimentConfig> {
    let file_table: Option<Value> = file
        .map(|text| text.parse::<toml::Table>().map(Value::Table))
        .transpose()
        .map_err(|e| CliError::Config(format!("config file: {e}")))?;
    let preset_name = flags
        .preset
        .clone()
        .or_else(|| {
            file_table
                .as_ref()
                .and_then(|t| t.get("preset"))
                .and_then(|v| v.as_str())
                .map(String::from)
        })
        .unwrap_or_else(|| "ctgan-defaults".to_string());
    let base = preset(&preset_name)?;
    let mut value = Value::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(t) = file_table {
        merge(&mut value, t);
    }
    let mut cfg: ExperimentConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("config: {}", e.message())))?;
    cfg.preset = preset_name;
    cfg.version = VERSION.to_string();
    if let Some(out) = env_out.filter(|s| !s.is_empty()) {
        cfg.out = out;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(n) = flags.iters {
        match cfg.mode {
            Mode::Gan => cfg.train.total_iters = n,
            Mode::Semi => cfg.train.epochs = n,
        }
    }
    if flags.no_ct {
        cfg.train.enable_ct = false;
    }
    if flags.no_gp {
        cfg.train.enable_gp = false;
    }
    if flags.no_gan {
        cfg.train.enable_gan = false;
    }
    if flags.no_dropout {
        cfg.train.enable_critic_dropout = false;
    }
    if flags.no_ct_feature_term {
        cfg.train.enable_ct_feature_term = false;
    }
    if cfg.run_id.is_empty() {
        cfg.run_id = format!("{}-s{}", cfg.preset, cfg.seed);
    }
    if cfg.out.is_empty() {
        cfg.out = format!("runs/{}", cfg.run_id);
    }
    cfg.train_config().validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            lambda1: t.lambda1,
            lambda2: t.lambda2,
            m_prime: t.m_prime,
            ct_feature_weight: t.ct_feature_weight,
            critic_iters: t.critic_iters,
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_eps: t.adam_eps,
            batch: t.batch,
            total_iters: t.total_iters,
            semi_lambda: t.semi_lambda,
            epochs: t.epochs,
            enable_ct: t.enable_ct,
            enable_gp: t.enable_gp,
            enable_gan: t.enable_gan,
            enable_ct_feature_term: t.enable_ct_feature_term,
            enable_critic_dropout: t.enable_critic_dropout,
            dropout_in_main_passes: t.dropout_in_main_passes,
            semi_ct_on_logits: t.semi_ct_on_logits,
            seed: self.seed,
            metric_every: self.output.metric_every,
            checkpoint_every: self.output.checkpoint_every,
            probe_size: t.probe_size,
            eval_size: t.eval_size,
        }
    }

    /// The archived form: a TOML document that resolves back to `self`.
    pub fn to_toml(&self) -> CliResult<String> {
        let body = toml::to_string(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(format!("# resolved by {VERSION}\n{body}"))
    }
}
