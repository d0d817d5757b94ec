//! Dataset files and the datasets / architectures an experiment config
//! selects.

use std::path::{Path, PathBuf};

use ctgan_core::data::{dataset_from_idx, label_split, subset, Dataset, ToyDistribution};
use ctgan_core::gan::{CoverageSpec, GanArch, NoiseDist, SemiArch};
use ctgan_core::nn::NetworkSpec;

use crate::config::{ExperimentConfig, Mode};
use crate::error::{CliError, CliResult};

pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn load_pair(dir: &Path, images: &str, labels: &str) -> CliResult<Dataset> {
    let (ip, lp) = (dir.join(images), dir.join(labels));
    dataset_from_idx(&read(&ip)?, Some(&read(&lp)?))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", ip.display())))
}

/// Loads the MNIST training and test sets from the four IDX files in `dir`.
pub fn load_mnist(dir: &Path) -> CliResult<(Dataset, Dataset)> {
    let train = load_pair(dir, MNIST_FILES[0], MNIST_FILES[1])?;
    let test = load_pair(dir, MNIST_FILES[2], MNIST_FILES[3])?;
    Ok((train, test))
}

/// Training data for one run.
pub enum Prepared {
    Gan {
        train: Dataset,
        held_out: Dataset,
        arch: GanArch,
    },
    Semi {
        labeled: Dataset,
        unlabeled: Dataset,
        test: Dataset,
        arch: SemiArch,
    },
}

fn limit(ds: Dataset, n: usize) -> CliResult<Dataset> {
    if n == 0 || n >= ds.len() {
        return Ok(ds);
    }
    Ok(ds.select(&(0..n).collect::<Vec<_>>())?)
}

fn mnist_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from(&cfg.data.mnist_dir)
}

fn z_dist(cfg: &ExperimentConfig) -> CliResult<NoiseDist> {
    NoiseDist::parse(&cfg.arch.z_dist).map_err(|e| CliError::Config(e.to_string()))
}

/// Critic architecture of a GAN run. Without critic dropout the dropout
/// layers are removed.
pub fn critic_spec(cfg: &ExperimentConfig, dim: usize) -> CliResult<NetworkSpec> {
    let a = &cfg.arch;
    let spec = match a.kind.as_str() {
        "toy" => NetworkSpec::toy_critic(dim, a.critic_width, a.critic_depth, a.critic_dropout),
        "mnist" => NetworkSpec::mnist_critic(a.critic_dropout),
        other => return Err(CliError::Config(format!("architecture `{other}` has no critic"))),
    };
    Ok(if cfg.train.enable_critic_dropout { spec } else { spec.without_dropout() })
}

pub fn prepare(cfg: &ExperimentConfig) -> CliResult<Prepared> {
    let d = &cfg.data;
    let a = &cfg.arch;
    let z = z_dist(cfg)?;
    match cfg.mode {
        Mode::Gan => {
            let (train, held_out, coverage) = match d.source.as_str() {
                "toy" => {
                    let toy = ToyDistribution::parse(&d.toy).map_err(|e| CliError::Config(e.to_string()))?;
                    let all = toy.sample(d.toy_samples + d.toy_held_out, d.toy_noise, d.seed)?;
                    let (train, held) = all.split_at(d.toy_samples)?;
                    let centers = toy.centers();
                    let coverage = (!centers.is_empty() && a.coverage_samples > 0).then_some(CoverageSpec {
                        centers,
                        radius: a.coverage_radius,
                        samples: a.coverage_samples,
                    });
                    (train, held, coverage)
                }
                "mnist" => {
                    let (train, test) = load_mnist(&mnist_dir(cfg))?;
                    let train = if d.train_subset == 0 { train } else { subset(&train, d.train_subset, d.seed)?.0 };
                    (train.without_labels(), limit(test, d.test_limit)?.without_labels(), None)
                }
                other => return Err(CliError::Config(format!("unknown data source `{other}`"))),
            };
            let dim = train.dim();
            let generator = match a.kind.as_str() {
                "toy" => NetworkSpec::toy_generator(a.z_dim, a.gen_width, a.gen_depth, dim),
                "mnist" => NetworkSpec::mnist_generator(a.z_dim),
                other => return Err(CliError::Config(format!("architecture `{other}` is not a GAN architecture"))),
            };
            let arch = GanArch {
                critic: critic_spec(cfg, dim)?,
                generator,
                z_dist: z,
                coverage,
            };
            Ok(Prepared::Gan { train, held_out, arch })
        }
        Mode::Semi => {
            if d.source != "mnist" || a.kind != "mnist-semi" {
                return Err(CliError::Config(
                    "semi-supervised runs need data.source = \"mnist\" and arch.kind = \"mnist-semi\"".into(),
                ));
            }
            let (train, test) = load_mnist(&mnist_dir(cfg))?;
            let k = train.num_classes().unwrap_or(10);
            let split = label_split(&train, d.labels_per_class, d.seed)?;
            let pool = if d.train_subset == 0 { train } else { subset(&train, d.train_subset, d.seed)?.0 };
            let arch = SemiArch {
                discriminator: NetworkSpec::mnist_classifier(k + 1),
                generator: NetworkSpec::mnist_generator(a.z_dim),
                z_dist: z,
            };
            Ok(Prepared::Semi {
                labeled: split.labeled,
                unlabeled: pool.without_labels(),
                test: limit(test, d.test_limit)?,
                arch,
            })
        }
    }
}
