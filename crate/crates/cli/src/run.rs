//! The `train`, `probe` and `export` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ctgan_core::diagnostics::{grad_norm_probe, pairwise_lipschitz_probe, weight_histogram, MetricRecord};
use ctgan_core::gan::{generate, train_ctgan, train_semisup, TrainObserver, TrainerSnapshot};
use ctgan_core::rng::{streams, RngStream};
use ctgan_core::Tensor;

use crate::checkpoint::Checkpoint;
use crate::config::{resolve, ExperimentConfig, Overrides, OUT_DIR_ENV};
use crate::dataio::{prepare, Prepared};
use crate::error::{CliError, CliResult};
use crate::metrics::{collect, write_csv, MetricWriter, Row};
use crate::samples;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const METRICS_JSONL: &str = "metrics.jsonl";
pub const METRICS_CSV: &str = "metrics.csv";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const SAMPLES: &str = "samples.f64";

/// Sample dumps draw from this substream of the evaluation stream, so they
/// never perturb the metric draws.
const SAMPLE_SUBSTREAM: u64 = 1 << 32;

struct RunObserver {
    writer: MetricWriter,
    rows: Vec<Row>,
    run_id: String,
    checkpoints: PathBuf,
    started: Instant,
    wall_clock: bool,
}

fn core_err(e: CliError) -> ctgan_core::Error {
    ctgan_core::Error::Observer(e.to_string())
}

impl TrainObserver for RunObserver {
    fn on_metric(&mut self, record: &MetricRecord) -> ctgan_core::Result<()> {
        let mut rec = record.clone();
        if self.wall_clock {
            rec.wall_clock_seconds = Some(self.started.elapsed().as_secs_f64());
        }
        self.writer.write(&rec).map_err(core_err)?;
        self.rows.push(Row::from_record(&self.run_id, &rec));
        Ok(())
    }

    fn on_checkpoint(&mut self, snap: &TrainerSnapshot<'_>) -> ctgan_core::Result<()> {
        let ck = Checkpoint {
            iteration: snap.iteration,
            networks: snap.networks.iter().map(|(n, s)| (n.to_string(), (*s).clone())).collect(),
            streams: snap.streams.iter().map(|(n, s)| (n.to_string(), *s)).collect(),
        };
        std::fs::create_dir_all(&self.checkpoints).map_err(|e| core_err(CliError::io(&self.checkpoints, e)))?;
        let path = self.checkpoints.join(format!("iter-{:08}.ckpt", snap.iteration));
        ck.save(&path).map_err(core_err)?;
        self.writer.flush().map_err(core_err)
    }
}

/// What a finished training run produced.
#[derive(Debug)]
pub struct TrainSummary {
    pub out: PathBuf,
    pub records: usize,
    pub test_error: Option<f64>,
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Runs the trainer a resolved config selects and writes the run directory.
pub fn train(cfg: &ExperimentConfig) -> CliResult<TrainSummary> {
    let tc = cfg.train_config();
    tc.validate()?;
    let prepared = prepare(cfg)?;
    let out = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    write_text(&out.join(RESOLVED_CONFIG), &cfg.to_toml()?)?;
    let mut obs = RunObserver {
        writer: MetricWriter::create(&out.join(METRICS_JSONL), &cfg.run_id)?,
        rows: Vec::new(),
        run_id: cfg.run_id.clone(),
        checkpoints: out.join("checkpoints"),
        started: Instant::now(),
        wall_clock: cfg.output.record_wall_clock,
    };
    let mut sample_rng = RngStream::new(cfg.seed, streams::EVAL).substream(SAMPLE_SUBSTREAM);
    let (networks, z_dist, iteration, test_error) = match &prepared {
        Prepared::Gan { train, held_out, arch } => {
            let run = train_ctgan(&tc, train, Some(held_out), arch, &mut obs)?;
            (
                vec![("critic".to_string(), run.critic), ("generator".to_string(), run.generator)],
                arch.z_dist,
                tc.total_iters as u64,
                None,
            )
        }
        Prepared::Semi {
            labeled,
            unlabeled,
            test,
            arch,
        } => {
            let run = train_semisup(&tc, labeled, unlabeled, Some(test), arch, &mut obs)?;
            (
                vec![
                    ("discriminator".to_string(), run.discriminator),
                    ("generator".to_string(), run.generator),
                ],
                arch.z_dist,
                tc.epochs as u64,
                run.test_error,
            )
        }
    };
    let RunObserver { writer, rows, .. } = obs;
    writer.finish()?;
    write_csv(&out.join(METRICS_CSV), &rows)?;
    if cfg.output.sample_count > 0 {
        let s = generate(&networks[1].1, z_dist, cfg.output.sample_count, &mut sample_rng)?;
        let desc = format!("generator samples of run {} after {iteration} iterations", cfg.run_id);
        samples::save(&out.join(SAMPLES), &s, &desc)?;
    }
    Checkpoint {
        iteration,
        networks,
        streams: Vec::new(),
    }
    .save(&out.join(FINAL_CHECKPOINT))?;
    Ok(TrainSummary {
        out,
        records: rows.len(),
        test_error,
    })
}

/// Resolves a config from an optional file, flags and the environment.
pub fn resolve_from(config: Option<&Path>, flags: &Overrides) -> CliResult<ExperimentConfig> {
    let text = match config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    resolve(text.as_deref(), flags, std::env::var(OUT_DIR_ENV).ok())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeKind {
    GradNorm,
    Pairwise,
    Weights,
}

impl ProbeKind {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "gradnorm" => Ok(Self::GradNorm),
            "pairwise" => Ok(Self::Pairwise),
            "weights" => Ok(Self::Weights),
            other => Err(CliError::Config(format!(
                "unknown probe `{other}` (expected gradnorm, pairwise or weights)"
            ))),
        }
    }
}

/// Where probe inputs come from.
pub enum ProbeInput {
    /// Rows of a headerless numeric CSV file.
    Csv(PathBuf),
    /// The first `rows` held-out (GAN) or test (semi) examples of a config.
    Config { config: Box<ExperimentConfig>, rows: usize },
    None,
}

pub struct ProbeRequest {
    pub checkpoint: PathBuf,
    pub which: ProbeKind,
    pub network: Option<String>,
    pub input: ProbeInput,
    pub bins: usize,
    pub report: PathBuf,
}

fn read_rows(path: &Path) -> CliResult<Tensor> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut data = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let bad = || CliError::Runtime(format!("{}: row {} is not numeric", path.display(), i + 1));
        let row = rec.iter().map(|f| f.trim().parse::<f64>().map_err(|_| bad())).collect::<CliResult<Vec<_>>>()?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(CliError::Runtime(format!("{}: ragged rows", path.display())));
        }
        data.extend(row);
    }
    let w = width.ok_or_else(|| CliError::Runtime(format!("{}: no rows", path.display())))?;
    Ok(Tensor::matrix(data.len() / w, w, data)?)
}

fn config_rows(cfg: &ExperimentConfig, rows: usize) -> CliResult<Tensor> {
    let ds = match prepare(cfg)? {
        Prepared::Gan { held_out, .. } => held_out,
        Prepared::Semi { test, .. } => test,
    };
    let n = rows.min(ds.len());
    Ok(ds.batch(&(0..n).collect::<Vec<_>>())?)
}

/// Runs one probe and writes its CSV report. Returns the report text.
pub fn probe(req: &ProbeRequest) -> CliResult<String> {
    let ck = Checkpoint::load(&req.checkpoint)?;
    let name = match &req.network {
        Some(n) => n.clone(),
        None => ["critic", "discriminator"]
            .into_iter()
            .find(|n| ck.network(n).is_some())
            .unwrap_or("critic")
            .to_string(),
    };
    let net = ck.network(&name).ok_or_else(|| {
        let names: Vec<&str> = ck.networks.iter().map(|(n, _)| n.as_str()).collect();
        CliError::Runtime(format!("checkpoint has no network `{name}` (has {})", names.join(", ")))
    })?;
    let x = || -> CliResult<Tensor> {
        let x = match &req.input {
            ProbeInput::Csv(p) => read_rows(p)?,
            ProbeInput::Config { config, rows } => config_rows(config, *rows)?,
            ProbeInput::None => return Err(CliError::Config("this probe needs input rows".into())),
        };
        if x.row_len() != net.spec().input_dim {
            return Err(CliError::Runtime(format!(
                "input rows have width {}, network `{name}` expects {}",
                x.row_len(),
                net.spec().input_dim
            )));
        }
        Ok(x)
    };
    let report = match req.which {
        ProbeKind::GradNorm => {
            let x = x()?;
            format!("grad_norm_max,rows\n{},{}\n", num(grad_norm_probe(net, &x)?), x.rows())
        }
        ProbeKind::Pairwise => {
            let r = pairwise_lipschitz_probe(net, &x()?)?;
            format!("lipschitz_ratio_max,pairs,skipped\n{},{},{}\n", num(r.max_ratio), r.pairs, r.skipped)
        }
        ProbeKind::Weights => {
            let h = weight_histogram(net, req.bins)?;
            let mut s = String::from("bin_lo,bin_hi,count\n");
            for (i, c) in h.counts.iter().enumerate() {
                s.push_str(&format!("{},{},{c}\n", num(h.edges[i]), num(h.edges[i + 1])));
            }
            s
        }
    };
    write_text(&req.report, &report)?;
    Ok(report)
}

fn num(v: f64) -> String {
    serde_json::to_string(&v).expect("f64 serializes")
}

/// Merged export of a metrics directory or CSV file.
#[derive(Debug)]
pub struct ExportSummary {
    pub rows: usize,
    pub skipped: usize,
}

pub fn export(source: &Path, dest: &Path) -> CliResult<ExportSummary> {
    let got = collect(source)?;
    write_csv(dest, &got.rows)?;
    Ok(ExportSummary {
        rows: got.rows.len(),
        skipped: got.skipped,
    })
}
