//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;
use crate::error::{CliError, CliResult};
use crate::run::{export, probe, resolve_from, train, ProbeInput, ProbeKind, ProbeRequest, RESOLVED_CONFIG};

#[derive(Debug, Parser)]
#[command(name = "ctgan", version, about = "Train and probe WGAN-GP / CT-GAN models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write a run directory.
    Train(TrainArgs),
    /// Run a Lipschitz or weight probe on a checkpoint.
    Probe(ProbeArgs),
    /// Merge metric JSON-lines files (or an exported CSV) into one CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset the config starts from.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Generator iterations (GAN) or epochs (semi-supervised).
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub no_ct: bool,
    #[arg(long)]
    pub no_gp: bool,
    #[arg(long)]
    pub no_gan: bool,
    #[arg(long)]
    pub no_dropout: bool,
    #[arg(long)]
    pub no_ct_feature_term: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            seed: self.seed,
            out: self.out.clone(),
            iters: self.iters,
            no_ct: self.no_ct,
            no_gp: self.no_gp,
            no_gan: self.no_gan,
            no_dropout: self.no_dropout,
            no_ct_feature_term: self.no_ct_feature_term,
        }
    }

    fn given(&self) -> bool {
        self.config.is_some() || self.preset.is_some()
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Print the resolved config and exit without training.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// gradnorm, pairwise or weights.
    #[arg(long)]
    pub which: String,
    /// Network inside the checkpoint (default: critic or discriminator).
    #[arg(long)]
    pub network: Option<String>,
    /// Headerless numeric CSV of input rows.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Rows taken from the config's held-out data when no input is given.
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    /// Histogram bins of the weights probe.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Report CSV path.
    #[arg(long)]
    pub report: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Directory of *.jsonl files or an exported CSV.
    pub source: PathBuf,
    /// Merged CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn probe_cmd(a: &ProbeArgs) -> CliResult<()> {
    let which = ProbeKind::parse(&a.which)?;
    let input = if let Some(p) = &a.input {
        ProbeInput::Csv(p.clone())
    } else if which == ProbeKind::Weights {
        ProbeInput::None
    } else {
        let file = if a.config.given() {
            a.config.config.clone()
        } else {
            let dir = a.checkpoint.parent().unwrap_or(std::path::Path::new("."));
            [dir.join(RESOLVED_CONFIG), dir.join("..").join(RESOLVED_CONFIG)]
                .into_iter()
                .find(|p| p.is_file())
        };
        if file.is_none() && !a.config.given() {
            return Err(CliError::Config(
                "probe needs --input, --config or a run directory holding the resolved config".into(),
            ));
        }
        let cfg = resolve_from(file.as_deref(), &a.config.overrides())?;
        ProbeInput::Config {
            config: Box::new(cfg),
            rows: a.rows,
        }
    };
    let report = probe(&ProbeRequest {
        checkpoint: a.checkpoint.clone(),
        which,
        network: a.network.clone(),
        input,
        bins: a.bins,
        report: a.report.clone(),
    })?;
    print!("{report}");
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => {
            let cfg = resolve_from(a.config.config.as_deref(), &a.config.overrides())?;
            if a.dry_run {
                print!("{}", cfg.to_toml()?);
                return Ok(());
            }
            let s = train(&cfg)?;
            match s.test_error {
                Some(e) => println!("{}: {} records, test error {e}, output in {}", cfg.run_id, s.records, s.out.display()),
                None => println!("{}: {} records, output in {}", cfg.run_id, s.records, s.out.display()),
            }
        }
        Command::Probe(a) => probe_cmd(&a)?,
        Command::Export(a) => {
            let s = export(&a.source, &a.out)?;
            println!("exported {} rows to {}", s.rows, a.out.display());
            if s.skipped > 0 {
                eprintln!("warning: skipped {} malformed records", s.skipped);
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ctgan: {e}");
            e.exit_code()
        }
    }
}
