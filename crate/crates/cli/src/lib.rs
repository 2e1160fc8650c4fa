//! Command-line front end: batch loss and metric reports over paired
//! corpora, and grid dumps for inspecting phase structure.

pub mod batch;
pub mod config;
pub mod inspect;
pub mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phaseloss::{StftConfig, WindowKind};

pub use batch::{cmd_loss, cmd_metrics, BatchOutcome};
pub use config::{Format, Overrides, Preset, RunConfig};
pub use inspect::{cmd_inspect, What};

#[derive(Debug, Parser)]
#[command(name = "phaseloss", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the combined training criterion for each utterance.
    Loss(BatchArgs),
    /// Compute evaluation metrics for each utterance.
    Metrics(BatchArgs),
    /// Dump the phase field, continuity kernels or phase derivatives of a file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Clean reference directory or file.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Enhanced directory or file.
    #[arg(long)]
    pub enhanced: Option<PathBuf>,
    /// Noisy directory or file.
    #[arg(long)]
    pub noisy: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Loss weight preset.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl BatchArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        RunConfig::resolve(
            self.config.as_deref(),
            Overrides {
                clean: self.clean,
                enhanced: self.enhanced,
                noisy: self.noisy,
                out: self.out,
                format: self.format,
                preset: self.preset,
                jobs: self.jobs,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowArg {
    Hann,
    Rectangular,
}

impl From<WindowArg> for WindowKind {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Hann => WindowKind::Hann,
            WindowArg::Rectangular => WindowKind::Rectangular,
        }
    }
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// WAV file to analyse.
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "kernel")]
    pub what: What,
    #[arg(long, default_value_t = 512)]
    pub fft_size: usize,
    #[arg(long, default_value_t = 128)]
    pub hop: usize,
    #[arg(long, default_value_t = 512)]
    pub win_length: usize,
    #[arg(long, value_enum, default_value = "hann")]
    pub window: WindowArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

fn emit(table: &report::Table, format: Format, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            table.write(format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            table.write(format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn finish_batch(outcome: BatchOutcome, cfg: &RunConfig) -> Result<i32> {
    emit(
        &outcome.table,
        cfg.output.format,
        cfg.output.path.as_deref(),
    )?;
    eprintln!(
        "ok={} skipped={} failed={}",
        outcome.ok, outcome.skipped, outcome.failed
    );
    Ok(if outcome.succeeded() { 0 } else { 1 })
}

/// Runs one command and returns the process exit code: 0 on success, 1
/// when no utterance could be evaluated. Configuration and I/O problems
/// are errors.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Loss(args) => {
            let cfg = args.resolve()?;
            finish_batch(cmd_loss(&cfg)?, &cfg)
        }
        Command::Metrics(args) => {
            let cfg = args.resolve()?;
            finish_batch(cmd_metrics(&cfg)?, &cfg)
        }
        Command::Inspect(args) => {
            let stft =
                StftConfig::new(args.fft_size, args.hop, args.win_length, args.window.into())?;
            let table = cmd_inspect(&args.file, &stft, args.what)?;
            emit(&table, args.format, args.out.as_deref())?;
            Ok(0)
        }
    }
}
