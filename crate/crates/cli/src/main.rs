use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mobses_core::pipeline::{render_report, with_threads};
use mobses_core::synth::{generate_to_dir, SynthConfig};
use mobses_core::{run_pipeline, run_stage, Error, RunConfig, Stage};

/// Mobility indicators and socioeconomic status from call detail records.
#[derive(Parser)]
#[command(name = "mobses", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every stage. Settings are applied in this order, so
/// later ones win: defaults, `--config`, `--input`, `--outdir`, `--threads`,
/// then each `--set` in turn.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory holding cdr.csv, cells.csv, listings.csv, admin.geojson and
    /// boundary.geojson.
    #[arg(long, value_name = "DIR")]
    input: Option<PathBuf>,
    /// Directory for stage outputs.
    #[arg(long, value_name = "DIR")]
    outdir: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.input {
            cfg.set_input_dir(dir);
        }
        if let Some(dir) = &self.outdir {
            cfg.outdir = dir.clone();
        }
        if let Some(n) = self.threads {
            cfg.threads = Some(n);
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().sims)]
    sims: usize,
    #[arg(long, default_value_t = SynthConfig::default().cells)]
    cells: usize,
    #[arg(long, default_value_t = SynthConfig::default().days)]
    days: u32,
    /// Share of records emitted away from home and work.
    #[arg(long, default_value_t = SynthConfig::default().excursion)]
    excursion: f64,
    /// Output directory for the generated inputs and ground truth.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic city, population and ground truth.
    Synth(SynthArgs),
    /// Parse inputs and write subscriber attributes and parse counts.
    Ingest(RunArgs),
    /// Merge nearby cells, tessellate, attach prices and admin units.
    Cells(RunArgs),
    /// Per-SIM activity statistics and exploratory distributions.
    Stats(RunArgs),
    /// Select SIMs active enough for mobility analysis.
    Filter(RunArgs),
    /// Estimate home and work cells.
    Anchors(RunArgs),
    /// Radius of gyration, entropy and travel diversity per SIM.
    Indicators(RunArgs),
    /// Price categories, equal-sum strata and per-category summaries.
    Ses(RunArgs),
    /// Binned indicator matrix and principal components.
    Pca(RunArgs),
    /// Commuting tables and optional census comparison.
    Commute(RunArgs),
    /// Summarize an output directory without modifying it.
    Report(RunArgs),
    /// Run every stage in order and print the report.
    Pipeline(RunArgs),
}

fn stage_of(cmd: &Command) -> Option<Stage> {
    Some(match cmd {
        Command::Ingest(_) => Stage::Ingest,
        Command::Cells(_) => Stage::Cells,
        Command::Stats(_) => Stage::Stats,
        Command::Filter(_) => Stage::Filter,
        Command::Anchors(_) => Stage::Anchors,
        Command::Indicators(_) => Stage::Indicators,
        Command::Ses(_) => Stage::Ses,
        Command::Pca(_) => Stage::Pca,
        Command::Commute(_) => Stage::Commute,
        _ => return None,
    })
}

fn run(cli: Cli) -> Result<String, Error> {
    match &cli.command {
        Command::Synth(a) => {
            let cfg = SynthConfig {
                seed: a.seed,
                sims: a.sims,
                cells: a.cells,
                days: a.days,
                excursion: a.excursion,
                ..SynthConfig::default()
            };
            cfg.validate()?;
            let cal = RunConfig::default().calendar();
            let summary = with_threads(a.threads, || generate_to_dir(&cfg, &cal, &a.out))??;
            Ok(format!(
                "cells={}\nlistings={}\nsims={}\nregions={}\n",
                summary.cells, summary.listings, summary.sims, summary.regions
            ))
        }
        Command::Report(a) => render_report(&a.resolve()?.outdir),
        Command::Pipeline(a) => run_pipeline(&a.resolve()?),
        cmd => {
            let stage = stage_of(cmd).expect("remaining commands are stages");
            let (Command::Ingest(a)
            | Command::Cells(a)
            | Command::Stats(a)
            | Command::Filter(a)
            | Command::Anchors(a)
            | Command::Indicators(a)
            | Command::Ses(a)
            | Command::Pca(a)
            | Command::Commute(a)) = cmd
            else {
                unreachable!("stage commands carry run arguments")
            };
            run_stage(&a.resolve()?, stage)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
