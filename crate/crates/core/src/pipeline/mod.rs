//! Orchestration behind the command-line tool: configs, run directories
//! and the `synth`, `sample`, `analyse`, `sir` and `repro` commands.
//!
//! Each command writes into one run directory. `manifest.json` lists every
//! artefact with its SHA-256 and the config hash; `meta.json` holds the
//! creation time and is the only file that differs between identical runs.

mod config;
mod run;
mod stages;

pub use config::{
    bundled, bundled_names, AnalysisConfig, EdgeFilter, InputSpec, PipelineConfig, SampleConfig, SirConfig, BUNDLED,
};
pub use run::{Artifact, RunDir, RunStatus, MANIFEST_FILE, META_FILE};
pub use stages::{
    analyse_stage, analysed_indices, load_input, mode_options, sample_segments, sample_stage, sir_stage,
    write_batch_file, write_synthetic, Loaded, SegmentAgreement, BOUNDARY_MARGIN_STEPS,
};

use std::path::Path;

use crate::error::{Error, Result};
use stages::path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Process exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_DATA,
    }
}

pub fn status_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Ok => EXIT_OK,
        RunStatus::NotConverged => EXIT_NOT_CONVERGED,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Sample,
    Analyse,
    Sir,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Sample => "sample",
            Command::Analyse => "analyse",
            Command::Sir => "sir",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Stages {
    sample: bool,
    analyse: bool,
    sir: bool,
}

fn chain(run: &mut RunDir, prefix: &str, cfg: &PipelineConfig, stages: Stages) -> Result<()> {
    cfg.validate()?;
    run.write(&path(prefix, "config.json"), cfg.to_json()?.as_bytes())?;
    let loaded = load_input(cfg)?;
    if cfg.input.is_synthetic() {
        write_synthetic(run, prefix, &loaded)?;
    }
    if stages.sample || stages.analyse {
        let batch = sample_stage(cfg, &loaded)?;
        if !matches!(loaded, Loaded::Batch(_)) {
            write_batch_file(run, prefix, &batch)?;
        }
        if stages.analyse {
            analyse_stage(run, prefix, cfg, &batch, &loaded)?;
        }
    }
    if stages.sir {
        sir_stage(run, prefix, cfg, &loaded)?;
    }
    Ok(())
}

/// Runs one command into `out`.
pub fn run_command(command: Command, cfg: &PipelineConfig, out: &Path) -> Result<RunStatus> {
    let stages = match command {
        Command::Synth => {
            if !cfg.input.is_synthetic() {
                return Err(Error::invalid("synth needs a generator or schedule input"));
            }
            Stages {
                sample: false,
                analyse: false,
                sir: false,
            }
        }
        Command::Sample => {
            if matches!(cfg.input, InputSpec::Batch { .. }) {
                return Err(Error::invalid(
                    "sample needs a trace, graph or generator input, not a batch",
                ));
            }
            Stages {
                sample: true,
                analyse: false,
                sir: false,
            }
        }
        Command::Analyse => Stages {
            sample: true,
            analyse: true,
            sir: false,
        },
        Command::Sir => Stages {
            sample: false,
            analyse: false,
            sir: true,
        },
    };
    let mut run = RunDir::create(out)?;
    chain(&mut run, "", cfg, stages)?;
    run.finish(command.name(), &cfg.hash()?)
}

/// Runs every experiment end to end, each under its own subdirectory.
pub fn run_repro(configs: &[PipelineConfig], out: &Path) -> Result<RunStatus> {
    if configs.is_empty() {
        return Err(Error::invalid("no experiments to run"));
    }
    let mut names: Vec<&str> = configs.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("experiment names must be distinct"));
    }
    let mut run = RunDir::create(out)?;
    for cfg in configs {
        log::info!("experiment {}", cfg.name);
        let stages = Stages {
            sample: true,
            analyse: true,
            sir: cfg.sir.is_some(),
        };
        chain(&mut run, &format!("{}/", cfg.name), cfg, stages)?;
    }
    run.finish("repro", &config::hash_json(configs)?)
}
