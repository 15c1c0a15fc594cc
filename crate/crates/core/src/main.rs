use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tempojd::cluster::DistanceTransform;
use tempojd::netcore::TraceFormat;
use tempojd::pipeline::{
    bundled, bundled_names, exit_code, run_command, run_repro, status_code, Command, EdgeFilter, InputSpec,
    PipelineConfig, SirConfig, EXIT_USAGE,
};
use tempojd::synthgen::SwitchingSchedule;
use tempojd::{Error, Result};

/// Spanning-tree sampling, joint diagonalisation and mode analysis of
/// temporal contact networks.
#[derive(Debug, Parser)]
#[command(name = "tempojd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate a synthetic trace (and segment labels for schedules).
    Synth {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Draw a batch of spanning trees.
    Sample {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Joint diagonalisation, mode selection and per-mode graphs.
    #[command(alias = "analyze")]
    Analyse {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// SIR outbreaks from every node and the seed ranking.
    Sir {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sir: SirArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run bundled (or given) experiment specs end to end.
    Repro {
        /// Bundled experiments to run; all of them when omitted.
        #[arg(long = "experiment", value_name = "NAME")]
        experiments: Vec<String>,
        /// Extra experiment spec files.
        #[arg(long = "spec", value_name = "FILE")]
        specs: Vec<PathBuf>,
        /// Print the named bundled spec and exit.
        #[arg(long, value_name = "NAME", conflicts_with_all = ["experiments", "specs"])]
        print_spec: Option<String>,
        /// List bundled experiments and exit.
        #[arg(long)]
        list: bool,
        #[arg(long, value_name = "DIR", required_unless_present_any = ["print_spec", "list"])]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Run directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Base config file; the flags below override it.
    #[arg(long, value_name = "FILE", group = "base")]
    config: Option<PathBuf>,
    /// Start from a bundled experiment spec.
    #[arg(long, value_name = "NAME", group = "base")]
    preset: Option<String>,
    /// Contact trace file.
    #[arg(long, value_name = "FILE", group = "source")]
    trace: Option<PathBuf>,
    /// Batch file from `sample`.
    #[arg(long, value_name = "FILE", group = "source")]
    batch: Option<PathBuf>,
    /// Switching schedule (JSON).
    #[arg(long, value_name = "FILE", group = "source")]
    schedule: Option<PathBuf>,
    /// Trace file format.
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    format: TraceFormat,
    /// Seconds per trace step.
    #[arg(long, default_value_t = 1.0)]
    granularity: f64,
    /// JSON map from node label to index.
    #[arg(long, value_name = "FILE")]
    label_map: Option<PathBuf>,
    /// Top-level seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Pareto shape of synthetic inter-contact gaps [default: 1.5].
    #[arg(long)]
    tail_exponent: Option<f64>,
    /// Minimum synthetic inter-contact gap in steps [default: 1].
    #[arg(long)]
    min_gap: Option<f64>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Trees per batch [default: 10000].
    #[arg(short = 'm', long = "samples")]
    samples: Option<usize>,
    /// Flooding horizon in seconds [default: unlimited].
    #[arg(long)]
    horizon: Option<f64>,
    /// Analyse only trees that reached every node.
    #[arg(long)]
    complete_only: bool,
    /// Keep trees using edge A-B with probability P: `A,B,P`.
    #[arg(long, value_name = "A,B,P", value_parser = parse_edge_filter)]
    avoid_edge: Option<EdgeFilter>,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Largest mixture order tried [default: 8].
    #[arg(long)]
    k_max: Option<usize>,
    /// Fit the mixture on ln(1 + δ).
    #[arg(long)]
    log_deltas: bool,
    /// Relative off-diagonal decrease that ends JD [default: 1e-5].
    #[arg(long)]
    jd_tol: Option<f64>,
    /// JD sweep limit [default: 100].
    #[arg(long)]
    jd_max_sweeps: Option<usize>,
    /// Mixture restarts per order [default: 10].
    #[arg(long)]
    gmm_restarts: Option<usize>,
    /// Start-time histogram bin width in seconds [default: 100 steps].
    #[arg(long)]
    bin_width: Option<f64>,
    /// Presentation threshold on average-graph weights [default: 0.1].
    #[arg(long)]
    threshold: Option<f64>,
    /// Weight floor for shortest-path links [default: 0].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Link weight to path length transform [default: reciprocal].
    #[arg(long, value_enum)]
    distance: Option<DistanceTransform>,
    /// Dendrogram blocks at or below this size stay whole [default: 1].
    #[arg(long)]
    min_block: Option<usize>,
    /// Decompose this mode again (repeatable).
    #[arg(long = "submode", value_name = "MODE")]
    submodes: Vec<usize>,
}

#[derive(Debug, Args)]
struct SirArgs {
    /// Per-contact transmission probability [default: 0.5].
    #[arg(long)]
    p_transmit: Option<f64>,
    /// Mean infectious period in steps [default: 80].
    #[arg(long)]
    recovery_mean: Option<f64>,
    /// Step at which the seed node is infected [default: 250].
    #[arg(long)]
    start_step: Option<i64>,
    /// Steps simulated [default: to the end of the trace].
    #[arg(long)]
    sir_horizon: Option<usize>,
    /// Retry transmission at every step of a long contact.
    #[arg(long)]
    per_step: bool,
    /// Runs per seed node [default: 30].
    #[arg(long)]
    runs: Option<usize>,
    /// Bootstrap resamples for the bands [default: 1000].
    #[arg(long)]
    bootstrap: Option<usize>,
}

fn parse_edge_filter(s: &str) -> std::result::Result<EdgeFilter, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, p] = parts[..] else {
        return Err("expected A,B,P".into());
    };
    Ok(EdgeFilter {
        a: a.parse().map_err(|_| format!("bad node {a:?}"))?,
        b: b.parse().map_err(|_| format!("bad node {b:?}"))?,
        keep: p.parse().map_err(|_| format!("bad probability {p:?}"))?,
    })
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl InputArgs {
    fn config(&self, command: &str) -> Result<PipelineConfig> {
        let base = if let Some(path) = &self.config {
            Some(PipelineConfig::load(path)?)
        } else if let Some(name) = &self.preset {
            Some(bundled(name)?)
        } else {
            None
        };
        let source = if let Some(path) = &self.trace {
            Some(InputSpec::Trace {
                path: path.clone(),
                format: self.format,
                granularity: self.granularity,
                label_map: self.label_map.clone(),
            })
        } else if let Some(path) = &self.batch {
            Some(InputSpec::Batch { path: path.clone() })
        } else if let Some(path) = &self.schedule {
            Some(InputSpec::Schedule {
                schedule: SwitchingSchedule::load(path)?,
            })
        } else {
            None
        };
        let mut cfg = match (base, source) {
            (Some(mut cfg), Some(input)) => {
                cfg.input = input;
                cfg
            }
            (Some(cfg), None) => cfg,
            (None, Some(input)) => PipelineConfig::new(command, input),
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "no input: give --trace, --batch, --schedule, --config or --preset".into(),
                ))
            }
        };
        set(&mut cfg.seed, self.seed);
        if self.tail_exponent.is_some() || self.min_gap.is_some() {
            let tweak = |g: &mut tempojd::synthgen::GeneratorSpec| {
                set(&mut g.tail_exponent, self.tail_exponent);
                set(&mut g.min_gap, self.min_gap);
            };
            match &mut cfg.input {
                InputSpec::Generator { generator, .. } => tweak(generator),
                InputSpec::Schedule { schedule } => schedule.segments.iter_mut().for_each(|s| tweak(&mut s.generator)),
                _ => {
                    return Err(Error::InvalidArgument(
                        "--tail-exponent and --min-gap apply to synthetic inputs only".into(),
                    ))
                }
            }
        }
        Ok(cfg)
    }
}

impl SampleArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.sample.m, self.samples);
        if self.horizon.is_some() {
            cfg.sample.horizon = self.horizon;
        }
        cfg.sample.complete_only |= self.complete_only;
        if self.avoid_edge.is_some() {
            cfg.sample.avoid_edge = self.avoid_edge;
        }
    }
}

impl AnalysisArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        let a = &mut cfg.analysis;
        set(&mut a.k_max, self.k_max);
        a.log_transform |= self.log_deltas;
        set(&mut a.jd.tol, self.jd_tol);
        set(&mut a.jd.max_sweeps, self.jd_max_sweeps);
        set(&mut a.gmm.restarts, self.gmm_restarts);
        if self.bin_width.is_some() {
            a.bin_width = self.bin_width;
        }
        set(&mut a.threshold, self.threshold);
        set(&mut a.epsilon, self.epsilon);
        set(&mut a.distance, self.distance);
        set(&mut a.min_block, self.min_block);
        if !self.submodes.is_empty() {
            a.submodes = self.submodes.clone();
        }
    }
}

impl SirArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        let s = cfg.sir.get_or_insert_with(SirConfig::default);
        set(&mut s.params.p_transmit, self.p_transmit);
        set(&mut s.params.recovery_mean, self.recovery_mean);
        set(&mut s.params.start_step, self.start_step);
        if self.sir_horizon.is_some() {
            s.params.horizon = self.sir_horizon;
        }
        s.params.per_step |= self.per_step;
        set(&mut s.runs, self.runs);
        set(&mut s.bootstrap, self.bootstrap);
    }
}

fn run(cmd: Cmd) -> Result<i32> {
    let (command, cfg, out) = match cmd {
        Cmd::Synth { input, out } => (Command::Synth, input.config("synth")?, out.out),
        Cmd::Sample { input, sample, out } => {
            let mut cfg = input.config("sample")?;
            sample.apply(&mut cfg);
            (Command::Sample, cfg, out.out)
        }
        Cmd::Analyse {
            input,
            sample,
            analysis,
            out,
        } => {
            let mut cfg = input.config("analyse")?;
            sample.apply(&mut cfg);
            analysis.apply(&mut cfg);
            (Command::Analyse, cfg, out.out)
        }
        Cmd::Sir { input, sir, out } => {
            let mut cfg = input.config("sir")?;
            sir.apply(&mut cfg);
            (Command::Sir, cfg, out.out)
        }
        Cmd::Repro {
            experiments,
            specs,
            print_spec,
            list,
            out,
        } => {
            if list {
                for name in bundled_names() {
                    println!("{name}");
                }
                return Ok(0);
            }
            if let Some(name) = print_spec {
                print!("{}", bundled(&name)?.to_json()?);
                return Ok(0);
            }
            let mut configs = Vec::new();
            let names: Vec<String> = if experiments.is_empty() && specs.is_empty() {
                bundled_names().into_iter().map(String::from).collect()
            } else {
                experiments
            };
            for name in &names {
                configs.push(bundled(name)?);
            }
            for path in &specs {
                configs.push(PipelineConfig::load(path)?);
            }
            let out = out.expect("clap requires --out");
            let status = run_repro(&configs, &out)?;
            eprintln!("wrote {}", out.display());
            return Ok(status_code(status));
        }
    };
    cfg.validate()?;
    log::debug!("effective config:\n{}", cfg.to_json()?);
    let status = run_command(command, &cfg, &out)?;
    eprintln!("wrote {}", out.display());
    Ok(status_code(status))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
