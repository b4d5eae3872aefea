//! Command-line front end: `sfunc`, `simulate`, `bench` and `gen`.
//!
//! Exit codes are `0` on success (deadline misses included), `2` for invalid
//! input and `3` when the static partitioning rejects the instance.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::baselines::{PolicyId, Simulation};
use crate::engine::{write_traces_csv, Summary};
use crate::error::{Error, Result};
use crate::model::{validate_config, Severity, SystemConfig};
use crate::partition::{static_partition, PartitionOptions};
use crate::sfunc::compute_s_tables;
use crate::workload::{generate, Shape, WorkloadSpec};

pub const EXIT_INVALID_INPUT: u8 = 2;
pub const EXIT_PARTITION_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "frame-dvfs", version, about = "Energy-aware global scheduling of frame-based tasks on DVFS multiprocessors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the frequency tables and dump them as CSV.
    Sfunc(CommonArgs),
    /// Run seeded frames with one policy; writes trace.csv and summary.json.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "global_stochastic")]
        policy: PolicyId,
        /// Frame count N (seeds 0..N) or a comma-separated seed list.
        #[arg(long, default_value = "1")]
        seeds: Seeds,
    },
    /// Run several policies on the same seeds; writes bench.csv.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated policy names; all policies by default.
        #[arg(long, value_delimiter = ',')]
        policy: Vec<PolicyId>,
        #[arg(long, default_value = "100")]
        seeds: Seeds,
    },
    /// Generate a random instance as config JSON.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the grid step of the config.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Accept a task that fills its processor's frame exactly.
    #[arg(long)]
    pub allow_exact_fit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Frame length.
    #[arg(short = 'D', long = "frame-length", default_value_t = 1000.0)]
    pub frame_length: f64,
    /// Number of evenly spaced frequency levels.
    #[arg(long, default_value_t = 4)]
    pub freqs: usize,
    #[arg(long)]
    pub utilization: f64,
    #[arg(long, default_value = "bimodal")]
    pub shape: Shape,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Either a frame count or explicit seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

impl FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
        let seeds = if s.contains(',') {
            let list = s
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(parse)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Seeds::List(list)
        } else {
            Seeds::Count(parse(s)?)
        };
        if seeds.to_vec().is_empty() {
            return Err("at least one seed is required".into());
        }
        Ok(seeds)
    }
}

impl fmt::Display for Seeds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seeds::Count(n) => write!(f, "{n}"),
            Seeds::List(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{},", parts.join(","))
            }
        }
    }
}

/// Everything one simulation or benchmark run depends on.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: PathBuf,
    pub policies: Vec<PolicyId>,
    pub seeds: Seeds,
    pub out: Option<PathBuf>,
    pub grid_step: Option<f64>,
    pub allow_exact_fit: bool,
}

impl RunManifest {
    pub fn new(common: &CommonArgs, policies: Vec<PolicyId>, seeds: Seeds) -> Self {
        Self {
            config: common.config.clone(),
            policies,
            seeds,
            out: common.out.clone(),
            grid_step: common.grid_step,
            allow_exact_fit: common.allow_exact_fit,
        }
    }

    fn options(&self) -> PartitionOptions {
        PartitionOptions {
            allow_exact_fit: self.allow_exact_fit,
        }
    }
}

/// Maps an error onto the process exit code.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::PartitionFailed { .. } | Error::GenerationFailed { .. } => EXIT_PARTITION_FAILED,
        Error::InvalidConfig(_)
        | Error::InvalidWorkload(_)
        | Error::Json(_)
        | Error::FrequencyAboveMax { .. }
        | Error::NegativeRemainingTime(_) => EXIT_INVALID_INPUT,
        _ => 1,
    }
}

/// Reads and validates a config, applying a grid step override. Warnings
/// go to `err`.
pub fn load_config(path: &Path, grid_step: Option<f64>, err: &mut dyn Write) -> Result<SystemConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidConfig(vec![crate::model::Diagnostic {
            field: path.display().to_string(),
            rule: e.to_string(),
            severity: Severity::Error,
        }])
    })?;
    let mut cfg = SystemConfig::from_json_str(&text)?;
    if let Some(step) = grid_step {
        cfg.grid_step = step;
    }
    let (errors, warnings): (Vec<_>, Vec<_>) = validate_config(&cfg)
        .into_iter()
        .partition(|d| d.severity == Severity::Error);
    for w in &warnings {
        writeln!(err, "{w}")?;
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::InvalidConfig(errors))
    }
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir)?;
    Ok(fs::File::create(dir.join(name))?)
}

pub fn cmd_sfunc(args: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&args.config, args.grid_step, err)?;
    let table = compute_s_tables(&cfg);
    match &args.out {
        Some(dir) => table.write_csv(create(dir, "sfunc.csv")?)?,
        None => table.write_csv(&mut *out)?,
    }
    for task in 0..table.tasks() {
        match table.forced_boundary(task) {
            Some(d) => writeln!(err, "task {}: forced to the maximum frequency below d = {d}", task + 1)?,
            None => writeln!(err, "task {}: forced over the whole grid", task + 1)?,
        }
    }
    Ok(())
}

pub fn cmd_simulate(manifest: &RunManifest, out: &mut dyn Write, err: &mut dyn Write) -> Result<Summary> {
    let cfg = load_config(&manifest.config, manifest.grid_step, err)?;
    let policy = manifest.policies.first().copied().unwrap_or(PolicyId::GlobalStochastic);
    let sim = Simulation::new(cfg, policy, manifest.options())?;
    let traces = sim.run(&manifest.seeds.to_vec())?;
    let summary = Summary::from_traces(&traces);
    let json = serde_json::to_string_pretty(&summary)?;
    match &manifest.out {
        Some(dir) => {
            write_traces_csv(&traces, create(dir, "trace.csv")?)?;
            writeln!(create(dir, "summary.json")?, "{json}")?;
            writeln!(out, "{json}")?;
        }
        None => {
            write_traces_csv(&traces, &mut *out)?;
            writeln!(err, "{json}")?;
        }
    }
    Ok(summary)
}

/// One summary per policy, all on the same seeds and the same partition.
pub fn bench(manifest: &RunManifest, err: &mut dyn Write) -> Result<Vec<(PolicyId, Summary)>> {
    let cfg = load_config(&manifest.config, manifest.grid_step, err)?;
    let partition = static_partition(&cfg, manifest.options())?;
    let seeds = manifest.seeds.to_vec();
    let policies = if manifest.policies.is_empty() {
        PolicyId::ALL.to_vec()
    } else {
        manifest.policies.clone()
    };
    policies
        .into_iter()
        .map(|p| {
            let sim = Simulation::with_partition(cfg.clone(), p, partition.clone());
            Ok((p, Summary::from_traces(&sim.run(&seeds)?)))
        })
        .collect()
}

pub fn write_bench_csv<W: Write>(rows: &[(PolicyId, Summary)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "mean_energy", "ci95", "misses", "skips"])?;
    for (p, s) in rows {
        w.write_record(&[
            p.name().to_string(),
            s.mean_energy.to_string(),
            s.ci95.map(|c| c.to_string()).unwrap_or_default(),
            s.misses.to_string(),
            s.skips.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bench(manifest: &RunManifest, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let rows = bench(manifest, err)?;
    match &manifest.out {
        Some(dir) => write_bench_csv(&rows, create(dir, "bench.csv")?),
        None => write_bench_csv(&rows, out),
    }
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<SystemConfig> {
    let cfg = generate(&WorkloadSpec {
        n: args.n,
        m: args.m,
        frame_length: args.frame_length,
        freq_levels: args.freqs,
        utilization: args.utilization,
        shape: args.shape,
        seed: args.seed,
    })?;
    let json = cfg.to_json_string()?;
    match &args.out {
        Some(dir) => writeln!(create(dir, "config.json")?, "{json}")?,
        None => writeln!(out, "{json}")?,
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Sfunc(args) => cmd_sfunc(args, out, err),
        Command::Simulate { common, policy, seeds } => {
            cmd_simulate(&RunManifest::new(common, vec![*policy], seeds.clone()), out, err).map(drop)
        }
        Command::Bench { common, policy, seeds } => {
            cmd_bench(&RunManifest::new(common, policy.clone(), seeds.clone()), out, err)
        }
        Command::Gen(args) => cmd_gen(args, out).map(drop),
    }
}

/// Parses the process arguments, runs the command and reports errors on stderr.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    match execute(&cli, &mut out, &mut err) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::InvalidConfig(diags)) => {
            for d in &diags {
                let _ = writeln!(err, "{d}");
            }
            ExitCode::from(EXIT_INVALID_INPUT)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
