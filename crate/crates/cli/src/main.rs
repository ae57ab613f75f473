use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ttd_beamsim::channel::{write_channel_dump, ChannelRealization};
use ttd_beamsim::experiment::{
    emit_csv, load_config, run_experiment, trial_rng, write_codebook, ExperimentPlan, RowStatus, RunMetadata,
    CHANNEL_STREAM,
};
use ttd_beamsim::hardware::{spec_table, write_spec_table};
use ttd_beamsim::power::{total_power, write_breakdowns};
use ttd_beamsim::{Architecture, Execution, SystemConfig};

#[derive(Parser, Debug)]
#[command(name = "ttd-beamsim", version, about = "Single-pilot beam training with true-time-delay arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte-Carlo RMSE sweep described by a config file.
    Simulate(SimulateArgs),
    /// Print the baseband power breakdown of each architecture.
    Power {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the delay-range and interleaving table.
    Hardware(HardwareArgs),
    /// Print per-subcarrier beam gains over angle.
    Codebook {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "analog")]
        arch: Architecture,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of angle samples across (-90, 90) degrees.
        #[arg(long, default_value_t = 181)]
        points: usize,
    },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Results CSV; overrides `output` in the config. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the channel realizations of the base configuration.
    #[arg(long)]
    channel_dump: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run trials on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct HardwareArgs {
    #[arg(long, default_value_t = 16)]
    num_rx: usize,
    #[arg(long, default_value_t = 4)]
    sub_array_size: usize,
    #[arg(long, default_value_t = 2e9)]
    bandwidth_hz: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    orders: Vec<usize>,
}

/// Opens `path` for writing, or stdout when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn plan_or_default(config: Option<&Path>) -> Result<ExperimentPlan> {
    match config {
        Some(p) => Ok(load_config(p)?),
        None => Ok(ExperimentPlan::default()),
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut plan = load_config(&args.config)?;
    if let Some(t) = args.trials {
        plan.trials = t;
    }
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    plan.validate()?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let rows = run_experiment(&plan, exec)?;
    for row in &rows {
        if let RowStatus::Failed(msg) = &row.status {
            eprintln!("warning: {} at {:?}: {msg}", row.architecture, row.sweep_value);
        }
    }
    let out = args.out.as_deref().or(plan.output.as_deref());
    let mut w = sink(out)?;
    emit_csv(&mut w, &rows, &RunMetadata::from_plan(&plan))?;
    w.flush()?;

    if let Some(path) = &args.channel_dump {
        let channels: Vec<ChannelRealization> = (0..plan.trials as u64)
            .map(|t| ChannelRealization::sample(&mut trial_rng(plan.seed, t, CHANNEL_STREAM), &plan.system, &plan.channel))
            .collect();
        let indexed: Vec<(u64, &ChannelRealization)> = (0..).zip(&channels).collect();
        let mut w = sink(Some(path))?;
        write_channel_dump(&mut w, &indexed)?;
        w.flush()?;
    }
    if rows.iter().any(|r| matches!(r.status, RowStatus::Failed(_))) {
        bail!("some rows failed; see the status column");
    }
    Ok(())
}

/// Breakdowns at the base configuration; architectures whose delay range
/// cannot support `R = 1` are skipped with a note on stderr.
fn power(config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let plan = plan_or_default(config)?;
    let mut rows = Vec::new();
    for &arch in &plan.architectures {
        let r = plan.diversity(&plan.system, arch);
        if r == 0 {
            eprintln!("note: {arch} is infeasible at this bandwidth; skipped");
            continue;
        }
        let system = SystemConfig { diversity: r, ..plan.system.clone() };
        rows.push(total_power(&system, &plan.power, arch)?);
    }
    if rows.is_empty() {
        bail!("no feasible architecture to report");
    }
    let mut w = sink(out)?;
    write_breakdowns(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

fn hardware(args: &HardwareArgs) -> Result<()> {
    if args.num_rx == 0 || args.sub_array_size == 0 || !(args.bandwidth_hz > 0.0) {
        bail!("num_rx, sub_array_size and bandwidth_hz must be positive");
    }
    let rows = spec_table(args.num_rx, args.sub_array_size, args.bandwidth_hz, &args.orders);
    let mut w = sink(None)?;
    write_spec_table(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

fn codebook(config: Option<&Path>, arch: Architecture, out: Option<&Path>, points: usize) -> Result<()> {
    let plan = plan_or_default(config)?;
    let r = plan.diversity(&plan.system, arch);
    if r == 0 {
        bail!("{arch} cannot realize R >= 1 at this bandwidth");
    }
    let system = SystemConfig { diversity: r, ..plan.system.clone() };
    let mut w = sink(out)?;
    write_codebook(&mut w, &system, arch, points)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Power { config, out } => power(config.as_deref(), out.as_deref()),
        Command::Hardware(args) => hardware(&args),
        Command::Codebook { config, arch, out, points } => codebook(config.as_deref(), arch, out.as_deref(), points),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
