use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use convolve_cli::config::{ExperimentSpec, Group};
use convolve_cli::plot::{load_summary, plot_spec};
use convolve_cli::{execute, Experiment, Registry, RunContext};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "convolve",
    version,
    about = "Stochastic convolution rate and inequality experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strong error rates of time discretisations.
    Rates(RunArgs),
    /// Monte Carlo checks of maximal and tail inequalities.
    Ineq(RunArgs),
    /// Deterministic scheme probes.
    Probe(RunArgs),
    /// Print the registered experiments.
    List {
        #[arg(long)]
        json: bool,
        /// Print the default configuration of one experiment.
        #[arg(long, value_name = "ID")]
        show: Option<String>,
    },
    /// Write a plot description for a run summary.
    PlotData {
        /// Summary JSON written by a run.
        #[arg(long)]
        summary: PathBuf,
        /// Image the plotting script should produce.
        #[arg(long)]
        output: PathBuf,
        /// Where to write the description; stdout when absent.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON configuration.
    #[arg(long, env = "CONVOLVE_CONFIG")]
    config: Option<PathBuf>,
    /// Registered experiment id; runs its default configuration unless --config is given.
    #[arg(long, env = "CONVOLVE_EXPERIMENT")]
    experiment: Option<String>,
    #[arg(long, env = "CONVOLVE_OUT", default_value = "results")]
    out: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long, env = "CONVOLVE_SEED")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "CONVOLVE_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Also write per-sample errors of rate experiments.
    #[arg(long)]
    records: bool,
}

fn run(group: Group, args: RunArgs) -> Result<bool> {
    let registry = Registry::default();
    let (experiment, mut spec): (&dyn Experiment, ExperimentSpec) =
        match (&args.config, &args.experiment) {
            (Some(path), id) => {
                let spec = ExperimentSpec::load(path)?;
                let experiment = match id {
                    Some(id) => registry.get(id)?,
                    None => registry.resolve(&spec)?,
                };
                (experiment, spec)
            }
            (None, Some(id)) => {
                let experiment = registry.get(id)?;
                (
                    experiment,
                    ExperimentSpec::from_toml(experiment.default_config())?,
                )
            }
            (None, None) => bail!("pass --config FILE or --experiment ID"),
        };
    if spec.group() != group {
        bail!(
            "config of kind `{}` belongs to the `{}` subcommand, not `{}`",
            spec.kind(),
            spec.group().name(),
            group.name()
        );
    }
    if let Some(seed) = args.seed {
        spec.set_seed(seed)?;
    }
    let ctx = RunContext {
        workers: args.workers,
        records: args.records,
    };
    let result = execute(experiment, &spec, &args.out, &ctx)?;
    println!(
        "{} {} -> {}",
        experiment.id(),
        if result.passed() { "PASS" } else { "FAIL" },
        result.summary_path.display()
    );
    Ok(result.passed())
}

fn list(as_json: bool, show: Option<String>) -> Result<()> {
    let registry = Registry::default();
    if let Some(id) = show {
        print!("{}", registry.get(&id)?.default_config());
        return Ok(());
    }
    if as_json {
        let entries: Vec<_> = registry
            .iter()
            .map(|e| json!({ "id": e.id(), "group": e.group(), "description": e.description() }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&entries)?);
    } else {
        for e in registry.iter() {
            println!("{:<30} {:<6} {}", e.id(), e.group().name(), e.description());
        }
    }
    Ok(())
}

fn plot_data(summary: &Path, output: &Path, spec_out: Option<&Path>) -> Result<()> {
    let spec = plot_spec(&load_summary(summary)?, output)?;
    let text = serde_json::to_string_pretty(&spec)?;
    match spec_out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Rates(a) => run(Group::Rates, a),
        Command::Ineq(a) => run(Group::Ineq, a),
        Command::Probe(a) => run(Group::Probe, a),
        Command::List { json, show } => list(json, show).map(|_| true),
        Command::PlotData {
            summary,
            output,
            spec_out,
        } => plot_data(&summary, &output, spec_out.as_deref()).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
