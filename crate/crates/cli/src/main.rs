use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use undergrad::harness::{
    plot, registry_entry, run_experiment, verify_with, ExperimentConfig, RunContext, RunSummary, Suite,
    VerifyOptions, REGISTRY,
};
use undergrad::par::Execution;
use undergrad::Error;

#[derive(Parser)]
#[command(name = "undergrad", version, about = "Adaptive dual extrapolation experiments")]
struct Cli {
    /// Worker threads for independent runs (1 = sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON experiment config or a registered experiment.
    Run(RunArgs),
    /// Run an invariant battery: geometry, lemmas, algorithms or rates.
    Verify {
        #[arg(long)]
        suite: String,
        /// Trials per property sweep.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Turn run summaries into log-log plot data and an SVG.
    Plot {
        /// Glob matching `*_summary.json` files.
        #[arg(long)]
        input: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the registered experiments.
    List,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "experiment", required_unless_present = "experiment")]
    config: Option<PathBuf>,
    /// Registered experiment name (see `list`).
    #[arg(long)]
    experiment: Option<String>,
    /// Output directory for a registered experiment.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Record wall-clock nanoseconds in the CSVs.
    #[arg(long)]
    wall_clock: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let execution = Execution::from_threads(cli.threads);
    let code = match cli.command {
        Command::Run(args) => run(args, execution),
        Command::Verify { suite, trials } => verify(&suite, trials, execution),
        Command::Plot { input, out } => match plot(&input, &out) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                0
            }
            Err(e) => report(e),
        },
        Command::List => {
            for name in REGISTRY {
                match registry_entry(name, &PathBuf::from("results")) {
                    Ok(exp) => println!("{name:6} {}", exp.description),
                    Err(e) => return ExitCode::from(report(e) as u8),
                }
            }
            0
        }
    };
    ExitCode::from(code as u8)
}

fn report(e: Error) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn run(args: RunArgs, execution: Execution) -> i32 {
    let configs = match (&args.config, &args.experiment) {
        (Some(path), _) => ExperimentConfig::load(path).map(|c| vec![c]),
        (None, Some(name)) => registry_entry(name, &args.out).map(|e| e.configs),
        (None, None) => unreachable!("clap enforces one of --config/--experiment"),
    };
    let mut configs = match configs {
        Ok(c) => c,
        Err(e) => return report(e),
    };
    let ctx = RunContext {
        execution,
        wall_clock: args.wall_clock,
    };
    for cfg in &mut configs {
        if let Err(e) = cfg.apply_seed_env() {
            return report(e);
        }
        match run_experiment(cfg, &ctx) {
            Ok(summary) => print_summary(&summary, cfg),
            Err(e) => return report(e),
        }
    }
    0
}

fn print_summary(s: &RunSummary, cfg: &ExperimentConfig) {
    let last = s.mean_gap.last().copied().unwrap_or(f64::NAN);
    let slope = s.fit.as_ref().map(|f| format!("{:.3}", f.slope)).unwrap_or_else(|| "n/a".into());
    println!(
        "{:16} {} T={} seeds={} final mean gap {last:.3e} slope {slope} -> {}",
        s.label,
        s.problem,
        s.iterations,
        s.seeds.len(),
        cfg.output_dir.display()
    );
}

fn verify(suite: &str, trials: usize, execution: Execution) -> i32 {
    let suite: Suite = match suite.parse() {
        Ok(s) => s,
        Err(e) => return report(e),
    };
    let opts = VerifyOptions {
        trials,
        execution,
        ..VerifyOptions::default()
    };
    let report = verify_with(suite, &opts);
    println!("{report}");
    report.exit_code()
}
