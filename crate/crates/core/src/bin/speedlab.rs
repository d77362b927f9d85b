use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use speedlab::cli::{demo, run_scenario, validate, Failure, RunOptions, ScenarioConfig, DEMOS, EXIT_INVALID};
use speedlab::exec::configure_workers;

/// Spreading speeds and front simulations for periodic competition systems.
#[derive(Parser)]
#[command(name = "speedlab", version)]
struct Cli {
    /// Repeat the speed computation with nt and nx doubled and report a
    /// Richardson estimate.
    #[arg(long, global = true)]
    refine: bool,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// No progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print the resolved plan.
    Validate { config: PathBuf },
    /// Run a shipped scenario, or print its config with --print.
    Demo {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(DEMOS))]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        print: bool,
    },
}

fn report_failure(f: &Failure) -> ExitCode {
    let body = serde_json::json!({ "status": "validation-failure", "reason": f });
    eprintln!("{}", serde_json::to_string_pretty(&body).expect("serializable"));
    ExitCode::from(f.code as u8)
}

fn execute(config: ScenarioConfig, opts: &RunOptions) -> ExitCode {
    let outcome = run_scenario(&config, opts);
    if !opts.quiet {
        eprintln!(
            "speedlab: {} ({} files in {})",
            outcome.report["status"].as_str().unwrap_or("?"),
            outcome.files.len(),
            config.output.display()
        );
    }
    ExitCode::from(outcome.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        configure_workers(n);
    }
    let opts = RunOptions { refine: cli.refine, quiet: cli.quiet, ..RunOptions::default() };
    match cli.command {
        Command::Run { config, out } => match ScenarioConfig::load(&config) {
            Ok(mut cfg) => {
                if let Some(out) = out {
                    cfg.output = out;
                }
                execute(cfg, &opts)
            }
            Err(f) => report_failure(&f),
        },
        Command::Validate { config } => {
            match ScenarioConfig::load(&config).and_then(|c| validate(&c)) {
                Ok(plan) => {
                    println!("{}", serde_json::to_string_pretty(&plan.summary()).expect("serializable"));
                    ExitCode::SUCCESS
                }
                Err(f) => report_failure(&f),
            }
        }
        Command::Demo { name, out, print } => {
            let Some(mut cfg) = demo(&name) else {
                eprintln!("unknown demo {name}");
                return ExitCode::from(EXIT_INVALID as u8);
            };
            if let Some(out) = out {
                cfg.output = out;
            }
            if print {
                println!("{}", cfg.to_json());
                return ExitCode::SUCCESS;
            }
            execute(cfg, &opts)
        }
    }
}
