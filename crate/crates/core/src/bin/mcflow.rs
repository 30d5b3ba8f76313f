use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcflow::scenario::{self, exit, RunConfig, ScenarioOptions, OUT_ENV, PRESETS};
use mcflow::{FlowError, Result};

#[derive(Parser)]
#[command(
    name = "mcflow",
    version,
    about = "Graph mean curvature flow with Neumann boundary data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write trace, report and summary files.
    Run {
        /// Config file (.toml or .json).
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Run a built-in preset instead of a config file.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory.
        #[arg(long, env = OUT_ENV)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run even when the initial data violate the boundary condition.
        #[arg(long)]
        override_compatibility: bool,
        /// Serial node evaluation; traces are bitwise reproducible.
        #[arg(long)]
        reference_mode: bool,
    },
    /// List the built-in scenarios.
    Presets {
        /// Print the full config of one preset as TOML.
        #[arg(long, value_name = "NAME")]
        dump: Option<String>,
    },
    /// Recompute the report from a stored trace and compare it byte for byte.
    Replay {
        trace: PathBuf,
        report: PathBuf,
        /// Switch a check off before recomputing.
        #[arg(long, value_name = "CHECK")]
        disable: Vec<String>,
        /// Switch a check on before recomputing.
        #[arg(long, value_name = "CHECK")]
        enable: Vec<String>,
    },
}

fn unknown_preset(name: &str) -> FlowError {
    let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
    FlowError::Config(format!(
        "unknown preset `{name}`; available: {}",
        names.join(", ")
    ))
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run {
            config,
            preset,
            out,
            seed,
            override_compatibility,
            reference_mode,
        } => {
            let cfg = match (config, preset) {
                (Some(path), _) => RunConfig::load(&path)?,
                (None, Some(name)) => {
                    scenario::preset(&name).ok_or_else(|| unknown_preset(&name))?
                }
                (None, None) => unreachable!("clap requires one of config or preset"),
            };
            let opts = ScenarioOptions {
                out_dir: out,
                seed,
                override_compatibility,
                reference_mode,
            };
            let outcome = scenario::run_scenario(&cfg, &opts)?;
            print!("{}", outcome.report.summary_table());
            println!("wrote {}", outcome.out_dir.display());
            Ok(outcome.exit_code())
        }
        Command::Presets { dump: None } => {
            print!("{}", scenario::list_presets());
            Ok(exit::PASS)
        }
        Command::Presets { dump: Some(name) } => {
            let cfg = scenario::preset(&name).ok_or_else(|| unknown_preset(&name))?;
            print!("{}", cfg.to_toml()?);
            Ok(exit::PASS)
        }
        Command::Replay {
            trace,
            report,
            disable,
            enable,
        } => {
            let overrides: Vec<(String, bool)> = disable
                .into_iter()
                .map(|n| (n, false))
                .chain(enable.into_iter().map(|n| (n, true)))
                .collect();
            let outcome = scenario::replay(&trace, &report, &overrides)?;
            print!("{}", outcome.report.summary_table());
            if outcome.retoggled {
                println!("report recomputed with modified checks");
            } else if outcome.identical {
                println!("report reproduced byte for byte");
            } else {
                println!("report differs from {}", report.display());
            }
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            scenario::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
