use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtrap_cli::{presets, run, RunArgs};
use qtrap_core::coupling::CouplingMode;

#[derive(Parser)]
#[command(
    name = "qtrap",
    version,
    about = "Two-level atom in a q-deformed trap: scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the name of a bundled preset).
    Run {
        scenario: PathBuf,
        /// Output directory; overrides QTRAP_OUT and the scenario's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Coupling-operator evaluation, overriding the scenario.
        #[arg(long, value_parser = ["exact", "paper"])]
        mode: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Bundled scenarios.
    Presets {
        #[command(subcommand)]
        command: PresetsCommand,
    },
}

#[derive(Subcommand)]
enum PresetsCommand {
    List,
    /// Print a preset's JSON.
    Show {
        name: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            scenario,
            out,
            mode,
            threads,
        } => {
            let mode = mode.map(|m| m.parse::<CouplingMode>().expect("validated by clap"));
            match run(RunArgs {
                scenario,
                out,
                mode,
                threads,
            }) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("qtrap: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Presets { command } => match command {
            PresetsCommand::List => {
                for (name, _) in presets::PRESETS {
                    println!("{name}.json");
                }
                ExitCode::SUCCESS
            }
            PresetsCommand::Show { name } => match presets::find(&name) {
                Some(body) => {
                    print!("{body}");
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("qtrap: no preset named {name}");
                    ExitCode::from(2)
                }
            },
        },
    }
}
