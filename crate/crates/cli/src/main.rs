use clap::{Parser, Subcommand};
use geogen_cli::{list_experiments, run_config_file};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "geogen",
    about = "Runs manifold-generator experiments from JSON configs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Output directory override (takes precedence over GEOGEN_OUT and
        /// the config's own out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run { config, out } => match run_config_file(&config, out.as_deref()) {
            Ok((report, out_dir)) => {
                let verdict = if report.pass { "pass" } else { "fail" };
                println!(
                    "{}: {} ({})",
                    report.experiment,
                    verdict,
                    out_dir.join("report.json").display()
                );
                for f in &report.failures {
                    println!("  missed: {f}");
                }
                if report.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
