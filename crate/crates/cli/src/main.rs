use std::path::PathBuf;
use std::process::ExitCode;

use cdkernel_cli::models::REGISTRY;
use cdkernel_cli::run_file;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdkernel", version, about = "Christoffel-Darboux kernel experiments")]
struct Cli {
    /// Print the model registry and exit.
    #[arg(long)]
    list_models: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.list_models {
        for (id, about) in REGISTRY {
            println!("{id:<28} {about}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(Command::Run { config, out, jobs }) = cli.command else {
        eprintln!("nothing to do; see --help");
        return ExitCode::from(2);
    };
    match run_file(&config, &out, jobs as usize) {
        Ok(status) => {
            for f in &status.failures {
                eprintln!("check failed: {f}");
            }
            if status.exit_code == 0 {
                println!("all checks passed; outputs in {}", out.display());
            }
            ExitCode::from(status.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
