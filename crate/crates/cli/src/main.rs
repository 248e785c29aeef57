use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spm_cli::{load, output_dir, run, validate, CliError, THREADS_ENV};

#[derive(Parser)]
#[command(name = "spm", version, about = "Stochastic porous-media experiments")]
struct Cli {
    /// Worker threads for Monte Carlo (default: $SPM_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn fail(e: &CliError, out: Option<&std::path::Path>) -> ExitCode {
    let body = serde_json::to_string_pretty(&e.to_json()).expect("error json");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), format!("{body}\n"));
        }
    }
    eprintln!("{body}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads.filter(|n| *n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    match cli.command {
        Command::Run { config, out } => {
            let (cfg, raw) = match load(&config) {
                Ok(v) => v,
                Err(e) => return fail(&e, out.as_deref()),
            };
            let dir = output_dir(&cfg, out.as_deref());
            match run(&cfg, &raw, &dir) {
                Ok(outcome) => {
                    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary json"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, Some(&dir)),
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok((cfg, _)) => {
                let d = validate(&cfg);
                println!("{}", serde_json::to_string_pretty(&d).expect("diagnostics json"));
                if d.ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(spm_cli::error::EXIT_CONFIG as u8)
                }
            }
            Err(e) => fail(&e, None),
        },
    }
}
