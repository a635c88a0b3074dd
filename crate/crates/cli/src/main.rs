use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dbar_cli::{parse_config_with, run, EXIT_USAGE};

/// Exact Gaussian-weighted dbar laboratory.
#[derive(Parser)]
#[command(name = "dbar", version)]
struct Cli {
    /// Flat `section.key = value` configuration file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides DBAR_OUTPUT_DIR and io.output).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (overrides DBAR_JOBS and experiment.jobs).
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Seeded checks of the exact identities.
    Verify,
    /// Minimal-norm solve of a closed form.
    Solve {
        #[arg(long)]
        form: PathBuf,
    },
    /// Solves across truncation dimensions.
    Sweep,
    /// Projected Lempert data.
    Lempert {
        #[arg(long)]
        p: Option<u32>,
    },
    /// Monte Carlo norm identification of a form.
    Mc {
        #[arg(long)]
        form: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE as u8);
            }
        },
        None => String::new(),
    };
    let mut overrides: Vec<(&str, String)> = Vec::new();
    if let Ok(dir) = std::env::var("DBAR_OUTPUT_DIR") {
        overrides.push(("io.output", dir));
    }
    if let Ok(jobs) = std::env::var("DBAR_JOBS") {
        overrides.push(("experiment.jobs", jobs));
    }
    match &cli.command {
        Some(Cmd::Verify) => overrides.push(("command", "verify".into())),
        Some(Cmd::Sweep) => overrides.push(("command", "sweep".into())),
        Some(Cmd::Solve { form }) => {
            overrides.push(("command", "solve".into()));
            overrides.push(("io.form", form.display().to_string()));
        }
        Some(Cmd::Mc { form }) => {
            overrides.push(("command", "mc".into()));
            overrides.push(("io.form", form.display().to_string()));
        }
        Some(Cmd::Lempert { p }) => {
            overrides.push(("command", "lempert".into()));
            if let Some(p) = p {
                overrides.push(("lempert.p", p.to_string()));
            }
        }
        None => {}
    }
    if let Some(dir) = &cli.output {
        overrides.push(("io.output", dir.display().to_string()));
    }
    if let Some(j) = cli.jobs {
        overrides.push(("experiment.jobs", j.to_string()));
    }
    let cfg = match parse_config_with(&text, &overrides) {
        Ok(cfg) => cfg,
        Err(errors) => {
            for e in errors {
                eprintln!("{e}");
            }
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    ExitCode::from(run(&cfg) as u8)
}
