use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dchaos::cli::{self, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Density,
    Distfn,
    Classify,
    Merge,
    Pipeline,
    Uniform,
    Oracle,
}

/// Li-Yorke and distributional chaos statistics along index sequences.
#[derive(Parser, Debug)]
#[command(name = "dchaos", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (flat key = value with [sections]).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "checkpoint-stride")]
    checkpoint_stride: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.command {
        Command::Density => Subcommand::Density,
        Command::Distfn => Subcommand::Distfn,
        Command::Classify => Subcommand::Classify,
        Command::Merge => Subcommand::Merge,
        Command::Pipeline => Subcommand::Pipeline,
        Command::Uniform => Subcommand::Uniform,
        Command::Oracle => Subcommand::Oracle,
    };
    let mut overrides = Vec::new();
    if let Some(h) = args.horizon {
        overrides.push(("", "horizon", h.to_string()));
    }
    if let Some(s) = args.seed {
        overrides.push(("", "seed", s.to_string()));
    }
    if let Some(o) = &args.out {
        overrides.push(("", "out", o.display().to_string()));
    }
    if let Some(c) = args.checkpoint_stride {
        overrides.push(("", "checkpoint_stride", c.to_string()));
    }
    let result = cli::load_config(args.config.as_deref(), &overrides).and_then(|cfg| cli::run(cmd, &cfg));
    match &result {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if !o.passed {
                eprintln!("{}: verification failed", cmd.name());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(cli::exit_code(&result) as u8)
}
