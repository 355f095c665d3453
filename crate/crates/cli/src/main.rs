use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};
use meledit_cli::commands;
use meledit_cli::config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "meledit",
    version,
    about = "Score-guided editing of synthetic mel grids via reverse diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Config file; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeded trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise schedule start.
    #[arg(long)]
    beta0: Option<f64>,
    /// Noise schedule end.
    #[arg(long)]
    beta1: Option<f64>,
    /// Reverse integration steps.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Plain reverse-diffusion synthesis from the configured prior.
    Synth(RunArgs),
    /// Region-confined pitch edits plus the mel-shift comparison arm.
    EditPitch(RunArgs),
    /// Content replacement against a hard-splice baseline.
    EditContent(RunArgs),
    /// Pitch-edit trials repeated for every kernel in the sweep list.
    Sweep(RunArgs),
}

fn build_config(args: &RunArgs) -> meledit_cli::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&Overrides {
        seed: args.seed,
        trials: args.trials,
        out: args.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        beta0: args.beta0,
        beta1: args.beta1,
        steps: args.steps,
    });
    Ok(cfg)
}

fn run() -> meledit_cli::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Synth(a) => commands::cmd_synth(&build_config(a)?),
        Command::EditPitch(a) => commands::cmd_edit_pitch(&build_config(a)?),
        Command::EditContent(a) => commands::cmd_edit_content(&build_config(a)?),
        Command::Sweep(a) => commands::cmd_sweep(&build_config(a)?),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        process::exit(e.exit_code());
    }
}
