use clap::{Parser, Subcommand};
use spellmap_cli::{run, PipelineConfig, RunError, Stage};
use std::path::PathBuf;
use std::process::ExitCode;

/// Typology of recurring unemployed workers: self-organizing map, Ward classes,
/// profiles, transition tables and correspondence analysis.
#[derive(Parser)]
#[command(name = "spellmap", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(short, long, global = true, default_value = "spellmap.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Read and validate the spell file named in [input]
    Ingest,
    /// Generate a seeded synthetic cohort
    Synth,
    /// Keep each individual's latest spell, standardize and discretize
    Code,
    /// Initialize and train the map
    Train,
    /// Ward classes of the code vectors
    Cluster,
    /// Class profiles, qualitative distributions and neighbor distances
    Profile,
    /// Registration/exit transition tables
    Transitions,
    /// Multiple correspondence analysis
    Mca,
    /// SVG figures
    Plot,
    /// Every stage in order
    All,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Stage {
        match c {
            Command::Ingest => Stage::Ingest,
            Command::Synth => Stage::Synth,
            Command::Code => Stage::Code,
            Command::Train => Stage::Train,
            Command::Cluster => Stage::Cluster,
            Command::Profile => Stage::Profile,
            Command::Transitions => Stage::Transitions,
            Command::Mca => Stage::Mca,
            Command::Plot => Stage::Plot,
            Command::All => Stage::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = PipelineConfig::load(&cli.config)
        .map_err(RunError::from)
        .and_then(|config| run(cli.command.into(), &config));
    match result {
        Ok(reports) => {
            for r in reports {
                eprintln!("{}: {} files in {:.2}s", r.stage.name(), r.files.len(), r.seconds);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spellmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
