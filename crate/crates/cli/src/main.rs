use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entangled_cli::commands::{self, Overrides};

/// Run entangled ergodic average experiments from JSON configs.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on a
/// configuration, input or I/O error.
#[derive(Parser, Debug)]
#[command(name = "entangled", version)]
struct Cli {
    /// Worker threads for the averaging engine.
    #[arg(long, global = true, env = "ENTANGLED_WORKERS")]
    workers: Option<usize>,
    /// Memo budget of the cached strategy, in MiB.
    #[arg(long, global = true, env = "ENTANGLED_CACHE_MB")]
    cache_mb: Option<usize>,
    /// Output directory (default: the config's `output`, else results/<config name>).
    #[arg(long, global = true, env = "ENTANGLED_OUT")]
    out: Option<PathBuf>,
    /// Seed for seeded sample points, replacing the config's.
    #[arg(long, global = true, env = "ENTANGLED_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Averages along a schedule with distances to a predicted limit.
    Run { config: PathBuf },
    /// Split a function into reversible and stable parts.
    Decompose { config: PathBuf },
    /// Twisted-compactness and joint-boundedness probes.
    Probe { config: PathBuf },
    /// Regenerate the reference fixtures in a directory and compare.
    Fixtures {
        dir: PathBuf,
        /// Rewrite the stored reference values instead of comparing.
        #[arg(long)]
        update: bool,
    },
    /// Class-N curve of a weight or explicit sequence.
    Weights { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let ov = Overrides { workers: cli.workers, cache_mb: cli.cache_mb, out: cli.out, seed: cli.seed };
    let result = match &cli.command {
        Command::Run { config } => commands::run(config, &ov),
        Command::Decompose { config } => commands::decompose(config, &ov),
        Command::Probe { config } => commands::probe(config, &ov),
        Command::Fixtures { dir, update } => commands::fixtures(dir, *update),
        Command::Weights { config } => commands::weights(config, &ov),
    };
    match result {
        Ok(v) if v.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
