use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l2e::cli::{
    apply_overrides, cmd_bound, cmd_divergence, cmd_generate, cmd_run, load_config, CliOverrides,
};

/// Transfer-learning laboratory for drifting task streams.
#[derive(Parser)]
#[command(name = "l2e", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate stream CSVs and a manifest from the config.
    Generate(CommonArgs),
    /// Run every configured method over every seed and write reports.
    Run(CommonArgs),
    /// Measure divergence evolution along the stream's chains.
    Divergence(CommonArgs),
    /// Compute a bound report (plug-in) or run the oracle sweep.
    Bound(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the config's seed list with this one seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Comma-separated subset of methods to run.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run) = match &cli.command {
        Command::Generate(a) => (a, 0),
        Command::Run(a) => (a, 1),
        Command::Divergence(a) => (a, 2),
        Command::Bound(a) => (a, 3),
    };
    let outcome = (|| -> l2e::Result<usize> {
        let mut cfg = load_config(&args.config)?;
        apply_overrides(
            &mut cfg,
            &CliOverrides {
                out: args.out.clone(),
                seed_override: args.seed_override,
                methods: args.method.clone(),
            },
        )?;
        match run {
            0 => {
                let out = cmd_generate(&cfg)?;
                println!("wrote {} files to {}", out.files.len() + 1, out.dir.display());
                Ok(0)
            }
            1 => {
                let out = cmd_run(&cfg)?;
                println!("wrote {}", out.summary.display());
                println!("wrote {}", out.results.display());
                Ok(out.failures)
            }
            2 => {
                let out = cmd_divergence(&cfg)?;
                println!("wrote {}", out.path.display());
                Ok(0)
            }
            _ => {
                let out = cmd_bound(&cfg)?;
                println!("wrote {}", out.path.display());
                Ok(0)
            }
        }
    })();
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} run(s) failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
