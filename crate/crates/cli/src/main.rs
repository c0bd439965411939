use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use optomech_cli::figures::{self, Figure};
use optomech_cli::verify::{self, Level, VerifyOptions};
use optomech_cli::{run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "optomech", version, about = "Cooling of a parametrically driven optomechanical cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its CSV tables and plots.
    Run {
        file: PathBuf,
        /// Output directory (default: the scenario's `output.dir`, else the
        /// current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the library against closed forms and oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
        /// Cavity Fock cutoff for the full-model checks.
        #[arg(long, default_value_t = 12)]
        cav_dim: usize,
        /// Mechanical Fock cutoff for the full-model checks.
        #[arg(long, default_value_t = 12)]
        mech_dim: usize,
    },
    /// Reproduce one of the built-in figures.
    Figure {
        #[arg(value_enum)]
        which: FigureArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
    Fig3,
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("OPTOMECH_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("OPTOMECH_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::Run { file, out } => {
            let scenario = Scenario::load(&file)?;
            let dir = out
                .or_else(|| scenario.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            print_written(&run_scenario(&scenario, &dir)?);
        }
        Command::Figure { which, out } => {
            let fig = match which {
                FigureArg::Fig1 => Figure::Fig1,
                FigureArg::Fig2 => Figure::Fig2,
                FigureArg::Fig3 => Figure::Fig3,
            };
            print_written(&run_scenario(&figures::scenario(fig)?, &out)?);
        }
        Command::Verify {
            level,
            cav_dim,
            mech_dim,
        } => {
            let opts = VerifyOptions {
                level: match level {
                    LevelArg::Fast => Level::Fast,
                    LevelArg::Full => Level::Full,
                },
                cav_dim,
                mech_dim,
            };
            let checks = verify::run(&opts, |c| println!("{c}"));
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} passed, {failed} failed", checks.len() - failed);
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
