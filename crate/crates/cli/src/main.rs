use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mvd_cli::{execute, parse_config, write_outputs, CliError, RunConfig, StudyKind};
use mvd_core::BuiltinProblem;

#[derive(Parser)]
#[command(
    name = "mvd",
    version,
    about = "Explicit solver and verification studies for a nonlocal age-structured population model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Config file (`key = value` lines, see the README).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of grid levels; overrides `levels`.
    #[arg(long)]
    levels: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study named in the config.
    Run(ConfigArgs),
    /// Convergence against the config's exact solution.
    Convergence(ConfigArgs),
    /// Local discretization error of the exact solution.
    Consistency(ConfigArgs),
    /// Perturbation-pair stability probe.
    Stability(ConfigArgs),
    /// Run a built-in example with its default setup.
    Examples {
        /// example1, example2 or example3.
        id: BuiltinProblem,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 7)]
        m_prime: usize,
        #[arg(long, default_value_t = 0.4)]
        r: f64,
        #[arg(long)]
        t_final: Option<f64>,
        /// Output directory [default: out/<id>].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in examples.
    List,
}

fn load(args: &ConfigArgs, kind: Option<StudyKind>) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read {}", args.config.display()))?;
    let mut cfg = parse_config(&text)
        .map_err(CliError::from)
        .with_context(|| format!("in {}", args.config.display()))?;
    if let Some(kind) = kind {
        cfg.study = kind;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(levels) = args.levels {
        cfg.levels = levels;
    }
    Ok(cfg)
}

fn execute_and_write(cfg: &RunConfig) -> anyhow::Result<()> {
    let outputs = execute(cfg)?;
    for path in write_outputs(&cfg.output_dir, &outputs)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    let cfg = match command {
        Command::List => {
            for which in BuiltinProblem::ALL {
                println!("{:<10} {}", which.id(), which.description());
            }
            return Ok(());
        }
        Command::Run(args) => load(&args, None)?,
        Command::Convergence(args) => load(&args, Some(StudyKind::Convergence))?,
        Command::Consistency(args) => load(&args, Some(StudyKind::Consistency))?,
        Command::Stability(args) => load(&args, Some(StudyKind::Stability))?,
        Command::Examples {
            id,
            levels,
            m_prime,
            r,
            t_final,
            out,
        } => RunConfig {
            m_prime,
            r,
            t_final,
            levels,
            study: match id {
                BuiltinProblem::Example2 => StudyKind::SelfConvergence,
                _ => StudyKind::Convergence,
            },
            output_dir: out.unwrap_or_else(|| PathBuf::from("out").join(id.id())),
            ..RunConfig::builtin(id)
        },
    };
    execute_and_write(&cfg)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<CliError>())
        .map_or(1, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
