use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jcsim::scenario::{self, ScenarioError, SweepSpec};

#[derive(Parser)]
#[command(name = "jcsim", version, about = "Two-atom Jaynes-Cummings scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario config file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $JCSIM_OUT or ./jcsim-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a setting, e.g. --override field.nbar_th=1
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run one scenario per value of a parameter
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter(s) to vary, comma separated (default: [sweep] parameter)
        #[arg(long)]
        parameter: Option<String>,
        /// Values, comma separated; use a:b tuples for several parameters
        #[arg(long)]
        values: Option<String>,
        /// Worker threads across sweep points
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn execute(cli: Cli) -> Result<(), ScenarioError> {
    match cli.command {
        Command::Run { common } => {
            let s = scenario::load(&common.config, &common.overrides)?;
            let out = common.out.unwrap_or_else(scenario::default_out_dir);
            let result = scenario::run(&s, &out)?;
            log::info!("wrote {} files to {}", result.files().len(), out.display());
        }
        Command::Sweep { common, parameter, values, threads } => {
            let s = scenario::load(&common.config, &common.overrides)?;
            let spec = match (parameter, values, &s.sweep) {
                (Some(p), Some(v), _) => SweepSpec::parse(&p, &v)?,
                (None, None, Some(sw)) => sw.clone(),
                (Some(_), None, _) | (None, Some(_), _) => {
                    return Err(ScenarioError::Parse("--parameter and --values must be given together".into()))
                }
                (None, None, None) => {
                    return Err(ScenarioError::Parse("no sweep given: add a [sweep] section or --parameter/--values".into()))
                }
            };
            let out = common.out.unwrap_or_else(scenario::default_out_dir);
            let result = scenario::sweep(&s, &spec, &out, threads)?;
            log::info!("wrote {} sweep points to {}", result.points.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
