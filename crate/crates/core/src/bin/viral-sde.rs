use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use viral_sde::commands::{self, Outcome};
use viral_sde::config::{self, Overrides, RunConfig};
use viral_sde::{Error, Result};

#[derive(Parser)]
#[command(
    name = "viral-sde",
    version,
    about = "Stochastic within-host viral dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form extinction criteria, R0 and equilibria.
    Analyze(Common),
    /// Monte-Carlo ensemble of the uncontrolled model.
    Simulate(Common),
    /// Optimal control scenarios on a common noise bundle.
    Control(Common),
    /// Metrics over a one- or two-parameter grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long, required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in parameter set; a `--config` file takes precedence.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                config::parse_config(&text)?
            }
            (None, Some(name)) => config::preset(name)?,
            (None, None) => unreachable!("clap requires one of them"),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            paths: self.paths,
            dt: self.dt,
            t_end: self.t_end,
            output_dir: self.out.clone(),
        });
        cfg.validate().map_err(config::into_config_error)?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Analyze(c) => commands::cmd_analyze(&c.load()?),
        Command::Simulate(c) => commands::cmd_simulate(&c.load()?),
        Command::Control(c) => commands::cmd_control(&c.load()?),
        Command::Sweep(c) => commands::cmd_sweep(&c.load()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
