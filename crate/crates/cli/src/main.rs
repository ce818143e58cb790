//! `lottery-mfe`: solve, sweep and simulate the lottery incentive scheme.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{BenchmarkTarget, SchemeArg, SimulateArgs, SweepArgs};
use config::{ConfigError, ScenarioConfig};
use io::Output;

/// Core solver error carried through `anyhow`.
#[derive(Debug)]
pub struct CoreError(pub lottery_mfe::Error);

impl std::fmt::Display for CoreError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for CoreError {}

#[derive(Parser)]
#[command(name = "lottery-mfe", version, about = "Mean field equilibria of a lottery-based demand response scheme")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; omitted keys take the study defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides the config `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium at the configured prize.
    SolveMfe,
    /// Solve a range of reward levels.
    Sweep {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Dollars per period, `start:stop:step` or a comma list.
        #[arg(long, conflicts_with = "percents")]
        rewards: Option<String>,
        /// Benchmark return percentages, same syntax.
        #[arg(long)]
        percents: Option<String>,
        /// Grow the surplus bounds with the prize.
        #[arg(long)]
        widen: bool,
    },
    /// Solve the fixed-reward scheme.
    Benchmark {
        /// Total payout per period in dollars.
        #[arg(long, conflicts_with = "percent", required_unless_present = "percent")]
        reward: Option<f64>,
        /// Share of each action's savings returned, in percent.
        #[arg(long)]
        percent: Option<f64>,
    },
    /// Simulate one home's thermostat.
    SimulateHome {
        /// Action index into the table; omitted means the baseline setpoint.
        #[arg(long)]
        action: Option<usize>,
        /// Constant outdoor temperature instead of the ambient CSV.
        #[arg(long, value_name = "CELSIUS")]
        constant_ambient: Option<f64>,
        /// Days simulated with a constant ambient.
        #[arg(long, default_value_t = 1)]
        days: u32,
    },
    /// Recompute action costs, coupons and savings from ambient and price data.
    BuildActionTable,
    /// Check solver invariants on the configured problem.
    Validate,
}

fn load_config(common: &Common) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli.common)?;
    let scenario = cfg.resolve()?;
    rayon::ThreadPoolBuilder::new().num_threads(cli.common.threads).build_global()?;
    let out = Output::create(&cli.common.out_dir, cfg.hash())?;
    std::fs::write(out.path("config.json"), cfg.to_json() + "\n")?;

    match cli.command {
        Command::SolveMfe => commands::solve_mfe(&scenario, &out)?,
        Command::Sweep { scheme, rewards, percents, widen } => {
            let args = SweepArgs {
                scheme,
                rewards: rewards.as_deref().map(commands::parse_range).transpose()?,
                percents: percents.as_deref().map(commands::parse_range).transpose()?,
                widen,
            };
            commands::sweep(&scenario, &out, &args)?
        }
        Command::Benchmark { reward, percent } => {
            let target = match (reward, percent) {
                (Some(r), _) => BenchmarkTarget::Reward(r),
                (None, Some(p)) => BenchmarkTarget::Percent(p),
                (None, None) => unreachable!("clap requires one"),
            };
            commands::benchmark(&scenario, &out, target)?
        }
        Command::SimulateHome { action, constant_ambient, days } => {
            commands::simulate(&scenario, &out, &SimulateArgs { action, constant_ambient, days })?
        }
        Command::BuildActionTable => commands::build_table(&scenario, &out)?,
        Command::Validate => return commands::validate(&scenario, &out),
    }
    Ok(true)
}

fn report(kind: &str, field: Option<&str>, message: &str, detail: &str) {
    eprintln!("{}", json!({"error": kind, "field": field, "message": message}));
    if !detail.is_empty() {
        eprintln!("{detail}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            report("usage", None, first, text.trim_end());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            report("validation_failed", None, "one or more invariant checks failed", "");
            ExitCode::from(1)
        }
        Err(e) => {
            if let Some(c) = e.downcast_ref::<ConfigError>() {
                report(c.kind(), c.field(), &c.to_string(), "configuration rejected; nothing was written");
                return ExitCode::from(2);
            }
            let kind = e.downcast_ref::<CoreError>().map_or("runtime", |c| c.0.kind());
            let detail: Vec<String> = e.chain().skip(1).map(|c| format!("  caused by: {c}")).collect();
            report(kind, None, &e.to_string(), &detail.join("\n"));
            ExitCode::from(1)
        }
    }
}
