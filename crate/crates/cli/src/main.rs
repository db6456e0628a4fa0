use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use collapse_core::model::{LevelOrder, LevelOrders};

use collapse_kit::config::parse_grid;
use collapse_kit::{cmd_cochran, cmd_model, cmd_property_batch, cmd_table, write_report, Check, CliError, OutputFormat, RunConfig, Suite};

/// Homogeneity, collapsibility and A-collapsibility checks for tables and
/// continuous models.
#[derive(Parser)]
#[command(name = "collapse-kit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact checks on a long-format CSV table with y, x, w, count columns
    Table {
        csv: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Order levels by first appearance instead of numerically
        #[arg(long)]
        first_appearance: bool,
    },
    /// Numerical checks on a continuous model configuration
    Model {
        config: PathBuf,
        /// `auto` or `y=lo:hi:n,x=lo:hi:n,w=lo:hi:n`
        #[arg(long)]
        grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Cochran decomposition from a covariance matrix (.json) or CSV sample
    Cochran {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Seeded randomized property suites
    Batch {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
        suite: Vec<Suite>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration JSON; flags override it
    #[arg(long)]
    run_config: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    checks: Vec<Check>,
    /// Tolerance override, `check=value`; repeatable
    #[arg(long = "tol")]
    tolerances: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Include full dependence and quantile arrays
    #[arg(long)]
    emit_fields: bool,
}

impl Common {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.run_config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if !self.checks.is_empty() {
            cfg.checks = self.checks.clone();
        }
        for t in &self.tolerances {
            let (name, value) = t
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("--tol expects check=value, got {t:?}")))?;
            let check = <Check as clap::ValueEnum>::from_str(name.trim(), true)
                .map_err(|_| CliError::Input(format!("unknown check {name:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad tolerance {value:?}")))?;
            cfg.tolerances.insert(check, value);
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        cfg.emit_fields |= self.emit_fields;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (report, common) = match &cli.command {
        Command::Table {
            csv,
            common,
            first_appearance,
        } => {
            let mut cfg = common.config()?;
            if *first_appearance {
                cfg.level_order = LevelOrders {
                    y: LevelOrder::FirstAppearance,
                    x: LevelOrder::FirstAppearance,
                    w: LevelOrder::FirstAppearance,
                };
            }
            (cmd_table(csv, &cfg)?, common)
        }
        Command::Model { config, grid, common } => {
            let mut cfg = common.config()?;
            if let Some(g) = grid {
                cfg.grid = parse_grid(g)?;
            }
            (cmd_model(config, &cfg)?, common)
        }
        Command::Cochran { input, common } => (cmd_cochran(input, &common.config()?)?, common),
        Command::Batch {
            seed,
            count,
            suite,
            common,
        } => {
            let mut cfg = common.config()?;
            cfg.seed = Some(*seed);
            (cmd_property_batch(&cfg, *count, suite)?, common)
        }
    };
    write_report(&report, report.config.format, common.out.as_deref().map(Path::new))?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    // Usage errors are input errors (exit 1); 2 is kept for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("collapse-kit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
